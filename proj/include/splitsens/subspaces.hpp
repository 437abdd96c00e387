#pragma once

// Tangent-space machinery: orthonormal frames spanning the expanding
// subspace along an orbit, the corresponding adjoint (backward) frames
// whose span is the annihilator of the stable subspace, Lyapunov exponents
// from the forward QR factors, and detection of the number of expanding
// directions.
//
// Both frame passes are plain power iterations with QR re-orthonormalization.
// The forward frame Q_i converges to the expanding subspace at u_i after a
// warm-up number of steps; the backward frame P_i converges to the adjoint
// expanding subspace but only for indices at least warm_up away from the
// trajectory's far end, since it is seeded with a random frame at i = K.
// Callers must respect those validity windows; nothing here hides them.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "splitsens/core.hpp"
#include "splitsens/trajectory.hpp"

namespace splitsens {

inline constexpr int kDefaultWarmUp = 200;

inline Mat random_orthonormal(int n, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat A(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) A(i, j) = gauss(rng);
  return qr_positive(A).Q;
}

struct UnstableFrames {
  int m = 0;
  int warm_up = 0;
  long K = 0;
  // Q[i] for i = 0..K; trustworthy from i = warm_up on.
  std::vector<Mat> Q;
  // log_r[i] holds log diag R of the QR step from i-1 to i, for i = 1..K.
  std::vector<Vec> log_r;

  long first_valid() const { return warm_up; }
  long last_valid() const { return K; }
};

struct AdjointFrames {
  int m = 0;
  int warm_up = 0;
  long K = 0;
  // P[i] for i = 0..K; trustworthy up to i = K - warm_up.
  std::vector<Mat> P;

  long first_valid() const { return 0; }
  long last_valid() const { return K - warm_up; }
};

inline UnstableFrames forward_unstable_frames(const Trajectory& traj, int m,
                                              int warm_up = kDefaultWarmUp,
                                              std::uint64_t seed = 0) {
  const int n = traj.dim();
  if (m < 1 || m > n) throw config_error("forward frames: m must be in [1, dim]");
  if (traj.K() < 2L * warm_up)
    throw config_error("forward frames: trajectory shorter than twice the warm-up");
  UnstableFrames f;
  f.m = m;
  f.warm_up = warm_up;
  f.K = traj.K();
  f.Q.resize(traj.K() + 1);
  f.log_r.resize(traj.K() + 1);
  std::mt19937_64 rng(derive_seed(seed, 1));
  f.Q[0] = random_orthonormal(n, m, rng);
  for (long i = 1; i <= traj.K(); ++i) {
    Mat Z = traj.jac(i - 1) * f.Q[i - 1];
    ThinQR qr = qr_positive(Z);
    Vec lr(m);
    for (int j = 0; j < m; ++j) {
      if (!(qr.r_diag(j) > 0) || !std::isfinite(qr.r_diag(j)))
        throw numerical_error("forward frames: degenerate QR factor at step " +
                              std::to_string(i));
      lr(j) = std::log(qr.r_diag(j));
    }
    f.Q[i] = qr.Q;
    f.log_r[i] = lr;
  }
  return f;
}

inline AdjointFrames backward_adjoint_frames(const Trajectory& traj, int m,
                                             int warm_up = kDefaultWarmUp,
                                             std::uint64_t seed = 0) {
  const int n = traj.dim();
  if (m < 1 || m > n) throw config_error("adjoint frames: m must be in [1, dim]");
  if (traj.K() < 2L * warm_up)
    throw config_error("adjoint frames: trajectory shorter than twice the warm-up");
  AdjointFrames f;
  f.m = m;
  f.warm_up = warm_up;
  f.K = traj.K();
  f.P.resize(traj.K() + 1);
  std::mt19937_64 rng(derive_seed(seed, 2));
  f.P[traj.K()] = random_orthonormal(n, m, rng);
  for (long i = traj.K() - 1; i >= 0; --i) {
    Mat Z = traj.jac(i).transpose() * f.P[i + 1];
    ThinQR qr = qr_positive(Z);
    for (int j = 0; j < m; ++j)
      if (!(qr.r_diag(j) > 0) || !std::isfinite(qr.r_diag(j)))
        throw numerical_error("adjoint frames: degenerate QR factor at step " +
                              std::to_string(i));
    f.P[i] = qr.Q;
  }
  return f;
}

struct LyapunovSpectrum {
  Vec exponents;   // descending for generic initial frames
  Vec std_errors;  // naive i.i.d. standard errors; a scale indicator only,
                   // since consecutive QR factors are correlated
  long steps_used = 0;
};

inline LyapunovSpectrum lyapunov_from_frames(const UnstableFrames& f) {
  const int m = f.m;
  LyapunovSpectrum s;
  s.exponents = Vec::Zero(m);
  s.std_errors = Vec::Zero(m);
  const long lo = f.warm_up + 1;
  const long count = f.K - f.warm_up;
  if (count < 2) throw config_error("lyapunov: too few steps past warm-up");
  for (long i = lo; i <= f.K; ++i) s.exponents += f.log_r[i];
  s.exponents /= static_cast<double>(count);
  Vec ss = Vec::Zero(m);
  for (long i = lo; i <= f.K; ++i) {
    Vec d = f.log_r[i] - s.exponents;
    ss += d.cwiseProduct(d);
  }
  for (int j = 0; j < m; ++j)
    s.std_errors(j) = std::sqrt(ss(j) / (count - 1) / count);
  s.steps_used = count;
  return s;
}

struct UnstableCount {
  int m = 0;
  // True when the count is bracketed: either a contracting exponent was
  // observed past the expanding ones, or the trial dimension already covers
  // the whole tangent space. With d_trial < dim and every trial exponent
  // expanding, m is only a lower bound.
  bool confirmed = false;
  LyapunovSpectrum spectrum;
};

// Count expanding directions from the leading d_trial Lyapunov exponents.
// Any exponent inside [-tol, tol] is treated as indeterminate and raises an
// error: a near-zero exponent means either the tolerance or the trial
// dimension was chosen badly, and silently rounding it would corrupt every
// consumer of m. Detection only needs exponents to a couple of digits, so
// it runs on a prefix of the orbit (max_steps) rather than the whole thing.
inline UnstableCount detect_num_unstable(const Trajectory& traj, int d_trial,
                                         double tol = 0.05,
                                         int warm_up = kDefaultWarmUp,
                                         std::uint64_t seed = 0,
                                         long max_steps = 20000) {
  if (d_trial < 1 || d_trial > traj.dim())
    throw config_error("detect_num_unstable: d_trial must be in [1, dim]");
  if (!(tol > 0)) throw config_error("detect_num_unstable: tol must be positive");

  const long steps = std::min(traj.K(), max_steps);
  UnstableFrames f;
  f.m = d_trial;
  f.warm_up = warm_up;
  f.K = steps;
  f.Q.resize(steps + 1);
  f.log_r.resize(steps + 1);
  std::mt19937_64 rng(derive_seed(seed, 3));
  f.Q[0] = random_orthonormal(traj.dim(), d_trial, rng);
  for (long i = 1; i <= steps; ++i) {
    ThinQR qr = qr_positive(Mat(traj.jac(i - 1) * f.Q[i - 1]));
    Vec lr(d_trial);
    for (int j = 0; j < d_trial; ++j) {
      if (!(qr.r_diag(j) > 0) || !std::isfinite(qr.r_diag(j)))
        throw numerical_error("detect_num_unstable: degenerate QR factor at step " +
                              std::to_string(i));
      lr(j) = std::log(qr.r_diag(j));
    }
    f.Q[i] = qr.Q;
    f.log_r[i] = lr;
  }

  UnstableCount out;
  out.spectrum = lyapunov_from_frames(f);
  bool saw_contracting = false;
  for (int j = 0; j < d_trial; ++j) {
    double lam = out.spectrum.exponents(j);
    if (std::abs(lam) <= tol)
      throw numerical_error(
          "detect_num_unstable: exponent " + std::to_string(lam) +
          " is within tol of zero; increase d_trial coverage or adjust tol");
    if (lam > tol) ++out.m;
    if (lam < -tol) saw_contracting = true;
  }
  out.confirmed = saw_contracting || d_trial == traj.dim();
  return out;
}

}  // namespace splitsens
