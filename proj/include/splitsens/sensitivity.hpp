#pragma once

// The sensitivity core: two per-step recursions, two accumulators, the
// orchestrating driver, and a tangent-growth diagnostic.
//
// The derivative of a stationary average splits into a stable part, summed
// by a tangent recursion driven with the non-expanding component of the
// perturbation field, and an unstable part, obtained by trading the
// derivative along expanding directions for a weighted correlation between
// the objective and a scalar transport functional
//     g_i = psi_i . Xu_i + div_u Xu (u_i),
// where psi is the projected gradient of the log stationary density,
// propagated along the orbit. Both recursions forget their (arbitrary zero)
// initialization exponentially, so accumulation starts only after M steps.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "splitsens/core.hpp"
#include "splitsens/model.hpp"
#include "splitsens/objectives.hpp"
#include "splitsens/splitting.hpp"
#include "splitsens/subspaces.hpp"
#include "splitsens/trajectory.hpp"

namespace splitsens {

// One step of the density-gradient recursion. Gradients of densities pull
// back through the inverse transpose Jacobian (the map pushes the density
// forward, so its log-gradient at the arrival point picks up the inverse
// map's Jacobian transpose), and the determinant source enters pre-transport
// at the departure point; `source_prev` is that term already transported,
// as produced by transported_density_source. The projection onto the
// arrival-point expanding frame closes the recursion: components outside
// the expanding span are annihilated there, not at the departure point.
inline Vec density_gradient_step(const Vec& psi, const Mat& jac_prev,
                                 const Vec& source_prev, const Mat& Q_next) {
  Vec z = jac_prev.transpose().lu().solve(psi) - source_prev;
  if (!z.allFinite())
    throw numerical_error("density_gradient_step: singular Jacobian transport");
  return Q_next * (Q_next.transpose() * z);
}

// One step of the inhomogeneous stable tangent recursion. The caller is
// responsible for re-splitting the result: in exact arithmetic the solution
// stays in the stable subspace, but round-off leaks an O(eps) expanding
// component that doubles every step and overflows within a few thousand
// steps if not removed.
inline Vec stable_tangent_step(const Vec& v, const Mat& jac_prev, const Vec& Xs_next) {
  return jac_prev * v + Xs_next;
}

struct UnstableAccumulation {
  double contribution = 0.0;  // minus the summed correlations
  double tail_value = 0.0;    // last correlation term, a truncation check
  double tail_stderr = 0.0;
};

// Correlation accumulator for the unstable part. Both series start at the
// same orbit index; J may extend past g (it needs no frame or divergence
// data, so it is cheap out to the trajectory end) and the extra tail serves
// as lag headroom: with len(J) - len(g) >= L every lag uses the full g
// sample count. Means are centered per series over the full series.
inline UnstableAccumulation accumulate_unstable(const std::vector<double>& J,
                                                const std::vector<double>& g,
                                                int L) {
  const long nj = static_cast<long>(J.size());
  const long ng = static_cast<long>(g.size());
  if (L < 0) throw config_error("accumulate_unstable: L must be non-negative");
  if (ng < 2 || nj < 2) throw config_error("accumulate_unstable: series too short");
  if (nj < ng) throw config_error("accumulate_unstable: J series shorter than g series");
  if (nj - L < 2)
    throw config_error("accumulate_unstable: truncation L leaves no usable pairs");

  double jbar = 0.0, gbar = 0.0;
  for (double x : J) jbar += x;
  jbar /= nj;
  for (double x : g) gbar += x;
  gbar /= ng;

  UnstableAccumulation acc;
  double total = 0.0;
  for (int l = 0; l <= L; ++l) {
    const long nl = std::min(ng, nj - l);
    double c = 0.0, c2 = 0.0;
    for (long k = 0; k < nl; ++k) {
      const double p = (J[k + l] - jbar) * (g[k] - gbar);
      c += p;
      c2 += p * p;
    }
    const double mean = c / nl;
    total += mean;
    if (l == L) {
      acc.tail_value = mean;
      const double var = std::max(0.0, c2 / nl - mean * mean);
      acc.tail_stderr = std::sqrt(var / nl);
    }
  }
  acc.contribution = -total;
  return acc;
}

inline double accumulate_stable(const std::vector<double>& dJv) {
  if (dJv.empty()) throw config_error("accumulate_stable: empty series");
  double s = 0.0;
  for (double x : dJv) s += x;
  return s / static_cast<double>(dJv.size());
}

struct SensitivityConfig {
  long K = 1000000;   // measured orbit length
  long burn_in = 1000;
  long M = 500;       // steps discarded before accumulation
  int L = 50;         // correlation truncation
  int warm_up = kDefaultWarmUp;
  int div_chain = kDefaultDivChain;
  double div_step = kDefaultDivStep;
  int m = -1;         // expanding directions; -1 = detect
  int d_trial = -1;   // trial dimension for detection; -1 = full dimension
  double detect_tol = 0.05;
  std::uint64_t seed = 0;

  void validate(int n) const {
    if (K < 10) throw config_error("config: K too small");
    if (burn_in < 0) throw config_error("config: burn_in must be non-negative");
    if (M < 1 || M >= K) throw config_error("config: need 1 <= M < K");
    if (L < 0) throw config_error("config: L must be non-negative");
    if (warm_up < 1) throw config_error("config: warm_up must be positive");
    if (div_chain < 1) throw config_error("config: div_chain must be positive");
    if (!(div_step > 0)) throw config_error("config: div_step must be positive");
    if (m > n) throw config_error("config: m exceeds model dimension");
    if (d_trial > n) throw config_error("config: d_trial exceeds model dimension");
  }
};

struct ObjectiveSensitivity {
  std::string id;
  double stable = 0.0;
  double unstable = 0.0;
  double total = 0.0;
  double tail_value = 0.0;
  double tail_stderr = 0.0;
};

struct SensitivityResult {
  int m = 0;
  bool m_confirmed = true;
  long K = 0;
  long M = 0;
  int L = 0;
  long g_first = 0, g_last = 0;  // orbit-index range of the transport series
  std::vector<ObjectiveSensitivity> objectives;
};

// Full pipeline: orbit, expanding-direction count, frames, splitting,
// per-step transport, accumulation. Deterministic for a fixed seed.
inline SensitivityResult run_split_sensitivity(const MapModel& model, const Vec& params,
                                               int param_index,
                                               const std::vector<Objective>& objs,
                                               const SensitivityConfig& cfg) {
  const int n = model.dim();
  cfg.validate(n);
  if (objs.empty()) throw config_error("run: no objectives given");

  std::mt19937_64 init_rng(derive_seed(cfg.seed, 4));
  Vec u0 = model.sample_state(init_rng, params);
  Trajectory traj = Trajectory::evolve(model, params, param_index, u0, cfg.burn_in, cfg.K);

  int m = cfg.m;
  bool confirmed = true;
  if (m < 0) {
    const int d_trial = cfg.d_trial > 0 ? cfg.d_trial : n;
    UnstableCount uc =
        detect_num_unstable(traj, d_trial, cfg.detect_tol, cfg.warm_up, cfg.seed);
    m = uc.m;
    confirmed = uc.confirmed;
  }

  SensitivityResult res;
  res.m = m;
  res.m_confirmed = confirmed;
  res.K = cfg.K;
  res.M = cfg.M;
  res.L = cfg.L;

  const long K = cfg.K;
  const long M = cfg.M;
  const std::size_t nobj = objs.size();

  // J series: objective values along the orbit from M to K. Needed by every
  // branch below.
  std::vector<std::vector<double>> Jser(nobj);
  for (std::size_t o = 0; o < nobj; ++o) {
    Jser[o].reserve(K - M + 1);
    for (long i = M; i <= K; ++i) Jser[o].push_back(objs[o].value(traj.state(i)));
  }

  if (m == 0) {
    // Nothing expands: the whole field is stable and the tangent recursion
    // converges on its own. No frames, no transport series.
    res.g_first = res.g_last = 0;
    Vec v = Vec::Zero(n);
    std::vector<std::vector<double>> dJv(nobj);
    for (long i = 1; i <= K; ++i) {
      v = stable_tangent_step(v, traj.jac(i - 1), traj.field(i));
      if (!v.allFinite())
        throw numerical_error("run: stable tangent diverged at step " + std::to_string(i) +
                              "; the map may have expanding directions (m = 0 assumed)");
      if (i >= M)
        for (std::size_t o = 0; o < nobj; ++o)
          dJv[o].push_back(objs[o].gradient(traj.state(i)).dot(v));
    }
    for (std::size_t o = 0; o < nobj; ++o) {
      ObjectiveSensitivity s;
      s.id = objs[o].id;
      s.stable = accumulate_stable(dJv[o]);
      s.total = s.stable;
      res.objectives.push_back(s);
    }
    return res;
  }

  if (m == n) {
    // Everything expands: the split is the identity, the stable part is
    // zero, and the frame projection in the density recursion is a no-op,
    // so no frames are needed. The divergence probe still solves one-step
    // preimages. The recursion here contracts (inverse transport), so the
    // zero initialization washes out within the M discard.
    if (M + cfg.L >= K) throw config_error("config: K too small for M and L");
    res.g_first = M;
    res.g_last = K;
    UnstableFrames uf_dummy;
    uf_dummy.m = n;
    AdjointFrames af_dummy;
    std::vector<double> gser;
    gser.reserve(K - M + 1);
    Vec psi = Vec::Zero(n);
    for (long i = 1; i <= K; ++i) {
      Vec z = traj.jac(i - 1).transpose().lu().solve(psi) -
              transported_density_source(traj, i - 1);
      if (!z.allFinite())
        throw numerical_error("run: density-gradient transport failed at step " +
                              std::to_string(i));
      psi = z;
      if (i >= M) {
        double div = unstable_divergence(model, traj, uf_dummy, af_dummy, i,
                                         cfg.div_chain, cfg.div_step);
        gser.push_back(psi.dot(traj.field(i)) + div);
      }
    }
    for (std::size_t o = 0; o < nobj; ++o) {
      ObjectiveSensitivity s;
      s.id = objs[o].id;
      UnstableAccumulation acc = accumulate_unstable(Jser[o], gser, cfg.L);
      s.unstable = acc.contribution;
      s.total = s.unstable;
      s.tail_value = acc.tail_value;
      s.tail_stderr = acc.tail_stderr;
      res.objectives.push_back(s);
    }
    return res;
  }

  // Mixed case. Frame validity and the divergence chain bound the transport
  // series to [M, K - warm_up - div_chain], and the accumulation discard
  // must clear both the frame warm-up and the chain so every consumed
  // quantity is converged.
  const long W = cfg.warm_up;
  const long T = cfg.div_chain;
  if (M < W + T)
    throw config_error("config: M must be at least warm_up + div_chain (" +
                       std::to_string(W + T) + ")");
  if (cfg.L > W + T)
    throw config_error("config: L must not exceed warm_up + div_chain, the lag "
                       "headroom between the J and transport series");
  const long g_last = K - W - T;
  if (g_last < M + 10)
    throw config_error("config: K too small for M, warm_up and div_chain");
  res.g_first = M;
  res.g_last = g_last;

  UnstableFrames uf = forward_unstable_frames(traj, m, cfg.warm_up, cfg.seed);
  AdjointFrames af = backward_adjoint_frames(traj, m, cfg.warm_up, cfg.seed);

  std::vector<double> gser;
  gser.reserve(g_last - M + 1);
  std::vector<std::vector<double>> dJv(nobj);
  const long v_last = K - W;  // adjoint frames are unconverged past here

  Vec psi = Vec::Zero(n);
  Vec v = Vec::Zero(n);
  for (long i = W + 1; i <= v_last; ++i) {
    SplitResult sp = oblique_split(traj.field(i), uf.Q[i], af.P[i]);

    psi = density_gradient_step(psi, traj.jac(i - 1),
                                transported_density_source(traj, i - 1), uf.Q[i]);

    v = stable_tangent_step(v, traj.jac(i - 1), sp.stable);
    v = oblique_split(v, uf.Q[i], af.P[i]).stable;
    if (!v.allFinite())
      throw numerical_error("run: stable tangent diverged at step " + std::to_string(i));

    if (i >= M) {
      for (std::size_t o = 0; o < nobj; ++o)
        dJv[o].push_back(objs[o].gradient(traj.state(i)).dot(v));
      if (i <= g_last) {
        double div =
            unstable_divergence(model, traj, uf, af, i, cfg.div_chain, cfg.div_step);
        gser.push_back(psi.dot(sp.unstable) + div);
      }
    }
  }

  for (std::size_t o = 0; o < nobj; ++o) {
    ObjectiveSensitivity s;
    s.id = objs[o].id;
    s.stable = accumulate_stable(dJv[o]);
    UnstableAccumulation acc = accumulate_unstable(Jser[o], gser, cfg.L);
    s.unstable = acc.contribution;
    s.tail_value = acc.tail_value;
    s.tail_stderr = acc.tail_stderr;
    s.total = s.stable + s.unstable;
    res.objectives.push_back(s);
  }
  return res;
}

struct TangentGrowth {
  std::vector<double> log_norms;  // log ||v|| per step from the recursion start
  double fitted_slope = 0.0;      // least-squares slope over the fit window
  double max_norm = 0.0;
};

// Growth diagnostic for the tangent recursion. Driven with the full
// perturbation field the solution must grow at the top Lyapunov rate, which
// is exactly the ill-conditioning the splitting removes; driven with the
// stable component only it must stay bounded. `record` steps of log-norms
// are kept; the slope is fitted on [fit_lo, fit_hi].
inline TangentGrowth tangent_growth(const MapModel& model, const Vec& params,
                                    int param_index, bool full_field, long K,
                                    long burn_in, int warm_up, std::uint64_t seed,
                                    int record, int fit_lo, int fit_hi) {
  if (fit_lo < 1 || fit_hi <= fit_lo || record <= fit_hi)
    throw config_error("tangent_growth: bad fit window");
  std::mt19937_64 init_rng(derive_seed(seed, 4));
  Vec u0 = model.sample_state(init_rng, params);
  Trajectory traj = Trajectory::evolve(model, params, param_index, u0, burn_in, K);
  const int n = model.dim();

  TangentGrowth out;
  Vec v = Vec::Zero(n);
  if (full_field) {
    // No splitting involved; the recursion is seeded from the field itself
    // and the norms grow immediately.
    for (long i = warm_up + 1; i <= K && i <= warm_up + record; ++i) {
      v = stable_tangent_step(v, traj.jac(i - 1), traj.field(i));
      out.max_norm = std::max(out.max_norm, double(v.norm()));
      out.log_norms.push_back(std::log(v.norm()));
    }
  } else {
    const int d = model.dim();
    UnstableCount uc = detect_num_unstable(traj, d, 0.05, warm_up, seed);
    UnstableFrames uf = forward_unstable_frames(traj, uc.m, warm_up, seed);
    AdjointFrames af = backward_adjoint_frames(traj, uc.m, warm_up, seed);
    for (long i = warm_up + 1; i <= K - warm_up; ++i) {
      SplitResult sp = oblique_split(traj.field(i), uf.Q[i], af.P[i]);
      v = stable_tangent_step(v, traj.jac(i - 1), sp.stable);
      v = oblique_split(v, uf.Q[i], af.P[i]).stable;
      if (!v.allFinite())
        throw numerical_error("tangent_growth: diverged at step " + std::to_string(i));
      out.max_norm = std::max(out.max_norm, double(v.norm()));
      if (static_cast<long>(out.log_norms.size()) < record)
        out.log_norms.push_back(std::log(v.norm()));
    }
  }

  // Least-squares slope of log ||v|| against step count on the fit window.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int j = fit_lo; j <= fit_hi; ++j) {
    const double x = j, y = out.log_norms.at(j - 1);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  out.fitted_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return out;
}

}  // namespace splitsens
