#pragma once

// Oblique splitting of the perturbation field into expanding and
// non-expanding parts, and the finite-difference divergence of the expanding
// part along the attractor.
//
// The split at a point uses two frames: Q spans the expanding subspace and P
// spans its adjoint counterpart, whose orthogonal complement is the stable
// subspace. The expanding component of X is the unique Q-span vector with
// the same P-projections as X, which makes the remainder exactly stable. The
// two spans are genuinely oblique to each other on the solenoid, so neither
// frame alone is enough.
//
// The divergence probe is the delicate part. The expanding component is only
// defined on the orbit, so evaluating it at displaced points x = u_i +/- h e_l
// means rebuilding every ingredient at x:
//   - X(x) is the parameter derivative at the preimage of x, found by a
//     Newton solve seeded with u_{i-1}. Seeding with the on-orbit predecessor
//     pins the solve to the same branch of the (multivalued) inverse, which
//     is what makes the extension continuous in x.
//   - Q(x) cannot be nudged directly; it is re-converged by pushing the
//     on-orbit frame Q_{i-T} forward along the preimage chain of x (T Newton
//     solves, each seeded with the matching on-orbit state). The frame
//     forgets its seed at the expanding rate, so T around 20 leaves a
//     relative frame error near machine precision.
//   - P(x) is re-converged the same way but backward: pull P_{i+T} back along
//     the forward images of x itself (no Newton solves needed there).
// Central differences of the resulting field give the full spatial
// divergence of the expanding component.

#include <cmath>
#include <string>

#include "splitsens/core.hpp"
#include "splitsens/model.hpp"
#include "splitsens/subspaces.hpp"
#include "splitsens/trajectory.hpp"

namespace splitsens {

inline constexpr double kTangencyTol = 1e-10;
inline constexpr int kDefaultDivChain = 20;
inline constexpr double kDefaultDivStep = 1e-5;

struct SplitResult {
  Vec unstable;
  Vec stable;
  Vec coeffs;  // Q-coordinates of the unstable part
};

inline SplitResult oblique_split(const Vec& X, const Mat& Q, const Mat& P) {
  const auto m = Q.cols();
  Mat Gt = P.transpose() * Q;  // (Q^T P)^T
  if (std::abs(Gt.determinant()) < kTangencyTol)
    throw numerical_error(
        "oblique_split: expanding and adjoint frames are near-tangent "
        "(|det Q^T P| < 1e-10); the splitting is ill-defined here");
  Vec rhs = P.transpose() * X;
  Vec a = Gt.lu().solve(rhs);
  SplitResult r;
  r.coeffs = a;
  r.unstable = Q * a;
  r.stable = X - r.unstable;
  (void)m;
  return r;
}

// Newton solve for the preimage of x on the branch selected by the seed.
// Residuals in periodic coordinates are wrapped to the nearest period so the
// solve never walks across a branch boundary chasing a whole-turn offset.
inline Vec newton_preimage(const MapModel& model, const Vec& params, const Vec& x,
                           const Vec& seed, int max_iter = 50, double tol = 1e-12) {
  const Vec periods = model.coord_periods();
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  Vec y = seed;
  for (int it = 0; it < max_iter; ++it) {
    Vec r = model.advance(y, params) - x;
    for (Eigen::Index l = 0; l < r.size(); ++l)
      if (periods(l) > 0) r(l) -= periods(l) * std::round(r(l) / periods(l));
    if (r.cwiseAbs().maxCoeff() <= tol * scale) return y;
    Vec step = model.jacobian(y, params).lu().solve(r);
    if (!step.allFinite())
      throw numerical_error("newton_preimage: singular Jacobian in backward solve");
    y -= step;
  }
  throw numerical_error("newton_preimage: no convergence after " +
                        std::to_string(max_iter) + " iterations");
}

// Expanding component of the perturbation field at an off-orbit point x close
// to u_i. Requires i - chain >= forward warm-up and i + chain <= K - backward
// warm-up so the re-convergence seeds are themselves trustworthy; the caller
// owns that window.
inline Vec unstable_field_at(const MapModel& model, const Trajectory& traj,
                             const UnstableFrames& uf, const AdjointFrames& af,
                             const Vec& x, long i, int chain = kDefaultDivChain) {
  const Vec& params = traj.params();
  const int pidx = traj.param_index();

  // With every direction expanding the split is the identity and only the
  // one-step preimage matters.
  if (uf.m == traj.dim()) {
    Vec y1 = newton_preimage(model, params, x, traj.state(i - 1));
    return model.param_deriv(y1, params, pidx);
  }

  if (i - chain < 0 || i + chain > traj.K())
    throw config_error("unstable_field_at: index " + std::to_string(i) +
                       " leaves no room for the re-convergence chain");

  // Preimage chain of x, each solve seeded with the on-orbit state at the
  // same time offset to stay on the shadowing branch.
  std::vector<Vec> y(static_cast<std::size_t>(chain) + 1);
  y[0] = x;
  for (int t = 1; t <= chain; ++t)
    y[t] = newton_preimage(model, params, y[t - 1], traj.state(i - t));

  // Push the expanding frame forward along the chain: contraction toward the
  // true frame at the expanding rate wipes out the O(h) seed mismatch.
  Mat Qx = uf.Q[i - chain];
  for (int t = chain; t >= 1; --t)
    Qx = qr_positive(Mat(model.jacobian(y[t], params) * Qx)).Q;

  // Pull the adjoint frame back along the forward images of x itself.
  std::vector<Mat> jf(static_cast<std::size_t>(chain));
  Vec w = x;
  for (int k = 0; k < chain; ++k) {
    jf[k] = model.jacobian(w, params);
    w = model.advance(w, params);
  }
  Mat Px = af.P[i + chain];
  for (int k = chain - 1; k >= 0; --k)
    Px = qr_positive(Mat(jf[k].transpose() * Px)).Q;

  Vec X = model.param_deriv(y[1], params, pidx);
  return oblique_split(X, Qx, Px).unstable;
}

// Full spatial divergence of the expanding component at u_i by central
// differences, one probe pair per coordinate. Step sizes scale with the
// coordinate magnitude; 1e-5 balances the O(h^2) truncation error against
// round-off amplified by the h^-1 difference.
inline double unstable_divergence(const MapModel& model, const Trajectory& traj,
                                  const UnstableFrames& uf, const AdjointFrames& af,
                                  long i, int chain = kDefaultDivChain,
                                  double h = kDefaultDivStep) {
  const int n = traj.dim();
  double div = 0.0;
  for (int l = 0; l < n; ++l) {
    const double hl = h * std::max(1.0, std::abs(traj.state(i)(l)));
    Vec xp = traj.state(i), xm = traj.state(i);
    xp(l) += hl;
    xm(l) -= hl;
    Vec fp = unstable_field_at(model, traj, uf, af, xp, i, chain);
    Vec fm = unstable_field_at(model, traj, uf, af, xm, i, chain);
    div += (fp(l) - fm(l)) / (2.0 * hl);
  }
  if (!std::isfinite(div))
    throw numerical_error("unstable_divergence: non-finite value at step " +
                          std::to_string(i));
  return div;
}

// Source term of the density-gradient recursion: the log-determinant
// gradient at u_i pulled back through the step that leaves u_i. Gradients
// transform by the inverse transpose of the map's Jacobian, hence the
// transpose solve. Returned unprojected; the recursion projects at the
// arrival frame where the term is consumed.
inline Vec transported_density_source(const Trajectory& traj, long i) {
  const double det = traj.det(i);
  if (std::abs(det) < 1e-300)
    throw numerical_error("transported_density_source: vanishing Jacobian determinant at step " +
                          std::to_string(i));
  Vec w = traj.det_grad(i) / det;
  Vec z = traj.jac(i).transpose().lu().solve(w);
  if (!z.allFinite())
    throw numerical_error("transported_density_source: singular transport at step " +
                          std::to_string(i));
  return z;
}

}  // namespace splitsens
