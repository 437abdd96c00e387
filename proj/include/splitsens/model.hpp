#pragma once

// Map-model interface. A model is a smooth family of maps u' = phi(u; s)
// on R^n (some coordinates periodic), exposing exact first derivatives:
// the Jacobian, the per-parameter derivative dphi/ds, the Jacobian
// determinant and its state gradient. Everything downstream (tangent
// recursions, adjoint frames, divergence probes) consumes only this
// interface, so adding a map means implementing one subclass.

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "splitsens/core.hpp"

namespace splitsens {

class MapModel {
 public:
  virtual ~MapModel() = default;

  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual int num_params() const = 0;
  virtual std::vector<std::string> coord_names() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual Vec default_params() const = 0;

  // One application of the map, with periodic coordinates wrapped into
  // their fundamental domain.
  virtual Vec advance(const Vec& u, const Vec& s) const = 0;

  // Jacobian d phi / d u evaluated at u (column convention: tangent vectors
  // are columns, w' = Dphi * w).
  virtual Mat jacobian(const Vec& u, const Vec& s) const = 0;

  // d phi / d s_k at u for parameter index k.
  virtual Vec param_deriv(const Vec& u, const Vec& s, int k) const = 0;

  // det Dphi(u) and its state gradient d(det)/du. These feed the density
  // transport recursion; models with constant determinant return a zero
  // gradient.
  virtual double jacobian_det(const Vec& u, const Vec& s) const = 0;
  virtual Vec jacobian_det_grad(const Vec& u, const Vec& s) const = 0;

  // Period of each coordinate; 0 means the coordinate is unbounded.
  // Newton preimage solves wrap residuals in periodic coordinates to the
  // nearest branch, which is what pins the probe to the correct preimage.
  virtual Vec coord_periods() const = 0;

  // A random state in the basin of the attractor, for Monte Carlo initial
  // conditions. Distribution does not matter beyond landing in the basin;
  // every sampler burns in before measuring.
  virtual Vec sample_state(std::mt19937_64& rng, const Vec& s) const = 0;

  // Maps with periodic coordinates: the same map without the final wrap,
  // needed by cell-transfer discretizations that track image intervals on
  // the covering space. Non-periodic models just forward to advance().
  virtual Vec advance_unwrapped(const Vec& u, const Vec& s) const {
    return advance(u, s);
  }
};

// Finite-difference verification of a model's analytic derivatives at
// randomly sampled states. This is a development / sanity check surfaced
// through the CLI; it reports worst-case relative errors rather than
// failing hard, since appropriate tolerances depend on the scale of the
// second derivatives.
struct ModelCheckResult {
  double max_jacobian_err = 0.0;
  double max_param_deriv_err = 0.0;
  double max_det_err = 0.0;
  double max_det_grad_err = 0.0;
  int num_states = 0;
};

inline ModelCheckResult check_model(const MapModel& model, const Vec& s,
                                    int num_states = 32,
                                    std::uint64_t seed = 12345,
                                    double h = 1e-6) {
  ModelCheckResult res;
  res.num_states = num_states;
  std::mt19937_64 rng(derive_seed(seed, 0));
  const int n = model.dim();
  const int p = model.num_params();
  for (int t = 0; t < num_states; ++t) {
    Vec u = model.sample_state(rng, s);
    // Jacobian columns vs central differences in each state coordinate.
    // Differences of advance() can straddle a periodic wrap, so compare
    // against the unwrapped map, which agrees with advance() up to a
    // constant shift and therefore has the same derivatives.
    Mat J = model.jacobian(u, s);
    for (int l = 0; l < n; ++l) {
      Vec up = u, um = u;
      up(l) += h;
      um(l) -= h;
      Vec col = (model.advance_unwrapped(up, s) - model.advance_unwrapped(um, s)) / (2 * h);
      double err = (col - J.col(l)).norm() / std::max(1.0, J.col(l).norm());
      res.max_jacobian_err = std::max(res.max_jacobian_err, err);
    }
    for (int k = 0; k < p; ++k) {
      Vec sp = s, sm = s;
      sp(k) += h;
      sm(k) -= h;
      Vec d = (model.advance_unwrapped(u, sp) - model.advance_unwrapped(u, sm)) / (2 * h);
      Vec a = model.param_deriv(u, s, k);
      double err = (d - a).norm() / std::max(1.0, a.norm());
      res.max_param_deriv_err = std::max(res.max_param_deriv_err, err);
    }
    double det_fd = model.jacobian(u, s).determinant();
    double det_an = model.jacobian_det(u, s);
    res.max_det_err = std::max(
        res.max_det_err, std::abs(det_fd - det_an) / std::max(1.0, std::abs(det_an)));
    Vec g = model.jacobian_det_grad(u, s);
    for (int l = 0; l < n; ++l) {
      Vec up = u, um = u;
      up(l) += h;
      um(l) -= h;
      double gl = (model.jacobian_det(up, s) - model.jacobian_det(um, s)) / (2 * h);
      double err = std::abs(gl - g(l)) / std::max(1.0, std::abs(g(l)));
      res.max_det_grad_err = std::max(res.max_det_grad_err, err);
    }
  }
  return res;
}

}  // namespace splitsens
