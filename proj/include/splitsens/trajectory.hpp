#pragma once

// Orbit container. One extra state is kept at index -1 (the state just
// before the nominal start) because the perturbation field at u_i is the
// parameter derivative of the map application that produced u_i, i.e. it is
// evaluated at u_{i-1}. Index -1 makes that well-defined from step 0 on
// without special-casing.
//
// All per-step derivative data (Jacobian, chosen parameter derivative,
// determinant, determinant gradient) is cached at evolve time: downstream
// passes sweep the orbit several times, and the trig evaluations dominate
// the cost of recomputing.

#include <cmath>
#include <vector>

#include "splitsens/core.hpp"
#include "splitsens/model.hpp"

namespace splitsens {

class Trajectory {
 public:
  // Valid state indices are -1..K.
  long K() const { return K_; }
  int dim() const { return n_; }
  int param_index() const { return param_index_; }
  const Vec& params() const { return params_; }

  const Vec& state(long i) const { return u_[idx(i)]; }
  const Mat& jac(long i) const { return jac_[idx(i)]; }
  double det(long i) const { return det_[idx(i)]; }
  const Vec& det_grad(long i) const { return det_grad_[idx(i)]; }

  // d phi / d s_k evaluated at u_i, for the parameter chosen at evolve time.
  const Vec& param_deriv(long i) const { return dphi_ds_[idx(i)]; }

  // The perturbation field at u_i: the parameter derivative of the step that
  // landed on u_i, so it lives at the predecessor state. Defined for i >= 0.
  const Vec& field(long i) const { return dphi_ds_[idx(i - 1)]; }

  static Trajectory evolve(const MapModel& model, const Vec& params, int param_index,
                           const Vec& u0, long burn_in, long K) {
    if (params.size() != model.num_params())
      throw config_error("model '" + model.id() + "' takes " +
                         std::to_string(model.num_params()) + " parameters, got " +
                         std::to_string(params.size()));
    if (param_index < 0 || param_index >= model.num_params())
      throw config_error("parameter index out of range for model '" + model.id() + "'");
    if (K < 1) throw config_error("trajectory length K must be positive");
    if (burn_in < 0) throw config_error("burn_in must be non-negative");

    Trajectory t;
    t.n_ = model.dim();
    t.K_ = K;
    t.param_index_ = param_index;
    t.params_ = params;

    Vec u = u0;
    if (u.size() != t.n_)
      throw config_error("initial state has wrong dimension for model '" + model.id() + "'");
    for (long i = 0; i < burn_in; ++i) u = model.advance(u, params);

    const long count = K + 2;  // states -1..K
    t.u_.reserve(count);
    t.jac_.reserve(count);
    t.dphi_ds_.reserve(count);
    t.det_.reserve(count);
    t.det_grad_.reserve(count);

    for (long i = -1; i <= K; ++i) {
      if (!u.allFinite())
        throw numerical_error("trajectory: non-finite state at step " + std::to_string(i));
      t.u_.push_back(u);
      t.jac_.push_back(model.jacobian(u, params));
      t.dphi_ds_.push_back(model.param_deriv(u, params, param_index));
      t.det_.push_back(model.jacobian_det(u, params));
      t.det_grad_.push_back(model.jacobian_det_grad(u, params));
      if (i < K) u = model.advance(u, params);
    }
    return t;
  }

 private:
  std::size_t idx(long i) const { return static_cast<std::size_t>(i + 1); }

  int n_ = 0;
  long K_ = 0;
  int param_index_ = 0;
  Vec params_;
  std::vector<Vec> u_;
  std::vector<Mat> jac_;
  std::vector<Vec> dphi_ds_;
  std::vector<double> det_;
  std::vector<Vec> det_grad_;
};

}  // namespace splitsens
