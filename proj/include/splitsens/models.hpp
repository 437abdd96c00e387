#pragma once

// Concrete map models. The solenoid is the main test body: one expanding
// angular direction driven by a circle map, two contracting directions
// coupled to it. The circle map alone is the 1-D reduction of the same
// dynamics. The torus map is area preserving at s = 0 (exactly constant
// Jacobian determinant), and the contracting model has no expanding
// directions at all; together they exercise the m = 1, m = n, constant-det
// and m = 0 corners of the pipeline.

#include <cmath>
#include <memory>

#include "splitsens/model.hpp"

namespace splitsens {

// 3-D solenoid-type attractor on (r, theta, z), theta periodic with period 1:
//   r'     = s1 + (r - s1)/4 + cos(2 pi theta)/2
//   theta' = 2 theta + (s2/4) sin(2 pi theta)   (mod 1)
//   z'     = z/4 + sin(2 pi theta)/2
// The theta dynamics is autonomous, so the one expanding direction is always
// e_theta-aligned in the adjoint sense while the forward expanding direction
// tilts into r and z; that obliqueness is the property the splitting has to
// get right. The attractor stays inside |r - s1| <= 2/3, |z| <= 2/3.
class SolenoidModel final : public MapModel {
 public:
  std::string id() const override { return "solenoid"; }
  int dim() const override { return 3; }
  int num_params() const override { return 2; }
  std::vector<std::string> coord_names() const override { return {"r", "theta", "z"}; }
  std::vector<std::string> param_names() const override { return {"s1", "s2"}; }
  Vec default_params() const override {
    Vec s(2);
    s << 1.4, 0.3;
    return s;
  }

  Vec advance(const Vec& u, const Vec& s) const override {
    Vec v = advance_unwrapped(u, s);
    v(1) -= std::floor(v(1));
    return v;
  }

  Vec advance_unwrapped(const Vec& u, const Vec& s) const override {
    const double c = std::cos(kTwoPi * u(1));
    const double sn = std::sin(kTwoPi * u(1));
    Vec v(3);
    v(0) = s(0) + (u(0) - s(0)) / 4.0 + c / 2.0;
    v(1) = 2.0 * u(1) + (s(1) / 4.0) * sn;
    v(2) = u(2) / 4.0 + sn / 2.0;
    return v;
  }

  Mat jacobian(const Vec& u, const Vec& s) const override {
    const double c = std::cos(kTwoPi * u(1));
    const double sn = std::sin(kTwoPi * u(1));
    Mat J = Mat::Zero(3, 3);
    J(0, 0) = 0.25;
    J(0, 1) = -kPi * sn;
    J(1, 1) = 2.0 + (kPi * s(1) / 2.0) * c;
    J(2, 1) = kPi * c;
    J(2, 2) = 0.25;
    return J;
  }

  Vec param_deriv(const Vec& u, const Vec& s, int k) const override {
    (void)s;
    Vec d = Vec::Zero(3);
    if (k == 0) {
      d(0) = 0.75;
    } else {
      d(1) = std::sin(kTwoPi * u(1)) / 4.0;
    }
    return d;
  }

  double jacobian_det(const Vec& u, const Vec& s) const override {
    return (2.0 + (kPi * s(1) / 2.0) * std::cos(kTwoPi * u(1))) / 16.0;
  }

  Vec jacobian_det_grad(const Vec& u, const Vec& s) const override {
    Vec g = Vec::Zero(3);
    g(1) = -kPi * kPi * s(1) * std::sin(kTwoPi * u(1)) / 16.0;
    return g;
  }

  Vec coord_periods() const override {
    Vec p = Vec::Zero(3);
    p(1) = 1.0;
    return p;
  }

  Vec sample_state(std::mt19937_64& rng, const Vec& s) const override {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Vec u(3);
    u(0) = s(0) + (u01(rng) - 0.5);
    u(1) = u01(rng);
    u(2) = u01(rng) - 0.5;
    return u;
  }
};

// 1-D tilted doubling map on the circle, identical to the solenoid's theta
// dynamics:  theta' = 2 theta + (s2/4) sin(2 pi theta)  (mod 1).
// Expanding everywhere for |s2| < 4/pi, so m = n = 1. At s2 = 0 the exact
// doubling map is dyadic: in binary floating point every orbit reaches the
// fixed point theta = 0 within about 53 steps. That is a property of exact
// base-2 arithmetic, not a bug; tests that need a live chaotic orbit use
// s2 != 0.
class CircleMapModel final : public MapModel {
 public:
  std::string id() const override { return "doubling"; }
  int dim() const override { return 1; }
  int num_params() const override { return 1; }
  std::vector<std::string> coord_names() const override { return {"theta"}; }
  std::vector<std::string> param_names() const override { return {"s2"}; }
  Vec default_params() const override {
    Vec s(1);
    s << 0.3;
    return s;
  }

  Vec advance(const Vec& u, const Vec& s) const override {
    Vec v = advance_unwrapped(u, s);
    v(0) -= std::floor(v(0));
    return v;
  }

  Vec advance_unwrapped(const Vec& u, const Vec& s) const override {
    Vec v(1);
    v(0) = 2.0 * u(0) + (s(0) / 4.0) * std::sin(kTwoPi * u(0));
    return v;
  }

  Mat jacobian(const Vec& u, const Vec& s) const override {
    Mat J(1, 1);
    J(0, 0) = 2.0 + (kPi * s(0) / 2.0) * std::cos(kTwoPi * u(0));
    return J;
  }

  Vec param_deriv(const Vec& u, const Vec& s, int k) const override {
    (void)s;
    (void)k;
    Vec d(1);
    d(0) = std::sin(kTwoPi * u(0)) / 4.0;
    return d;
  }

  double jacobian_det(const Vec& u, const Vec& s) const override {
    return 2.0 + (kPi * s(0) / 2.0) * std::cos(kTwoPi * u(0));
  }

  Vec jacobian_det_grad(const Vec& u, const Vec& s) const override {
    Vec g(1);
    g(0) = -kPi * kPi * s(0) * std::sin(kTwoPi * u(0));
    return g;
  }

  Vec coord_periods() const override {
    Vec p(1);
    p(0) = 1.0;
    return p;
  }

  Vec sample_state(std::mt19937_64& rng, const Vec& s) const override {
    (void)s;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Vec u(1);
    u(0) = u01(rng);
    return u;
  }
};

// 2-D hyperbolic torus map, a nonlinear perturbation of the symmetric
// matrix map [[2,1],[1,1]]:
//   x' = 2x + y + (s / 2pi) sin(2 pi x)  (mod 1)
//   y' = x + y                            (mod 1)
// At s = 0 the Jacobian determinant is exactly 1 everywhere and its gradient
// is exactly zero, which pins the density-transport source term to zero with
// no round-off. One expanding and one contracting direction (m = 1).
class TorusMapModel final : public MapModel {
 public:
  std::string id() const override { return "cat"; }
  int dim() const override { return 2; }
  int num_params() const override { return 1; }
  std::vector<std::string> coord_names() const override { return {"x", "y"}; }
  std::vector<std::string> param_names() const override { return {"s"}; }
  Vec default_params() const override {
    Vec s(1);
    s << 0.0;
    return s;
  }

  Vec advance(const Vec& u, const Vec& s) const override {
    Vec v = advance_unwrapped(u, s);
    v(0) -= std::floor(v(0));
    v(1) -= std::floor(v(1));
    return v;
  }

  Vec advance_unwrapped(const Vec& u, const Vec& s) const override {
    Vec v(2);
    v(0) = 2.0 * u(0) + u(1) + (s(0) / kTwoPi) * std::sin(kTwoPi * u(0));
    v(1) = u(0) + u(1);
    return v;
  }

  Mat jacobian(const Vec& u, const Vec& s) const override {
    Mat J(2, 2);
    J(0, 0) = 2.0 + s(0) * std::cos(kTwoPi * u(0));
    J(0, 1) = 1.0;
    J(1, 0) = 1.0;
    J(1, 1) = 1.0;
    return J;
  }

  Vec param_deriv(const Vec& u, const Vec& s, int k) const override {
    (void)s;
    (void)k;
    Vec d = Vec::Zero(2);
    d(0) = std::sin(kTwoPi * u(0)) / kTwoPi;
    return d;
  }

  double jacobian_det(const Vec& u, const Vec& s) const override {
    return 1.0 + s(0) * std::cos(kTwoPi * u(0));
  }

  Vec jacobian_det_grad(const Vec& u, const Vec& s) const override {
    Vec g = Vec::Zero(2);
    g(0) = -kTwoPi * s(0) * std::sin(kTwoPi * u(0));
    return g;
  }

  Vec coord_periods() const override {
    Vec p(2);
    p << 1.0, 1.0;
    return p;
  }

  Vec sample_state(std::mt19937_64& rng, const Vec& s) const override {
    (void)s;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Vec u(2);
    u(0) = u01(rng);
    u(1) = u01(rng);
    return u;
  }
};

// 1-D contracting map u' = u/2 + s with globally attracting fixed point
// u* = 2s. No expanding directions (m = 0), so the stationary measure is a
// point mass and d<u>/ds = 2 exactly. Used to test the m = 0 path and the
// ensemble baseline on a case with a closed-form answer.
class ContractingModel final : public MapModel {
 public:
  std::string id() const override { return "contracting"; }
  int dim() const override { return 1; }
  int num_params() const override { return 1; }
  std::vector<std::string> coord_names() const override { return {"u"}; }
  std::vector<std::string> param_names() const override { return {"s"}; }
  Vec default_params() const override {
    Vec s(1);
    s << 0.25;
    return s;
  }

  Vec advance(const Vec& u, const Vec& s) const override {
    Vec v(1);
    v(0) = u(0) / 2.0 + s(0);
    return v;
  }

  Mat jacobian(const Vec& u, const Vec& s) const override {
    (void)u;
    (void)s;
    Mat J(1, 1);
    J(0, 0) = 0.5;
    return J;
  }

  Vec param_deriv(const Vec& u, const Vec& s, int k) const override {
    (void)u;
    (void)s;
    (void)k;
    Vec d(1);
    d(0) = 1.0;
    return d;
  }

  double jacobian_det(const Vec& u, const Vec& s) const override {
    (void)u;
    (void)s;
    return 0.5;
  }

  Vec jacobian_det_grad(const Vec& u, const Vec& s) const override {
    (void)u;
    (void)s;
    return Vec::Zero(1);
  }

  Vec coord_periods() const override { return Vec::Zero(1); }

  Vec sample_state(std::mt19937_64& rng, const Vec& s) const override {
    (void)s;
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    Vec u(1);
    u(0) = d(rng);
    return u;
  }
};

inline std::unique_ptr<MapModel> make_model(const std::string& id) {
  if (id == "solenoid") return std::make_unique<SolenoidModel>();
  if (id == "doubling") return std::make_unique<CircleMapModel>();
  if (id == "cat") return std::make_unique<TorusMapModel>();
  if (id == "contracting") return std::make_unique<ContractingModel>();
  throw config_error("unknown model '" + id +
                     "' (valid: solenoid, doubling, cat, contracting)");
}

}  // namespace splitsens
