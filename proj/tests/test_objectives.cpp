#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "splitsens/splitsens.hpp"

using namespace splitsens;

namespace {

// Central-difference check of an objective gradient, skipping points too
// close to hat kinks where the one-sided slopes differ.
void check_gradient(const Objective& obj, const Vec& u, double h = 1e-7,
                    double tol = 1e-5) {
  Vec g = obj.gradient(u);
  for (Eigen::Index l = 0; l < u.size(); ++l) {
    Vec up = u, um = u;
    up(l) += h;
    um(l) -= h;
    const double fd = (obj.value(up) - obj.value(um)) / (2 * h);
    CHECK(std::abs(fd - g(l)) < tol * std::max(1.0, std::abs(g(l))));
  }
}

}  // namespace

TEST_CASE("trigonometric objectives and gradients", "[objectives]") {
  auto model = make_model("solenoid");
  ObjectiveSpec spec;
  spec.kind = "trig";
  spec.axis = 1;
  auto objs = make_objectives(*model, spec);
  REQUIRE(objs.size() == 2);
  CHECK(objs[0].id == "cos");
  CHECK(objs[1].id == "sin");

  Vec u(3);
  u << 1.3, 0.37, -0.2;
  CHECK(objs[0].value(u) == Catch::Approx(std::cos(kTwoPi * 0.37)).margin(1e-15));
  CHECK(objs[1].value(u) == Catch::Approx(std::sin(kTwoPi * 0.37)).margin(1e-15));
  check_gradient(objs[0], u);
  check_gradient(objs[1], u);
  CHECK(objs[0].gradient(u)(0) == 0.0);
  CHECK(objs[0].gradient(u)(2) == 0.0);
}

TEST_CASE("coordinate objective", "[objectives]") {
  auto model = make_model("solenoid");
  ObjectiveSpec spec;
  spec.kind = "coord";
  spec.axis = 0;
  auto objs = make_objectives(*model, spec);
  REQUIRE(objs.size() == 1);
  CHECK(objs[0].id == "r");
  Vec u(3);
  u << 1.23, 0.5, 0.1;
  CHECK(objs[0].value(u) == 1.23);
  CHECK(objs[0].gradient(u)(0) == 1.0);
  CHECK(objs[0].gradient(u)(1) == 0.0);
}

TEST_CASE("periodic hats form a partition of unity", "[objectives]") {
  auto model = make_model("doubling");
  ObjectiveSpec spec;
  spec.kind = "nodal";
  spec.axis = 0;
  spec.nodes = 16;
  auto objs = make_objectives(*model, spec);
  REQUIRE(objs.size() == 16);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    Vec u(1);
    u << u01(rng);
    double sum = 0.0;
    Vec gsum = Vec::Zero(1);
    for (const auto& obj : objs) {
      const double v = obj.value(u);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum += v;
      gsum += obj.gradient(u);
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-13));
    // Gradients of a partition of unity cancel too (away from kinks it is
    // exact; the margin absorbs points that straddle one).
    CHECK(std::abs(gsum(0)) < 1e-10);
  }

  // Wrap-around: the hat centered at 0 sees points just below 1.
  Vec u(1);
  u << 1.0 - 0.01;
  CHECK(objs[0].value(u) == Catch::Approx(1.0 - 0.01 * 16).margin(1e-12));
  check_gradient(objs[0], u);
}

TEST_CASE("hat gradients match finite differences off the kinks", "[objectives]") {
  auto model = make_model("doubling");
  ObjectiveSpec spec;
  spec.kind = "nodal";
  spec.axis = 0;
  spec.nodes = 8;
  auto objs = make_objectives(*model, spec);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int checked = 0;
  for (int t = 0; t < 100 && checked < 40; ++t) {
    Vec u(1);
    u << u01(rng);
    // Kinks sit at multiples of 1/16.
    const double frac = std::abs(u(0) * 16 - std::round(u(0) * 16));
    if (frac < 1e-3) continue;
    for (const auto& obj : objs) check_gradient(obj, u);
    ++checked;
  }
  CHECK(checked >= 40);
}

TEST_CASE("nodal grid on a bounded axis", "[objectives]") {
  auto model = make_model("contracting");
  ObjectiveSpec spec;
  spec.kind = "nodal";
  spec.axis = 0;
  spec.nodes = 4;
  spec.lo = 0.0;
  spec.hi = 2.0;
  auto objs = make_objectives(*model, spec);
  REQUIRE(objs.size() == 4);
  Vec u(1);
  u << 0.5;  // exactly the second node center
  CHECK(objs[1].value(u) == Catch::Approx(1.0).margin(1e-14));
  CHECK(objs[0].value(u) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("tensor-product hats on the torus", "[objectives]") {
  auto model = make_model("cat");
  ObjectiveSpec spec;
  spec.kind = "nodal2";
  spec.axis = 0;
  spec.axis2 = 1;
  spec.nodes = 4;
  spec.nodes2 = 4;
  auto objs = make_objectives(*model, spec);
  REQUIRE(objs.size() == 16);
  CHECK(objs[0].id == "hat_0_0");

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    Vec u(2);
    u << u01(rng), u01(rng);
    double sum = 0.0;
    for (const auto& obj : objs) sum += obj.value(u);
    CHECK(sum == Catch::Approx(1.0).margin(1e-13));
  }
}

TEST_CASE("objective construction rejects bad specs", "[objectives]") {
  auto model = make_model("doubling");
  ObjectiveSpec spec;
  spec.kind = "nodal";
  spec.axis = 3;
  CHECK_THROWS_AS(make_objectives(*model, spec), config_error);
  spec.axis = 0;
  spec.nodes = 1;
  CHECK_THROWS_AS(make_objectives(*model, spec), config_error);
  spec.kind = "nodal2";
  spec.nodes = 4;
  spec.axis2 = 0;  // same axis twice
  CHECK_THROWS_AS(make_objectives(*model, spec), config_error);
  spec.kind = "fourier";
  CHECK_THROWS_AS(make_objectives(*model, spec), config_error);
}
