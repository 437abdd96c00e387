#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "splitsens/splitsens.hpp"

using namespace splitsens;

namespace {

std::vector<Objective> trig_objs(const MapModel& m) {
  ObjectiveSpec spec;
  return make_objectives(m, spec);
}

}  // namespace

TEST_CASE("finite differences are exact on the contracting map", "[baselines]") {
  auto model = make_model("contracting");
  Vec s(1);
  s << 0.25;
  ObjectiveSpec spec;
  spec.kind = "coord";
  auto objs = make_objectives(*model, spec);
  FdConfig cfg;
  cfg.n_samples = 1000;
  cfg.burn_in = 100;
  cfg.seed = 2;
  auto est = fd_sensitivity(*model, s, 0, objs, cfg);
  REQUIRE(est.size() == 1);
  // After the burn-in both orbits sit on their fixed points 2(s +/- delta),
  // so every sample reports the same difference quotient.
  CHECK(est[0].estimate == Catch::Approx(2.0).margin(1e-12));
  CHECK(est[0].std_error < 1e-12);
  CHECK(est[0].n_samples == 1000);
}

TEST_CASE("finite differences agree with the transfer-operator value", "[baselines]") {
  auto model = make_model("doubling");
  Vec s(1);
  s << 0.3;
  auto objs = trig_objs(*model);
  FdConfig cfg;
  cfg.delta = 0.05;
  cfg.n_samples = 200000;
  cfg.burn_in = 100;
  cfg.seed = 4;
  auto est = fd_sensitivity(*model, s, 0, objs, cfg);
  REQUIRE(est.size() == 2);
  CHECK(est[0].id == "cos");
  CHECK(est[0].std_error > 0.005);
  CHECK(est[0].std_error < 0.1);
  // Wide delta keeps the Monte Carlo noise manageable; the quadratic bias it
  // introduces is far below the remaining statistical error.
  CHECK(std::abs(est[0].estimate - 0.1473365567) < 4.0 * est[0].std_error + 0.02);
}

TEST_CASE("finite differences are reproducible per seed", "[baselines]") {
  auto model = make_model("doubling");
  Vec s(1);
  s << 0.3;
  auto objs = trig_objs(*model);
  FdConfig cfg;
  cfg.n_samples = 2000;
  cfg.burn_in = 20;
  cfg.seed = 42;
  auto a = fd_sensitivity(*model, s, 0, objs, cfg);
  auto b = fd_sensitivity(*model, s, 0, objs, cfg);
  CHECK(a[0].estimate == b[0].estimate);
  CHECK(a[0].std_error == b[0].std_error);
  cfg.seed = 43;
  auto c = fd_sensitivity(*model, s, 0, objs, cfg);
  CHECK(a[0].estimate != c[0].estimate);
}

TEST_CASE("paired orbits collapse the variance of linearly coupled responses",
          "[baselines]") {
  // The radial dynamics responds to s1 exactly linearly and the angular
  // driver never sees s1, so the plus and minus orbits of one sample differ
  // by a deterministic multiple of delta: every sample returns the same
  // quotient and the reported standard error degenerates to zero. Consumers
  // comparing against these estimates need an absolute floor, not stderr
  // alone.
  auto model = make_model("solenoid");
  Vec s(2);
  s << 1.4, 0.3;
  ObjectiveSpec spec;
  spec.kind = "coord";
  spec.axis = 0;
  auto objs = make_objectives(*model, spec);
  FdConfig cfg;
  cfg.n_samples = 500;
  cfg.burn_in = 100;
  cfg.seed = 6;
  auto est = fd_sensitivity(*model, s, 0, objs, cfg);
  CHECK(est[0].estimate == Catch::Approx(1.0).margin(1e-9));
  CHECK(est[0].std_error < 1e-9);
}

TEST_CASE("finite differences reject bad configurations", "[baselines]") {
  auto model = make_model("doubling");
  Vec s(1);
  s << 0.3;
  auto objs = trig_objs(*model);
  FdConfig cfg;
  cfg.delta = 0.0;
  CHECK_THROWS_AS(fd_sensitivity(*model, s, 0, objs, cfg), config_error);
  cfg.delta = 1e-3;
  cfg.n_samples = 1;
  CHECK_THROWS_AS(fd_sensitivity(*model, s, 0, objs, cfg), config_error);
  cfg.n_samples = 100;
  cfg.horizon = 0;
  CHECK_THROWS_AS(fd_sensitivity(*model, s, 0, objs, cfg), config_error);
  cfg.horizon = 1;
  CHECK_THROWS_AS(fd_sensitivity(*model, s, 3, objs, cfg), config_error);
}

TEST_CASE("ensemble estimator is exact on the contracting map", "[baselines]") {
  auto model = make_model("contracting");
  Vec s(1);
  s << 0.25;
  ObjectiveSpec spec;
  spec.kind = "coord";
  auto objs = make_objectives(*model, spec);
  EnsembleConfig cfg;
  cfg.horizon = 40;
  cfg.n_samples = 100;
  cfg.burn_in = 10;
  cfg.seed = 8;
  auto res = ensemble_sensitivity(*model, s, 0, objs, cfg);
  REQUIRE(res.size() == 1);
  REQUIRE(res[0].summand_mean.size() == 41);
  // The tangent halves each step with no spread: summand i is exactly 2^-i
  // and the horizon sum telescopes to 2.
  CHECK(res[0].summand_mean[0] == 1.0);
  CHECK(res[0].summand_mean[5] == Catch::Approx(std::pow(0.5, 5)).margin(1e-15));
  CHECK(res[0].summand_var[5] == 0.0);
  CHECK(res[0].estimate == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("ensemble summand variance grows at twice the expansion rate", "[baselines]") {
  auto model = make_model("solenoid");
  Vec s(2);
  s << 1.4, 0.3;
  ObjectiveSpec spec;
  spec.axis = 1;  // cos and sin of the angular coordinate
  auto objs = make_objectives(*model, spec);
  EnsembleConfig cfg;
  cfg.horizon = 12;
  cfg.n_samples = 4000;
  cfg.burn_in = 100;
  cfg.seed = 10;
  auto res = ensemble_sensitivity(*model, s, 1, objs, cfg);
  REQUIRE(res.size() == 2);
  const auto& v = res[0].summand_var;
  REQUIRE(v.size() == 13);
  // Four steps at the top expansion rate square to roughly 4^4 = 256 in the
  // variance; a broad band around that is enough to pin the growth law.
  CHECK(v[10] / v[6] > 30.0);
  CHECK(v[10] / v[6] < 2000.0);
  CHECK(v[12] > v[2] * 1000.0);
}

TEST_CASE("ensemble estimator rejects bad configurations", "[baselines]") {
  auto model = make_model("contracting");
  Vec s(1);
  s << 0.25;
  ObjectiveSpec spec;
  spec.kind = "coord";
  auto objs = make_objectives(*model, spec);
  EnsembleConfig cfg;
  cfg.n_samples = 1;
  CHECK_THROWS_AS(ensemble_sensitivity(*model, s, 0, objs, cfg), config_error);
  cfg.n_samples = 10;
  cfg.horizon = -1;
  CHECK_THROWS_AS(ensemble_sensitivity(*model, s, 0, objs, cfg), config_error);
  cfg.horizon = 5;
  cfg.burn_in = 0;
  CHECK_THROWS_AS(ensemble_sensitivity(*model, s, 0, objs, cfg), config_error);
  cfg.burn_in = 10;
  CHECK_THROWS_AS(ensemble_sensitivity(*model, s, 2, objs, cfg), config_error);
}

TEST_CASE("cell-transfer stationary density is uniform for exact doubling", "[baselines]") {
  auto model = make_model("doubling");
  Vec s(1);
  s << 0.0;
  auto rho = ulam_stationary(*model, s, 1024, 16);
  REQUIRE(rho.size() == 1024);
  for (double r : rho) CHECK(r == Catch::Approx(1.0 / 1024).margin(1e-12));

  auto objs = trig_objs(*model);
  UlamConfig cfg;
  cfg.n_cells = 1024;
  cfg.subdiv = 16;
  auto est = ulam_sensitivity(*model, s, 0, objs, cfg);
  // At s = 0 the density is flat on both sides of the difference and every
  // first-order response vanishes.
  CHECK(std::abs(est[0].sensitivity) < 1e-5);
  CHECK(std::abs(est[1].sensitivity) < 1e-5);
  CHECK(est[0].average_plus == Catch::Approx(0.0).margin(1e-3));
}

TEST_CASE("cell-transfer sensitivities at the working parameter", "[baselines]") {
  auto model = make_model("doubling");
  Vec s(1);
  s << 0.3;
  UlamConfig cfg;  // 4096 cells, subdiv 64, delta 1e-3

  auto est = ulam_sensitivity(*model, s, 0, trig_objs(*model), cfg);
  CHECK(est[0].sensitivity == Catch::Approx(0.1473365567).margin(5e-6));
  // Conjugacy under theta -> 1 - theta forces the sine response to zero.
  CHECK(std::abs(est[1].sensitivity) < 1e-9);

  ObjectiveSpec spec;
  spec.kind = "nodal";
  spec.nodes = 8;
  auto hats = ulam_sensitivity(*model, s, 0, make_objectives(*model, spec), cfg);
  REQUIRE(hats.size() == 8);
  const double expect[8] = {0.039807, 0.024408, -0.0043478, -0.024470,
                            -0.030987, -0.024470, -0.0043478, 0.024408};
  double sum = 0.0;
  for (int k = 0; k < 8; ++k) {
    CHECK(hats[k].sensitivity == Catch::Approx(expect[k]).margin(1e-4));
    sum += hats[k].sensitivity;
  }
  // Partition of unity: the responses cancel to round-off.
  CHECK(std::abs(sum) < 1e-9);
}

TEST_CASE("cell-transfer rejects unsupported models and bad grids", "[baselines]") {
  auto sol = make_model("solenoid");
  Vec ss(2);
  ss << 1.4, 0.3;
  CHECK_THROWS_AS(ulam_stationary(*sol, ss, 1024, 16), config_error);

  auto con = make_model("contracting");
  Vec sc(1);
  sc << 0.25;
  CHECK_THROWS_AS(ulam_stationary(*con, sc, 1024, 16), config_error);

  auto dbl = make_model("doubling");
  Vec sd(1);
  sd << 0.3;
  CHECK_THROWS_AS(ulam_stationary(*dbl, sd, 50, 16), config_error);
  CHECK_THROWS_AS(ulam_stationary(*dbl, sd, 1024, 0), config_error);

  UlamConfig cfg;
  cfg.delta = -1.0;
  CHECK_THROWS_AS(ulam_sensitivity(*dbl, sd, 0, trig_objs(*dbl), cfg), config_error);
  cfg.delta = 1e-3;
  CHECK_THROWS_AS(ulam_sensitivity(*dbl, sd, 2, trig_objs(*dbl), cfg), config_error);
}
