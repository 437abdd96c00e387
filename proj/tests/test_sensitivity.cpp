#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "splitsens/splitsens.hpp"

using namespace splitsens;

namespace {

// Reference correlation accumulator, written as plainly as possible.
UnstableAccumulation naive_accumulate(const std::vector<double>& J,
                                      const std::vector<double>& g, int L) {
  const long nj = static_cast<long>(J.size());
  const long ng = static_cast<long>(g.size());
  double jbar = 0, gbar = 0;
  for (double x : J) jbar += x;
  for (double x : g) gbar += x;
  jbar /= nj;
  gbar /= ng;
  UnstableAccumulation out;
  double total = 0;
  for (int l = 0; l <= L; ++l) {
    const long nl = std::min(ng, nj - l);
    double c = 0, c2 = 0;
    for (long k = 0; k < nl; ++k) {
      double p = (J[k + l] - jbar) * (g[k] - gbar);
      c += p;
      c2 += p * p;
    }
    total += c / nl;
    if (l == L) {
      out.tail_value = c / nl;
      double var = std::max(0.0, c2 / nl - (c / nl) * (c / nl));
      out.tail_stderr = std::sqrt(var / nl);
    }
  }
  out.contribution = -total;
  return out;
}

}  // namespace

TEST_CASE("correlation accumulator matches a naive reference", "[sensitivity]") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> J(400), g(330);
  for (double& x : J) x = gauss(rng);
  for (double& x : g) x = gauss(rng);

  // L = 100 exceeds the 70-sample lag headroom, so the pair count switches
  // from len(g) to len(J) - l partway through; both regimes are covered.
  UnstableAccumulation a = accumulate_unstable(J, g, 100);
  UnstableAccumulation b = naive_accumulate(J, g, 100);
  CHECK(a.contribution == Catch::Approx(b.contribution).epsilon(1e-13));
  CHECK(a.tail_value == Catch::Approx(b.tail_value).epsilon(1e-13));
  CHECK(a.tail_stderr == Catch::Approx(b.tail_stderr).epsilon(1e-13));
}

TEST_CASE("correlation accumulator is linear in the objective series", "[sensitivity]") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> J(300), g(250);
  for (double& x : J) x = gauss(rng);
  for (double& x : g) x = gauss(rng);

  const double a = -2.5, b = 0.7;
  std::vector<double> Jt(J.size());
  for (std::size_t k = 0; k < J.size(); ++k) Jt[k] = a * J[k] + b;

  // Centering removes the offset, so the estimate must scale exactly with a.
  double base = accumulate_unstable(J, g, 40).contribution;
  double scaled = accumulate_unstable(Jt, g, 40).contribution;
  CHECK(scaled == Catch::Approx(a * base).margin(1e-12 * (1.0 + std::abs(a * base))));
}

TEST_CASE("correlation accumulator rejects unusable series", "[sensitivity]") {
  std::vector<double> J(50, 1.0), g(30, 1.0);
  CHECK_THROWS_AS(accumulate_unstable(J, g, -1), config_error);
  CHECK_THROWS_AS(accumulate_unstable(g, J, 10), config_error);  // J shorter than g
  CHECK_THROWS_AS(accumulate_unstable(J, g, 49), config_error);  // no pairs left
  CHECK_THROWS_AS(accumulate_unstable(std::vector<double>{}, g, 0), config_error);
  CHECK_THROWS_AS(accumulate_stable(std::vector<double>{}), config_error);
  CHECK(accumulate_stable(std::vector<double>{1.0, 2.0, 3.0}) == Catch::Approx(2.0));
}

TEST_CASE("density gradient recursion forgets its initialization", "[sensitivity]") {
  auto model = make_model("solenoid");
  Vec s(2);
  s << 1.4, 0.3;
  Vec u0(3);
  u0 << 1.5, 0.37, 0.1;
  Trajectory traj = Trajectory::evolve(*model, s, 1, u0, 1000, 600);
  UnstableFrames uf = forward_unstable_frames(traj, 1, 200, 5);

  Vec pa = Vec::Zero(3);
  Vec pb(3);
  pb << 1.3, -0.8, 2.1;
  for (long i = 201; i <= 261; ++i) {
    const Vec src = transported_density_source(traj, i - 1);
    pa = density_gradient_step(pa, traj.jac(i - 1), src, uf.Q[i]);
    pb = density_gradient_step(pb, traj.jac(i - 1), src, uf.Q[i]);
  }
  // The transport contracts at the expanding rate, so 60 steps reduce the
  // initial disagreement by roughly 2^60.
  CHECK((pa - pb).norm() < 1e-10);
  CHECK(pa.norm() > 1e-3);  // and the converged object is not trivially zero
}

TEST_CASE("projected transport reduces exactly to the scalar recursion", "[sensitivity]") {
  // The angular dynamics of the 3-D map is autonomous and written with the
  // same floating-point operations as the 1-D map, so from equal angles both
  // orbits stay bit-identical. On such a pair the projected 3-D density
  // recursion collapses onto the scalar one: the frame coordinate of psi
  // equals the angular frame component times the scalar psi.
  auto sol = make_model("solenoid");
  auto cir = make_model("doubling");
  Vec ss(2), sc(1);
  ss << 1.4, 0.3;
  sc << 0.3;
  Vec u3(3), u1(1);
  u3 << 1.5, 0.37, 0.1;
  u1 << 0.37;
  const long K = 1500;
  Trajectory t3 = Trajectory::evolve(*sol, ss, 1, u3, 0, K);
  Trajectory t1 = Trajectory::evolve(*cir, sc, 0, u1, 0, K);

  for (long i = 0; i <= K; i += 123) CHECK(t1.state(i)(0) == t3.state(i)(1));

  UnstableFrames uf = forward_unstable_frames(t3, 1, 200, 5);
  AdjointFrames af = backward_adjoint_frames(t3, 1, 200, 5);

  Vec psi3 = Vec::Zero(3);
  double psi1 = 0.0;
  std::vector<double> sigma3(K + 1, 0.0), sigma1(K + 1, 0.0);
  for (long i = 1; i <= K; ++i) {
    psi3 = density_gradient_step(psi3, t3.jac(i - 1), transported_density_source(t3, i - 1),
                                 uf.Q[i]);
    // Scalar form: pull back through 1/phi' and subtract phi''/phi'^2.
    const double fp = t1.det(i - 1);
    const double fpp = t1.det_grad(i - 1)(0);
    psi1 = psi1 / fp - fpp / (fp * fp);
    sigma3[i] = (uf.Q[i].transpose() * psi3)(0);
    sigma1[i] = uf.Q[i](1, 0) * psi1;
  }
  double worst = 0.0;
  for (long i = 300; i <= K; ++i) worst = std::max(worst, std::abs(sigma3[i] - sigma1[i]));
  CHECK(worst < 1e-12);

  // The full transport series agrees too: expanding-component pairing plus
  // divergence, each computed by its own dimensional path.
  UnstableFrames uf1;
  uf1.m = 1;
  AdjointFrames af1;
  psi3 = Vec::Zero(3);
  psi1 = 0.0;
  for (long i = 1; i <= K - 220; ++i) {
    psi3 = density_gradient_step(psi3, t3.jac(i - 1), transported_density_source(t3, i - 1),
                                 uf.Q[i]);
    const double fp = t1.det(i - 1);
    psi1 = psi1 / fp - t1.det_grad(i - 1)(0) / (fp * fp);
    if (i >= 500 && i % 157 == 0) {
      SplitResult sp = oblique_split(t3.field(i), uf.Q[i], af.P[i]);
      const double g3 = psi3.dot(sp.unstable) + unstable_divergence(*sol, t3, uf, af, i);
      const double g1 =
          psi1 * t1.field(i)(0) + unstable_divergence(*cir, t1, uf1, af1, i);
      CHECK(g3 == Catch::Approx(g1).margin(3e-9));
    }
  }
}

TEST_CASE("contracting map sensitivity is exact", "[sensitivity]") {
  auto model = make_model("contracting");
  Vec s(1);
  s << 0.25;
  ObjectiveSpec spec;
  spec.kind = "coord";
  spec.axis = 0;
  auto objs = make_objectives(*model, spec);
  SensitivityConfig cfg;
  cfg.K = 10000;
  cfg.seed = 21;
  SensitivityResult res = run_split_sensitivity(*model, s, 0, objs, cfg);
  REQUIRE(res.objectives.size() == 1);
  CHECK(res.m == 0);
  CHECK(res.m_confirmed);
  CHECK(res.objectives[0].id == "u");
  // u' = u/2 + s has fixed point 2s, so the average moves at rate 2.
  CHECK(res.objectives[0].total == Catch::Approx(2.0).margin(1e-9));
  CHECK(res.objectives[0].unstable == 0.0);
  CHECK(res.objectives[0].stable == res.objectives[0].total);
}

TEST_CASE("fully expanding path reproduces the transfer-operator value", "[sensitivity]") {
  auto model = make_model("doubling");
  Vec s(1);
  s << 0.3;
  ObjectiveSpec spec;  // trig: cos and sin of 2 pi theta
  auto objs = make_objectives(*model, spec);
  SensitivityConfig cfg;
  cfg.K = 100000;
  cfg.seed = 3;
  SensitivityResult res = run_split_sensitivity(*model, s, 0, objs, cfg);
  REQUIRE(res.objectives.size() == 2);
  CHECK(res.m == 1);
  CHECK(res.m_confirmed);
  CHECK(res.g_first == cfg.M);
  CHECK(res.g_last == cfg.K);
  // Independently computed by a dense discretization of the transfer
  // operator: d<cos>/ds = 0.14734 at s = 0.3.
  CHECK(res.objectives[0].id == "cos");
  CHECK(res.objectives[0].total == Catch::Approx(0.1473365567).margin(0.02));
  CHECK(res.objectives[0].stable == 0.0);
  // The map commutes with theta -> 1 - theta for every s, so the stationary
  // density is symmetric and d<sin>/ds vanishes identically.
  CHECK(res.objectives[1].id == "sin");
  CHECK(std::abs(res.objectives[1].total) < 0.025);
}

TEST_CASE("mixed path resolves an exactly known derivative", "[sensitivity]") {
  // The radial dynamics r' = s1 + (r - s1)/4 + ... shifts its average one to
  // one with s1, the perturbation field for s1 has no expanding component,
  // and the tangent recursion converges to (1, 0, 0). Every piece of the
  // mixed path has to cooperate to return exactly 1.
  auto model = make_model("solenoid");
  Vec s(2);
  s << 1.4, 0.3;
  ObjectiveSpec spec;
  spec.kind = "coord";
  spec.axis = 0;
  auto objs = make_objectives(*model, spec);
  SensitivityConfig cfg;
  cfg.K = 20000;
  cfg.seed = 11;
  SensitivityResult res = run_split_sensitivity(*model, s, 0, objs, cfg);
  REQUIRE(res.objectives.size() == 1);
  CHECK(res.m == 1);
  CHECK(res.m_confirmed);
  CHECK(res.g_last == cfg.K - cfg.warm_up - cfg.div_chain);
  CHECK(res.objectives[0].stable == Catch::Approx(1.0).margin(1e-9));
  CHECK(std::abs(res.objectives[0].unstable) < 1e-9);
  CHECK(res.objectives[0].total == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("hat sensitivities sum to zero by partition of unity", "[sensitivity]") {
  auto model = make_model("doubling");
  Vec s(1);
  s << 0.3;
  ObjectiveSpec spec;
  spec.kind = "nodal";
  spec.axis = 0;
  spec.nodes = 8;
  auto objs = make_objectives(*model, spec);
  SensitivityConfig cfg;
  cfg.K = 50000;
  cfg.seed = 13;
  SensitivityResult res = run_split_sensitivity(*model, s, 0, objs, cfg);
  REQUIRE(res.objectives.size() == 8);
  // The hats sum pointwise to one, so the centered objective series sum to
  // zero and every correlation cancels; this holds to round-off at any K.
  double sum = 0.0, spread = 0.0;
  for (const auto& o : res.objectives) {
    sum += o.total;
    spread = std::max(spread, std::abs(o.total));
  }
  CHECK(std::abs(sum) < 1e-9);
  CHECK(spread > 1e-3);  // individual values are far from zero
}

TEST_CASE("driver rejects inconsistent configurations", "[sensitivity]") {
  auto model = make_model("solenoid");
  Vec s(2);
  s << 1.4, 0.3;
  ObjectiveSpec spec;
  auto objs = make_objectives(*model, spec);

  SensitivityConfig cfg;
  cfg.K = 2000;
  cfg.m = 1;
  cfg.M = 100;  // below warm_up + div_chain
  CHECK_THROWS_AS(run_split_sensitivity(*model, s, 1, objs, cfg), config_error);

  cfg.M = 500;
  cfg.L = 221;  // exceeds the lag headroom warm_up + div_chain
  CHECK_THROWS_AS(run_split_sensitivity(*model, s, 1, objs, cfg), config_error);

  cfg.L = 50;
  cfg.m = 5;  // more expanding directions than dimensions
  CHECK_THROWS_AS(run_split_sensitivity(*model, s, 1, objs, cfg), config_error);

  cfg.m = 1;
  cfg.K = 720;  // transport series would end before accumulation starts
  CHECK_THROWS_AS(run_split_sensitivity(*model, s, 1, objs, cfg), config_error);

  cfg.K = 2000;
  CHECK_THROWS_AS(run_split_sensitivity(*model, s, 1, {}, cfg), config_error);
}

TEST_CASE("tangent recursion grows at the expanding rate with the full field",
          "[sensitivity]") {
  auto model = make_model("solenoid");
  Vec s(2);
  s << 1.4, 0.3;
  TangentGrowth tg = tangent_growth(*model, s, 1, /*full_field=*/true, 2000, 1000, 200,
                                    17, /*record=*/60, /*fit_lo=*/5, /*fit_hi=*/40);
  CHECK(tg.fitted_slope > 0.55);
  CHECK(tg.fitted_slope < 0.85);
  CHECK(tg.log_norms.back() - tg.log_norms.front() > 20.0);
}

TEST_CASE("tangent recursion stays bounded with the non-expanding component",
          "[sensitivity]") {
  auto model = make_model("solenoid");
  Vec s(2);
  s << 1.4, 0.3;
  TangentGrowth tg = tangent_growth(*model, s, 1, /*full_field=*/false, 6000, 1000, 200,
                                    17, 60, 5, 40);
  CHECK(tg.max_norm < 10.0);
  CHECK(tg.max_norm > 1e-3);

  CHECK_THROWS_AS(tangent_growth(*model, s, 1, true, 2000, 1000, 200, 17, 60, 0, 40),
                  config_error);
  CHECK_THROWS_AS(tangent_growth(*model, s, 1, true, 2000, 1000, 200, 17, 50, 5, 50),
                  config_error);
}
