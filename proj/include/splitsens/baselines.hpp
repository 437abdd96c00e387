#pragma once

// Independent reference methods the split-sensitivity results are validated
// against:
//   - finite-difference Monte Carlo over independent orbits, the honest but
//     slow oracle for any ergodic average;
//   - the naive ensemble tangent estimator, whose per-step summand variance
//     grows at twice the top Lyapunov rate and which therefore cannot
//     converge for chaotic maps (kept as a diagnostic of exactly that);
//   - a cell-transfer (Ulam) discretization for 1-D circle maps, which gives
//     sharp stationary averages cheaply and serves as the precision oracle
//     in one dimension.
//
// All Monte Carlo loops draw per-sample generators from one master seed, so
// results are bit-reproducible regardless of future batching changes, and
// partial sums are accumulated per 8192-sample block to keep round-off from
// growing with the sample count.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "splitsens/core.hpp"
#include "splitsens/model.hpp"
#include "splitsens/objectives.hpp"

namespace splitsens {

inline constexpr long kMcBlock = 8192;

struct FdConfig {
  double delta = 1e-3;
  long n_samples = 100000;
  long burn_in = 1000;
  long horizon = 1;  // states averaged per orbit after burn-in
  std::uint64_t seed = 0;
};

struct FdEstimate {
  std::string id;
  double estimate = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
};

// Central-difference sensitivity: each sample runs the same initial state
// through the map at s + delta and s - delta. Pairing the two runs on one
// initial state cancels none of the chaotic decorrelation (the orbits
// separate regardless) but keeps the estimator definition simple and the
// per-sample difference bounded by the objective's range.
inline std::vector<FdEstimate> fd_sensitivity(const MapModel& model, const Vec& params,
                                              int param_index,
                                              const std::vector<Objective>& objs,
                                              const FdConfig& cfg) {
  if (!(cfg.delta > 0)) throw config_error("fd: delta must be positive");
  if (cfg.n_samples < 2) throw config_error("fd: need at least 2 samples");
  if (cfg.burn_in < 0 || cfg.horizon < 1)
    throw config_error("fd: burn_in must be >= 0 and horizon >= 1");
  if (param_index < 0 || param_index >= model.num_params())
    throw config_error("fd: parameter index out of range");

  Vec sp = params, sm = params;
  sp(param_index) += cfg.delta;
  sm(param_index) -= cfg.delta;

  const std::size_t nobj = objs.size();
  std::vector<double> sum(nobj, 0.0), sumsq(nobj, 0.0);
  std::vector<double> bsum(nobj), bsumsq(nobj), jp(nobj), jm(nobj);

  for (long b = 0; b * kMcBlock < cfg.n_samples; ++b) {
    std::fill(bsum.begin(), bsum.end(), 0.0);
    std::fill(bsumsq.begin(), bsumsq.end(), 0.0);
    const long lo = b * kMcBlock;
    const long hi = std::min(cfg.n_samples, lo + kMcBlock);
    for (long k = lo; k < hi; ++k) {
      std::mt19937_64 rng(derive_seed(cfg.seed, 5, static_cast<std::uint64_t>(k)));
      const Vec u0 = model.sample_state(rng, params);
      Vec up = u0, um = u0;
      for (long i = 0; i < cfg.burn_in; ++i) {
        up = model.advance(up, sp);
        um = model.advance(um, sm);
      }
      std::fill(jp.begin(), jp.end(), 0.0);
      std::fill(jm.begin(), jm.end(), 0.0);
      for (long h = 0; h < cfg.horizon; ++h) {
        up = model.advance(up, sp);
        um = model.advance(um, sm);
        for (std::size_t o = 0; o < nobj; ++o) {
          jp[o] += objs[o].value(up);
          jm[o] += objs[o].value(um);
        }
      }
      for (std::size_t o = 0; o < nobj; ++o) {
        const double diff =
            (jp[o] - jm[o]) / (2.0 * cfg.delta * static_cast<double>(cfg.horizon));
        bsum[o] += diff;
        bsumsq[o] += diff * diff;
      }
    }
    for (std::size_t o = 0; o < nobj; ++o) {
      sum[o] += bsum[o];
      sumsq[o] += bsumsq[o];
    }
  }

  std::vector<FdEstimate> out;
  const double N = static_cast<double>(cfg.n_samples);
  for (std::size_t o = 0; o < nobj; ++o) {
    FdEstimate e;
    e.id = objs[o].id;
    e.n_samples = cfg.n_samples;
    e.estimate = sum[o] / N;
    const double var = std::max(0.0, (sumsq[o] - sum[o] * sum[o] / N) / (N - 1.0));
    e.std_error = std::sqrt(var / N);
    out.push_back(e);
  }
  return out;
}

struct EnsembleConfig {
  long horizon = 13;       // tangent steps per sample
  long n_samples = 10000;
  long burn_in = 1000;
  std::uint64_t seed = 0;
};

struct EnsembleObjectiveResult {
  std::string id;
  double estimate = 0.0;              // sum of per-step summand means
  std::vector<double> summand_mean;   // index 0..horizon
  std::vector<double> summand_var;
};

// Ensemble tangent estimator: average of d(J composed with the i-fold map)/ds
// over initial conditions, summed over i. Exact in expectation at every
// horizon, but each sample's tangent vector grows like the top Lyapunov
// factor, so the summand variance grows like its square and the sample cost
// for fixed accuracy explodes with the horizon. The per-i variance profile
// is returned because that growth rate is the quantity of interest.
inline std::vector<EnsembleObjectiveResult> ensemble_sensitivity(
    const MapModel& model, const Vec& params, int param_index,
    const std::vector<Objective>& objs, const EnsembleConfig& cfg) {
  if (cfg.n_samples < 2) throw config_error("ensemble: need at least 2 samples");
  if (cfg.horizon < 0) throw config_error("ensemble: horizon must be non-negative");
  if (cfg.burn_in < 1) throw config_error("ensemble: burn_in must be positive");
  if (param_index < 0 || param_index >= model.num_params())
    throw config_error("ensemble: parameter index out of range");

  const std::size_t nobj = objs.size();
  const std::size_t Np = static_cast<std::size_t>(cfg.horizon) + 1;
  std::vector<std::vector<double>> sum(nobj, std::vector<double>(Np, 0.0));
  std::vector<std::vector<double>> sumsq(nobj, std::vector<double>(Np, 0.0));

  for (long k = 0; k < cfg.n_samples; ++k) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 6, static_cast<std::uint64_t>(k)));
    Vec u = model.sample_state(rng, params);
    for (long i = 0; i < cfg.burn_in - 1; ++i) u = model.advance(u, params);
    // The perturbation enters through the step that lands on the measured
    // state, so the tangent seed is the parameter derivative one step back.
    Vec w = model.param_deriv(u, params, param_index);
    u = model.advance(u, params);
    for (std::size_t i = 0; i < Np; ++i) {
      if (i > 0) {
        w = model.jacobian(u, params) * w;
        u = model.advance(u, params);
      }
      if (!w.allFinite())
        throw numerical_error("ensemble: tangent overflow at horizon step " +
                              std::to_string(i));
      for (std::size_t o = 0; o < nobj; ++o) {
        const double x = objs[o].gradient(u).dot(w);
        sum[o][i] += x;
        sumsq[o][i] += x * x;
      }
    }
  }

  std::vector<EnsembleObjectiveResult> out;
  const double N = static_cast<double>(cfg.n_samples);
  for (std::size_t o = 0; o < nobj; ++o) {
    EnsembleObjectiveResult r;
    r.id = objs[o].id;
    r.summand_mean.resize(Np);
    r.summand_var.resize(Np);
    for (std::size_t i = 0; i < Np; ++i) {
      r.summand_mean[i] = sum[o][i] / N;
      r.summand_var[i] =
          std::max(0.0, (sumsq[o][i] - sum[o][i] * sum[o][i] / N) / (N - 1.0));
      r.estimate += r.summand_mean[i];
    }
    out.push_back(r);
  }
  return out;
}

struct UlamConfig {
  int n_cells = 4096;
  int subdiv = 64;     // subintervals per cell when pushing mass forward
  double delta = 1e-3;
};

// Stationary cell masses of a 1-D circle map under the Ulam discretization.
// Each cell is cut into subdiv pieces; each piece's image interval (computed
// on the covering space, where the lift is monotone) spreads its mass over
// the cells it overlaps, proportionally to overlap length. Sampling image
// intervals instead of midpoints is what keeps the discretized operator
// exact for piecewise-affine densities; midpoint quantization would feed
// systematic O(1/subdiv) noise straight into the sensitivity difference.
inline std::vector<double> ulam_stationary(const MapModel& model, const Vec& params,
                                           int n_cells, int subdiv) {
  if (model.dim() != 1)
    throw config_error("ulam: only 1-D models are supported");
  if (model.coord_periods()(0) <= 0)
    throw config_error("ulam: the coordinate must be periodic");
  if (n_cells < 100) throw config_error("ulam: n_cells must be at least 100");
  if (subdiv < 1) throw config_error("ulam: subdiv must be positive");

  const double period = model.coord_periods()(0);
  const double cell = period / n_cells;
  std::vector<std::vector<std::pair<int, double>>> rows(n_cells);

  Vec y(1);
  for (int j = 0; j < n_cells; ++j) {
    auto& row = rows[j];
    for (int q = 0; q < subdiv; ++q) {
      const double a = j * cell + q * (cell / subdiv);
      const double b = a + cell / subdiv;
      y(0) = a;
      double lo = model.advance_unwrapped(y, params)(0);
      y(0) = b;
      double hi = model.advance_unwrapped(y, params)(0);
      if (!(hi > lo))
        throw numerical_error("ulam: lift is not increasing on cell " + std::to_string(j));
      const double mass = 1.0 / subdiv;
      long k0 = static_cast<long>(std::floor(lo / cell));
      for (long k = k0; k * cell < hi; ++k) {
        const double ov = std::min(hi, (k + 1) * cell) - std::max(lo, k * cell);
        if (ov <= 0) continue;
        int kk = static_cast<int>(((k % n_cells) + n_cells) % n_cells);
        row.emplace_back(kk, mass * ov / (hi - lo));
      }
    }
  }

  std::vector<double> rho(n_cells, 1.0 / n_cells), next(n_cells);
  const int max_iter = 100000;
  for (int it = 0; it < max_iter; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int j = 0; j < n_cells; ++j) {
      const double w = rho[j];
      for (const auto& [k, p] : rows[j]) next[k] += w * p;
    }
    double drift = 0.0, total = 0.0;
    for (int k = 0; k < n_cells; ++k) {
      drift += std::abs(next[k] - rho[k]);
      total += next[k];
    }
    for (int k = 0; k < n_cells; ++k) next[k] /= total;
    rho.swap(next);
    if (drift < 1e-14) return rho;
  }
  throw numerical_error("ulam: power iteration did not converge in " +
                        std::to_string(max_iter) + " iterations");
}

struct UlamEstimate {
  std::string id;
  double sensitivity = 0.0;
  double average_plus = 0.0;
  double average_minus = 0.0;
};

inline std::vector<UlamEstimate> ulam_sensitivity(const MapModel& model, const Vec& params,
                                                  int param_index,
                                                  const std::vector<Objective>& objs,
                                                  const UlamConfig& cfg) {
  if (!(cfg.delta > 0)) throw config_error("ulam: delta must be positive");
  if (param_index < 0 || param_index >= model.num_params())
    throw config_error("ulam: parameter index out of range");
  Vec sp = params, sm = params;
  sp(param_index) += cfg.delta;
  sm(param_index) -= cfg.delta;
  const std::vector<double> rp = ulam_stationary(model, sp, cfg.n_cells, cfg.subdiv);
  const std::vector<double> rm = ulam_stationary(model, sm, cfg.n_cells, cfg.subdiv);

  const double period = model.coord_periods()(0);
  const double cell = period / cfg.n_cells;
  std::vector<UlamEstimate> out;
  for (const auto& obj : objs) {
    UlamEstimate e;
    e.id = obj.id;
    Vec x(1);
    for (int k = 0; k < cfg.n_cells; ++k) {
      x(0) = (k + 0.5) * cell;
      const double val = obj.value(x);
      e.average_plus += rp[k] * val;
      e.average_minus += rm[k] * val;
    }
    e.sensitivity = (e.average_plus - e.average_minus) / (2.0 * cfg.delta);
    out.push_back(e);
  }
  return out;
}

}  // namespace splitsens
