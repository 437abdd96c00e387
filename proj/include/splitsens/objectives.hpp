#pragma once

// Objective functions J(u) whose stationary averages get differentiated.
// Three families cover what the drivers need: raw coordinates, smooth
// trigonometric functions of one coordinate, and piecewise-linear hat
// functions on a coordinate grid (singly or as a tensor product over two
// axes). Hats on a full periodic grid form a partition of unity, so their
// sensitivities must sum to zero; tests lean on that.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "splitsens/core.hpp"
#include "splitsens/model.hpp"

namespace splitsens {

struct Objective {
  std::string id;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

// Hat centered at c with half-width w on a circle of period `period`
// (period 0 means the coordinate is treated as a line). Returns the value
// and the slope at x.
inline std::pair<double, double> hat_eval(double x, double c, double w, double period) {
  double d = x - c;
  if (period > 0) d -= period * std::round(d / period);
  if (d <= -w || d >= w) return {0.0, 0.0};
  if (d < 0) return {1.0 + d / w, 1.0 / w};
  return {1.0 - d / w, -1.0 / w};
}

struct ObjectiveSpec {
  std::string kind = "trig";  // trig | coord | nodal | nodal2
  int axis = 0;
  int nodes = 16;
  int axis2 = -1;
  int nodes2 = 16;
  // Grid range for nodal objectives on a non-periodic axis. Ignored for
  // periodic axes, which always use the full fundamental domain.
  double lo = 0.0;
  double hi = 1.0;
};

inline std::vector<Objective> make_objectives(const MapModel& model,
                                              const ObjectiveSpec& spec) {
  const int n = model.dim();
  if (spec.axis < 0 || spec.axis >= n)
    throw config_error("objective axis out of range for model '" + model.id() + "'");
  const auto names = model.coord_names();
  const Vec periods = model.coord_periods();
  std::vector<Objective> objs;

  auto axis_grid = [&](int axis, int nodes, double lo, double hi) {
    // On a periodic axis the nodes tile the whole circle and neighbouring
    // hats overlap halfway, giving a partition of unity. On a line the same
    // layout spans [lo, hi].
    double period = periods(axis);
    double a = period > 0 ? 0.0 : lo;
    double b = period > 0 ? period : hi;
    if (!(b > a)) throw config_error("nodal grid needs hi > lo");
    double step = (b - a) / nodes;
    struct Grid {
      std::vector<double> centers;
      double width;
      double period;
    } g;
    g.width = step;
    g.period = period;
    for (int k = 0; k < nodes; ++k) g.centers.push_back(a + k * step);
    return g;
  };

  if (spec.kind == "coord") {
    int ax = spec.axis;
    objs.push_back(Objective{names[ax],
                    [ax](const Vec& u) { return u(ax); },
                    [ax, n](const Vec& u) {
                      (void)u;
                      Vec g = Vec::Zero(n);
                      g(ax) = 1.0;
                      return g;
                    }});
  } else if (spec.kind == "trig") {
    int ax = spec.axis;
    objs.push_back(Objective{"cos",
                    [ax](const Vec& u) { return std::cos(kTwoPi * u(ax)); },
                    [ax, n](const Vec& u) {
                      Vec g = Vec::Zero(n);
                      g(ax) = -kTwoPi * std::sin(kTwoPi * u(ax));
                      return g;
                    }});
    objs.push_back(Objective{"sin",
                    [ax](const Vec& u) { return std::sin(kTwoPi * u(ax)); },
                    [ax, n](const Vec& u) {
                      Vec g = Vec::Zero(n);
                      g(ax) = kTwoPi * std::cos(kTwoPi * u(ax));
                      return g;
                    }});
  } else if (spec.kind == "nodal") {
    if (spec.nodes < 2) throw config_error("nodal objectives need at least 2 nodes");
    auto g = axis_grid(spec.axis, spec.nodes, spec.lo, spec.hi);
    int ax = spec.axis;
    for (int k = 0; k < spec.nodes; ++k) {
      double c = g.centers[k], w = g.width, period = g.period;
      objs.push_back(Objective{"hat_" + std::to_string(k),
                      [ax, c, w, period](const Vec& u) {
                        return hat_eval(u(ax), c, w, period).first;
                      },
                      [ax, c, w, period, n](const Vec& u) {
                        Vec grad = Vec::Zero(n);
                        grad(ax) = hat_eval(u(ax), c, w, period).second;
                        return grad;
                      }});
    }
  } else if (spec.kind == "nodal2") {
    if (spec.axis2 < 0 || spec.axis2 >= n || spec.axis2 == spec.axis)
      throw config_error("nodal2 needs a distinct second axis");
    if (spec.nodes < 2 || spec.nodes2 < 2)
      throw config_error("nodal2 objectives need at least 2 nodes per axis");
    auto ga = axis_grid(spec.axis, spec.nodes, spec.lo, spec.hi);
    auto gb = axis_grid(spec.axis2, spec.nodes2, spec.lo, spec.hi);
    int ax = spec.axis, ax2 = spec.axis2;
    for (int i = 0; i < spec.nodes; ++i) {
      for (int j = 0; j < spec.nodes2; ++j) {
        double ca = ga.centers[i], wa = ga.width, pa = ga.period;
        double cb = gb.centers[j], wb = gb.width, pb = gb.period;
        objs.push_back(Objective{
            "hat_" + std::to_string(i) + "_" + std::to_string(j),
             [ax, ax2, ca, wa, pa, cb, wb, pb](const Vec& u) {
               return hat_eval(u(ax), ca, wa, pa).first * hat_eval(u(ax2), cb, wb, pb).first;
             },
             [ax, ax2, ca, wa, pa, cb, wb, pb, n](const Vec& u) {
               auto [fa, da] = hat_eval(u(ax), ca, wa, pa);
               auto [fb, db] = hat_eval(u(ax2), cb, wb, pb);
               Vec grad = Vec::Zero(n);
               grad(ax) = da * fb;
               grad(ax2) = fa * db;
               return grad;
             }});
      }
    }
  } else {
    throw config_error("unknown objective kind '" + spec.kind +
                       "' (valid: trig, coord, nodal, nodal2)");
  }
  return objs;
}

}  // namespace splitsens
