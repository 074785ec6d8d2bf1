#pragma once

// Functions in E[0,1]: bounded, finitely many discontinuities. Represented as
// samples on a uniform grid plus isolated spike points that override the grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnorm_lab/errors.hpp"

namespace dnorm_lab {

struct GridConfig {
  std::size_t resolution = 200;

  GridConfig() = default;
  explicit GridConfig(std::size_t t) : resolution(t) {
    if (t < 1) throw PreconditionError("grid resolution must be >= 1");
  }

  [[nodiscard]] double spacing() const { return 1.0 / static_cast<double>(resolution); }
  [[nodiscard]] double point(std::size_t k) const {
    return k == resolution ? 1.0 : static_cast<double>(k) / static_cast<double>(resolution);
  }
  [[nodiscard]] std::vector<double> points() const {
    std::vector<double> ts(resolution + 1);
    for (std::size_t k = 0; k <= resolution; ++k) ts[k] = point(k);
    return ts;
  }

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct Spike {
  double t;
  double value;
};

// One evaluation point of an EFunction: grid nodes and spikes merged, with a
// spike replacing the grid value when it sits on a node.
struct EvalPoint {
  double t;
  double value;
};

class EFunction {
 public:
  static constexpr double kTimeTolerance = 1e-12;

  EFunction() : EFunction(GridConfig{}, std::vector<double>(GridConfig{}.resolution + 1, 0.0), {}) {}

  EFunction(GridConfig grid, std::vector<double> values, std::vector<Spike> spikes = {})
      : grid_(grid), values_(std::move(values)), spikes_(std::move(spikes)) {
    if (values_.size() != grid_.resolution + 1) {
      throw PreconditionError("EFunction needs " + std::to_string(grid_.resolution + 1) +
                              " grid values, got " + std::to_string(values_.size()));
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw PreconditionError("EFunction grid values must be finite");
    }
    for (std::size_t i = 0; i < spikes_.size(); ++i) {
      const auto& sp = spikes_[i];
      if (!(sp.t >= 0.0 && sp.t <= 1.0)) {
        throw PreconditionError("spike " + std::to_string(i) + " lies outside [0,1]");
      }
      if (!std::isfinite(sp.value)) throw PreconditionError("spike values must be finite");
    }
    std::sort(spikes_.begin(), spikes_.end(), [](const Spike& a, const Spike& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < spikes_.size(); ++i) {
      if (spikes_[i].t - spikes_[i - 1].t <= kTimeTolerance) {
        throw PreconditionError("duplicate spike location t=" + std::to_string(spikes_[i].t));
      }
    }
    build_points();
  }

  static EFunction constant(GridConfig grid, double c) {
    return EFunction(grid, std::vector<double>(grid.resolution + 1, c));
  }

  static EFunction zero(GridConfig grid) { return constant(grid, 0.0); }

  // Samples fn on the grid nodes.
  static EFunction from_function(GridConfig grid, const std::function<double(double)>& fn) {
    std::vector<double> vals(grid.resolution + 1);
    for (std::size_t k = 0; k <= grid.resolution; ++k) vals[k] = fn(grid.point(k));
    return EFunction(grid, std::move(vals));
  }

  [[nodiscard]] const GridConfig& grid() const { return grid_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<const Spike> spikes() const { return spikes_; }

  // Grid nodes and spikes merged, sorted by t.
  [[nodiscard]] std::span<const EvalPoint> points() const { return points_; }

  // Points where f is nonzero. Every D-norm integrand and every path event
  // only needs these, since the other terms are zero or trivially satisfied.
  [[nodiscard]] std::span<const EvalPoint> support() const { return support_; }

  [[nodiscard]] double operator()(double t) const {
    for (const auto& sp : spikes_) {
      if (std::abs(sp.t - t) <= kTimeTolerance) return sp.value;
    }
    const double pos = std::clamp(t, 0.0, 1.0) * static_cast<double>(grid_.resolution);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    if (k >= grid_.resolution) return values_.back();
    const double w = pos - static_cast<double>(k);
    if (w <= kTimeTolerance * static_cast<double>(grid_.resolution)) return values_[k];
    return (1.0 - w) * values_[k] + w * values_[k + 1];
  }

  [[nodiscard]] bool nonpositive() const {
    return std::all_of(points_.begin(), points_.end(), [](const EvalPoint& p) { return p.value <= 0.0; });
  }

 private:
  void build_points() {
    points_.clear();
    points_.reserve(values_.size() + spikes_.size());
    const auto T = static_cast<double>(grid_.resolution);
    std::vector<bool> overridden(values_.size(), false);
    std::vector<EvalPoint> off_grid;
    for (const auto& sp : spikes_) {
      const double pos = sp.t * T;
      const double node = std::round(pos);
      if (std::abs(pos - node) <= kTimeTolerance * T) {
        overridden[static_cast<std::size_t>(node)] = true;
      } else {
        off_grid.push_back({sp.t, sp.value});
      }
    }
    std::size_t s = 0;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const double t = grid_.point(k);
      while (s < off_grid.size() && off_grid[s].t < t) points_.push_back(off_grid[s++]);
      if (overridden[k]) {
        points_.push_back({t, spike_value_near(t)});
      } else {
        points_.push_back({t, values_[k]});
      }
    }
    while (s < off_grid.size()) points_.push_back(off_grid[s++]);
    support_.clear();
    for (const auto& p : points_) {
      if (p.value != 0.0) support_.push_back(p);
    }
  }

  [[nodiscard]] double spike_value_near(double t) const {
    for (const auto& sp : spikes_) {
      if (std::abs(sp.t - t) <= kTimeTolerance) return sp.value;
    }
    return 0.0;
  }

  GridConfig grid_;
  std::vector<double> values_;
  std::vector<Spike> spikes_;
  std::vector<EvalPoint> points_;
  std::vector<EvalPoint> support_;
};

// f = sum_i x_i 1_{t_i}: zero on the grid, exact point masses at the t_i.
inline EFunction make_step_function(std::span<const Spike> points, GridConfig grid) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(points[i].t - points[j].t) <= EFunction::kTimeTolerance) {
        throw PreconditionError("duplicate step location at index " + std::to_string(i) +
                                " (same t as index " + std::to_string(j) + ")");
      }
    }
  }
  return EFunction(grid, std::vector<double>(grid.resolution + 1, 0.0),
                   std::vector<Spike>(points.begin(), points.end()));
}

inline EFunction make_step_function(std::initializer_list<Spike> points, GridConfig grid) {
  return make_step_function(std::span<const Spike>(points.begin(), points.size()), grid);
}

inline double sup_norm(const EFunction& f) {
  double m = 0.0;
  for (const auto& p : f.points()) m = std::max(m, std::abs(p.value));
  return m;
}

namespace detail {

template <class Op>
EFunction unary(const EFunction& f, Op op) {
  std::vector<double> vals(f.values().begin(), f.values().end());
  for (double& v : vals) v = op(v);
  std::vector<Spike> sp(f.spikes().begin(), f.spikes().end());
  for (auto& s : sp) s.value = op(s.value);
  return EFunction(f.grid(), std::move(vals), std::move(sp));
}

template <class Op>
EFunction binary(const EFunction& f, const EFunction& g, Op op) {
  if (!(f.grid() == g.grid())) {
    throw PreconditionError("binary EFunction operation on mismatched grids (" +
                            std::to_string(f.grid().resolution) + " vs " +
                            std::to_string(g.grid().resolution) + ")");
  }
  std::vector<double> vals(f.values().size());
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = op(f.values()[k], g.values()[k]);
  std::vector<Spike> sp;
  auto add_spike = [&](double t) {
    for (const auto& s : sp) {
      if (std::abs(s.t - t) <= EFunction::kTimeTolerance) return;
    }
    sp.push_back({t, op(f(t), g(t))});
  };
  for (const auto& s : f.spikes()) add_spike(s.t);
  for (const auto& s : g.spikes()) add_spike(s.t);
  return EFunction(f.grid(), std::move(vals), std::move(sp));
}

}  // namespace detail

inline EFunction scale(const EFunction& f, double c) {
  return detail::unary(f, [c](double v) { return c * v; });
}

inline EFunction pointwise_abs(const EFunction& f) {
  return detail::unary(f, [](double v) { return std::abs(v); });
}

inline EFunction pointwise_max(const EFunction& f, const EFunction& g) {
  return detail::binary(f, g, [](double a, double b) { return std::max(a, b); });
}

inline EFunction pointwise_min(const EFunction& f, const EFunction& g) {
  return detail::binary(f, g, [](double a, double b) { return std::min(a, b); });
}

inline EFunction add(const EFunction& f, const EFunction& g) {
  return detail::binary(f, g, [](double a, double b) { return a + b; });
}

}  // namespace dnorm_lab
