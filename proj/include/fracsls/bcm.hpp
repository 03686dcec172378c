#pragma once

// Bayesian Committee Machine over independently trained participant posteriors:
//   1/var_tot = -(M-1)/k** + sum_j 1/var_j
//   mean_tot  = var_tot * sum_j mean_j / var_j

#include <atomic>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fracsls/gp_ordinal.hpp"
#include "fracsls/search_space.hpp"

namespace fracsls {

inline constexpr double kPriorVariance = 1.0;  // k** of the unit-amplitude RBF kernel
inline constexpr double kMinMemberVariance = 1e-12;

/// Combines member predictions. A non-positive combined precision (members less
/// informative than the prior, through numerical effects) falls back to the
/// precision-weighted member mean with the prior variance and sets *guarded.
inline Prediction bcm_combine(const std::vector<Prediction>& members, bool* guarded = nullptr) {
  if (members.empty()) throw InvalidArgument("bcm_combine needs at least one member");
  double precision = -double(members.size() - 1) / kPriorVariance, weighted = 0.0, member_precision = 0.0;
  for (const auto& p : members) {
    const double inv = 1.0 / std::max(p.variance, kMinMemberVariance);
    precision += inv;
    member_precision += inv;
    weighted += p.mean * inv;
  }
  if (guarded) *guarded = precision <= 0.0;
  if (precision <= 0.0) return {weighted / member_precision, kPriorVariance};
  return {weighted / precision, 1.0 / precision};
}

class AggregateModel {
 public:
  AggregateModel(std::vector<GPPosterior> members, SearchSpace space)
      : members_(std::move(members)), space_(std::move(space)) {
    if (members_.empty()) throw InvalidArgument("aggregate needs at least one member");
    for (const auto& m : members_)
      if (!(m.config() == members_.front().config()))
        throw InvalidArgument("aggregate members must share one GP configuration");
    checker_ = std::make_shared<const FeasibilityChecker>(space_);
  }

  const std::vector<GPPosterior>& members() const { return members_; }
  const GPConfig& gp_config() const { return members_.front().config(); }
  const SearchSpace& space() const { return space_; }
  const FeasibilityChecker& checker() const { return *checker_; }
  std::size_t size() const { return members_.size(); }

  /// Queries where the combined precision came out non-positive and the
  /// fallback was used.
  std::size_t precision_guard_count() const { return guard_hits_->load(); }

  Prediction predict(const Point& x) const {
    std::vector<Prediction> parts;
    parts.reserve(members_.size());
    for (const auto& m : members_) parts.push_back(m.predict(x));
    bool guarded = false;
    const auto p = bcm_combine(parts, &guarded);
    if (guarded) guard_hits_->fetch_add(1);
    return p;
  }

 private:
  std::vector<GPPosterior> members_;
  SearchSpace space_;
  std::shared_ptr<const FeasibilityChecker> checker_;
  std::shared_ptr<std::atomic<std::size_t>> guard_hits_ = std::make_shared<std::atomic<std::size_t>>(0);
};

inline Prediction bcm_predict(const AggregateModel& model, const Point& query) {
  return model.predict(query);
}

struct OptimumEntry {
  Point x_norm;
  ModelParams params;
  double score = 0.0;
  double variance = 0.0;
};

struct OptimaTriple {
  OptimumEntry best, mid, worst;
  double mid_gap = 0.0;  // |score(mid) - (score(best) + score(worst)) / 2|
};

inline double grid_coordinate(std::size_t i, std::size_t n) {
  return n == 1 ? 0.5 : double(i) / double(n - 1);
}

/// Best, worst and mid (mean closest to their average) over the feasible
/// grid_density^3 lattice of the unit box.
inline OptimaTriple select_optima(const AggregateModel& model, std::size_t grid_density = 64) {
  if (grid_density == 0) throw InvalidArgument("grid_density must be >= 1");
  struct Node {
    Point x;
    Prediction p;
  };
  std::vector<Node> nodes;
  // alpha outermost so the feasibility checker reuses one spectrum per level
  for (std::size_t ia = 0; ia < grid_density; ++ia)
    for (std::size_t ik = 0; ik < grid_density; ++ik)
      for (std::size_t ib = 0; ib < grid_density; ++ib) {
        Point x{grid_coordinate(ik, grid_density), grid_coordinate(ib, grid_density),
                grid_coordinate(ia, grid_density)};
        if (!model.checker().feasible(x)) continue;
        nodes.push_back({x, model.predict(x)});
      }
  if (nodes.empty()) throw Error("feasible grid is empty");

  auto better = [](const Node& a, const Node& b, bool want_max) {
    if (a.p.mean != b.p.mean) return want_max ? a.p.mean > b.p.mean : a.p.mean < b.p.mean;
    return lex_less(a.x, b.x);
  };
  const Node* best = &nodes.front();
  const Node* worst = &nodes.front();
  for (const auto& n : nodes) {
    if (better(n, *best, true)) best = &n;
    if (better(n, *worst, false)) worst = &n;
  }
  if (best->p.mean - worst->p.mean < 1e-6) throw Error("degenerate flat posterior");

  const double target = 0.5 * (best->p.mean + worst->p.mean);
  const Node* mid = nullptr;
  double mid_gap = 0.0;
  for (const auto& n : nodes) {
    if (&n == best || &n == worst) continue;
    const double gap = std::abs(n.p.mean - target);
    if (!mid || gap < mid_gap ||
        (gap == mid_gap && (n.p.variance > mid->p.variance ||
                            (n.p.variance == mid->p.variance && lex_less(n.x, mid->x))))) {
      mid = &n;
      mid_gap = gap;
    }
  }
  if (!mid) throw Error("feasible grid too small for a mid point");

  auto entry = [&](const Node& n) {
    return OptimumEntry{n.x, model.space().to_physical(n.x), n.p.mean, n.p.variance};
  };
  return {entry(*best), entry(*mid), entry(*worst), mid_gap};
}

struct SliceCell {
  double k1_norm, b1_norm, mean, variance;
  bool feasible;
};

struct SliceGrid {
  double alpha = 0.0;       // physical
  double alpha_norm = 0.0;  // in [0, 1]
  std::size_t resolution = 0;
  std::vector<SliceCell> cells;  // k1 outer, b1 inner
};

/// resolution x resolution (K1, B1) grids of aggregate mean, variance and
/// feasibility at each fixed alpha.
inline std::vector<SliceGrid> export_slices(const AggregateModel& model, const std::vector<double>& alpha_levels,
                                            std::size_t resolution) {
  if (resolution == 0) throw InvalidArgument("resolution must be >= 1");
  const auto& s = model.space();
  std::vector<SliceGrid> out;
  for (double alpha : alpha_levels) {
    if (!(alpha >= s.lower[2] && alpha <= s.upper[2]))
      throw InvalidArgument("alpha level outside the search range");
    SliceGrid g;
    g.alpha = alpha;
    g.alpha_norm = (alpha - s.lower[2]) / (s.upper[2] - s.lower[2]);
    g.resolution = resolution;
    for (std::size_t i = 0; i < resolution; ++i)
      for (std::size_t j = 0; j < resolution; ++j) {
        const Point x{grid_coordinate(i, resolution), grid_coordinate(j, resolution), g.alpha_norm};
        const auto p = model.predict(x);
        g.cells.push_back({x[0], x[1], p.mean, p.variance, model.checker().feasible(x)});
      }
    out.push_back(std::move(g));
  }
  return out;
}

inline std::string to_csv(const SliceGrid& g) {
  std::string out = "k1_norm,b1_norm,mean,variance,feasible\n";
  for (const auto& c : g.cells) {
    out += format_double(c.k1_norm) + ',' + format_double(c.b1_norm) + ',' + format_double(c.mean) + ',' +
           format_double(c.variance) + ',' + (c.feasible ? "1" : "0") + '\n';
  }
  return out;
}

inline json to_json_value(const SliceGrid& g) {
  std::vector<double> mean, var;
  std::vector<int> feasible;
  for (const auto& c : g.cells) {
    mean.push_back(c.mean);
    var.push_back(c.variance);
    feasible.push_back(c.feasible ? 1 : 0);
  }
  std::vector<double> axis;
  for (std::size_t i = 0; i < g.resolution; ++i) axis.push_back(grid_coordinate(i, g.resolution));
  return json{{"alpha", g.alpha}, {"alpha_norm", g.alpha_norm}, {"resolution", g.resolution},
              {"k1_norm", axis},  {"b1_norm", axis},            {"mean", mean},
              {"variance", var},  {"feasible", feasible}};
}

inline json to_json_value(const OptimumEntry& e) {
  return json{{"x_norm", e.x_norm}, {"params", e.params}, {"score", e.score}, {"variance", e.variance}};
}

inline json to_json_value(const OptimaTriple& t) {
  return json{{"best", to_json_value(t.best)},
              {"mid", to_json_value(t.mid)},
              {"worst", to_json_value(t.worst)},
              {"mid_gap", t.mid_gap}};
}

inline OptimumEntry optimum_from_json(const json& j) {
  return {j.at("x_norm").get<Point>(), j.at("params").get<ModelParams>(), j.at("score").get<double>(),
          j.value("variance", 0.0)};
}

inline OptimaTriple optima_from_json(const json& j) {
  return {optimum_from_json(j.at("best")), optimum_from_json(j.at("mid")), optimum_from_json(j.at("worst")),
          j.value("mid_gap", 0.0)};
}

}  // namespace fracsls
