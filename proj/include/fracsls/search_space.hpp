#pragma once

// The three-dimensional optimization space over (K1, B1, alpha). K0 is not free:
// the effective-stiffness constraint fixes it, and a point is feasible only if the
// resulting model is passive and K0 stays inside its admissible range.

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "fracsls/io.hpp"
#include "fracsls/lhs.hpp"
#include "fracsls/passivity.hpp"

namespace fracsls {

struct SearchSpace {
  std::array<double, 3> lower{1.0, 0.001, 0.01};  // k1, b1, alpha
  std::array<double, 3> upper{32.0, 32.0, 0.99};
  double k0_min = -15.7;
  double k0_max = 0.44;
  EffectiveStiffness stiffness{};
  PassivityConfig passivity{};
  // optional bound on Im H(j omega_eff) / omega_eff, disabled unless set
  std::optional<std::array<double, 2>> damping_range{};

  ModelParams to_physical(const Point& x) const {
    if (x.size() != 3) throw InvalidArgument("search points are three-dimensional");
    std::array<double, 3> v{};
    for (std::size_t i = 0; i < 3; ++i) v[i] = lower[i] + x[i] * (upper[i] - lower[i]);
    return {solve_k0(v[0], v[1], v[2], stiffness), v[0], v[1], v[2]};
  }

  Point normalize(const ModelParams& p) const {
    const std::array<double, 3> v{p.k1, p.b1, p.alpha};
    Point x(3);
    for (std::size_t i = 0; i < 3; ++i) x[i] = (v[i] - lower[i]) / (upper[i] - lower[i]);
    return x;
  }

  /// Checks everything except passivity (which needs a PassivityGrid).
  bool admissible(const ModelParams& p) const {
    if (!(p.k0 >= k0_min && p.k0 <= k0_max)) return false;
    if (damping_range) {
      const double d = effective_damping(p, stiffness.omega);
      if (d < (*damping_range)[0] || d > (*damping_range)[1]) return false;
    }
    return true;
  }

  bool operator==(const SearchSpace& o) const {
    return lower == o.lower && upper == o.upper && k0_min == o.k0_min && k0_max == o.k0_max &&
           stiffness.omega == o.stiffness.omega && stiffness.target == o.stiffness.target &&
           passivity.device_damping == o.passivity.device_damping &&
           passivity.freq_grid_points == o.passivity.freq_grid_points &&
           passivity.sample_time == o.passivity.sample_time && passivity.window == o.passivity.window &&
           damping_range == o.damping_range;
  }
};

inline void validate(const SearchSpace& s) {
  for (std::size_t i = 0; i < 3; ++i)
    if (!(s.lower[i] < s.upper[i])) throw InvalidArgument("search range must have lower < upper");
  if (!(s.lower[0] > 0.0)) throw InvalidArgument("k1 range must be positive");
  if (!(s.lower[1] >= 0.0)) throw InvalidArgument("b1 range must be non-negative");
  if (!(s.lower[2] > 0.0 && s.upper[2] <= 1.0)) throw InvalidArgument("alpha range must lie in (0, 1]");
  if (!(s.k0_min < s.k0_max)) throw InvalidArgument("k0 range must have min < max");
  validate(s.passivity);
}

/// Feasibility evaluator bound to one search space. Holds the passivity grid and
/// remembers recent fractional spectra by alpha, so a grid with a few distinct
/// alpha levels costs O(frequency points) per node. Safe to share across threads.
class FeasibilityChecker {
 public:
  explicit FeasibilityChecker(SearchSpace space) : space_(std::move(space)), grid_(space_.passivity) {
    validate(space_);
  }

  const SearchSpace& space() const { return space_; }

  double margin(const ModelParams& p) const { return grid_.margin(p, *spectrum(p.alpha)); }

  double margin(const Point& x) const { return margin(space_.to_physical(x)); }

  bool feasible(const ModelParams& p) const { return space_.admissible(p) && margin(p) >= 0.0; }

  bool feasible(const Point& x) const { return feasible(space_.to_physical(x)); }

  Feasibility predicate() const {
    return [this](const Point& x) { return feasible(x); };
  }

 private:
  using Spectrum = std::shared_ptr<const std::vector<std::complex<double>>>;

  Spectrum spectrum(double alpha) const {
    {
      std::lock_guard lock(mu_);
      if (auto it = spectra_.find(alpha); it != spectra_.end()) return it->second;
    }
    auto s = std::make_shared<const std::vector<std::complex<double>>>(grid_.fractional_spectrum(alpha));
    std::lock_guard lock(mu_);
    if (spectra_.size() >= kMaxCachedSpectra) spectra_.clear();
    spectra_.emplace(alpha, s);
    return s;
  }

  static constexpr std::size_t kMaxCachedSpectra = 256;

  SearchSpace space_;
  PassivityGrid grid_;
  mutable std::mutex mu_;
  mutable std::unordered_map<double, Spectrum> spectra_;
};

inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / double(base), scale = inv, out = 0.0;
  while (index > 0) {
    out += double(index % base) * scale;
    index /= base;
    scale *= inv;
  }
  return out;
}

/// `count` feasible points from a 3-D Halton sequence (bases 2, 3, 5) under a
/// seeded Cranley-Patterson rotation. Points keep sequence order.
inline std::vector<Point> feasible_candidates(const FeasibilityChecker& checker, std::size_t count,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::array<double, 3> shift{unit(rng), unit(rng), unit(rng)};
  constexpr std::array<std::uint64_t, 3> bases{2, 3, 5};
  std::vector<Point> out;
  out.reserve(count);
  const std::uint64_t limit = 64 * std::uint64_t(count) + 1024;
  for (std::uint64_t i = 1; out.size() < count && i <= limit; ++i) {
    Point x(3);
    for (std::size_t d = 0; d < 3; ++d) {
      const double v = radical_inverse(i, bases[d]) + shift[d];
      x[d] = v - std::floor(v);
    }
    if (checker.feasible(x)) out.push_back(std::move(x));
  }
  if (out.empty()) throw Error("search space has no feasible candidate");
  return out;
}

// ---- JSON ---------------------------------------------------------------

inline void to_json(json& j, const PassivityConfig& c) {
  j = json{{"device_damping", c.device_damping}, {"freq_grid_points", c.freq_grid_points},
           {"sample_time", c.sample_time}, {"window", c.window}};
}

inline void from_json(const json& j, PassivityConfig& c) {
  c = PassivityConfig{};
  if (j.contains("device_damping")) j.at("device_damping").get_to(c.device_damping);
  if (j.contains("freq_grid_points")) j.at("freq_grid_points").get_to(c.freq_grid_points);
  if (j.contains("sample_time")) j.at("sample_time").get_to(c.sample_time);
  if (j.contains("window")) j.at("window").get_to(c.window);
}

inline void to_json(json& j, const SearchSpace& s) {
  j = json{{"lower", s.lower},
           {"upper", s.upper},
           {"k0_range", std::array<double, 2>{s.k0_min, s.k0_max}},
           {"omega_eff", s.stiffness.omega},
           {"target_keff", s.stiffness.target},
           {"passivity", s.passivity},
           {"damping_range", s.damping_range ? json(*s.damping_range) : json(nullptr)}};
}

inline void from_json(const json& j, SearchSpace& s) {
  s = SearchSpace{};
  if (j.contains("lower")) j.at("lower").get_to(s.lower);
  if (j.contains("upper")) j.at("upper").get_to(s.upper);
  if (j.contains("k0_range")) {
    const auto r = j.at("k0_range").get<std::array<double, 2>>();
    s.k0_min = r[0];
    s.k0_max = r[1];
  }
  if (j.contains("omega_eff")) j.at("omega_eff").get_to(s.stiffness.omega);
  if (j.contains("target_keff")) j.at("target_keff").get_to(s.stiffness.target);
  if (j.contains("passivity")) j.at("passivity").get_to(s.passivity);
  if (j.contains("damping_range") && !j.at("damping_range").is_null())
    s.damping_range = j.at("damping_range").get<std::array<double, 2>>();
  validate(s);
}

}  // namespace fracsls
