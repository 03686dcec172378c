#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "fracsls/types.hpp"

namespace fracsls {

using Point = std::vector<double>;
using Feasibility = std::function<bool(const Point&)>;

/// Lexicographic order on points, used to break exact score ties.
inline bool lex_less(const Point& a, const Point& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline constexpr std::size_t kLhsMaxResamples = 1000;

/// Latin hypercube design of n points in [0,1]^dims. Point i lives in stratum
/// perm_d[i] of every axis d. An infeasible draw is resampled inside its cell;
/// if the cell yields nothing feasible after kLhsMaxResamples draws, the
/// coordinates are freed one axis at a time (axis 0 first) so the remaining axes
/// stay Latin. Throws if no relaxation produces a feasible point.
inline std::vector<Point> lhs_init(std::size_t n, std::size_t dims, std::uint64_t seed,
                                   const Feasibility& feasible = {}) {
  if (n == 0) throw InvalidArgument("lhs_init needs n >= 1");
  if (dims == 0) throw InvalidArgument("lhs_init needs dims >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<std::size_t>> strata(dims, std::vector<std::size_t>(n));
  for (auto& perm : strata) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
  }

  const double width = 1.0 / double(n);
  std::vector<Point> out(n, Point(dims));
  for (std::size_t i = 0; i < n; ++i) {
    Point& x = out[i];
    std::vector<bool> free_axis(dims, false);
    auto draw = [&] {
      for (std::size_t d = 0; d < dims; ++d)
        x[d] = free_axis[d] ? unit(rng) : (double(strata[d][i]) + unit(rng)) * width;
    };
    bool ok = false;
    for (std::size_t relaxed = 0; relaxed <= dims && !ok; ++relaxed) {
      if (relaxed > 0) free_axis[relaxed - 1] = true;
      for (std::size_t attempt = 0; attempt < kLhsMaxResamples; ++attempt) {
        draw();
        if (!feasible || feasible(x)) {
          ok = true;
          break;
        }
      }
    }
    if (!ok) throw Error("lhs_init: stratum has no feasible point");
  }
  return out;
}

}  // namespace fracsls
