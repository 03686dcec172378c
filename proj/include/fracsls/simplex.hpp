#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

namespace fracsls {

struct SimplexOptions {
  std::size_t max_iterations = 500;
  double tolerance = 1e-8;     // on max - min objective over the simplex
  double initial_step = 0.1;   // edge length of the starting simplex
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Nelder-Mead descent restricted to the unit box. Trial points are clipped to
/// [0,1]^d before evaluation, so the objective is never queried outside the box.
template <class Objective>
SimplexResult nelder_mead_box(Objective&& objective, std::vector<double> start,
                              const SimplexOptions& opt = {}) {
  const std::size_t d = start.size();
  auto clip = [](std::vector<double>& x) {
    for (auto& v : x) v = std::clamp(v, 0.0, 1.0);
  };
  SimplexResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    return objective(x);
  };

  clip(start);
  std::vector<std::vector<double>> pts(d + 1, start);
  for (std::size_t i = 0; i < d; ++i) {
    const double step = pts[i + 1][i] + opt.initial_step <= 1.0 ? opt.initial_step
                                                                 : -opt.initial_step;
    pts[i + 1][i] += step;
  }
  std::vector<double> vals(d + 1);
  for (std::size_t i = 0; i <= d; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), trial(d), trial2(d);
  auto point_along = [&](const std::vector<double>& from, double t, std::vector<double>& out) {
    for (std::size_t j = 0; j < d; ++j) out[j] = centroid[j] + t * (from[j] - centroid[j]);
    clip(out);
  };

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];
    if (vals[worst] - vals[best] <= opt.tolerance) {
      res.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= d; ++i)
      if (i != worst)
        for (std::size_t j = 0; j < d; ++j) centroid[j] += pts[i][j] / double(d);

    point_along(pts[worst], -1.0, trial);
    const double fr = eval(trial);
    if (fr < vals[best]) {
      point_along(pts[worst], -2.0, trial2);
      const double fe = eval(trial2);
      if (fe < fr) {
        pts[worst] = trial2;
        vals[worst] = fe;
      } else {
        pts[worst] = trial;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = trial;
      vals[worst] = fr;
      continue;
    }
    // contraction: outside if the reflection helped at all, inside otherwise
    const bool outside = fr < vals[worst];
    point_along(pts[worst], outside ? -0.5 : 0.5, trial2);
    const double fc = eval(trial2);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < d; ++j) pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
      vals[i] = eval(pts[i]);
    }
  }

  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.value = *it;
  return res;
}

}  // namespace fracsls
