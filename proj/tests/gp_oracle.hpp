#pragma once

// Brute-force references for small ordinal GP problems. Nothing here reuses the
// Newton solver or the analytic likelihood derivatives: the MAP is located by
// zooming grid search, the likelihood curvature by finite differences of
// ordinal_class_prob, and the 2x2 algebra is written out by hand.

#include <array>
#include <cmath>
#include <functional>

#include "fracsls/gp_ordinal.hpp"

namespace gp_oracle {

using fracsls::GPConfig;
using fracsls::Label;
using fracsls::Point;

inline double log_lik(double f, Label q, const GPConfig& c) { return std::log(fracsls::ordinal_class_prob(f, q, c)); }

// -d^2/df^2 log p(q | f) by central differences
inline double curvature(double f, Label q, const GPConfig& c, double h = 1e-4) {
  return -(log_lik(f + h, q, c) - 2.0 * log_lik(f, q, c) + log_lik(f - h, q, c)) / (h * h);
}

/// argmax of a concave function on [-range, range] by repeated grid zooming.
inline double argmax_1d(const std::function<double(double)>& psi, double range = 5.0) {
  double centre = 0.0, half = range;
  for (int round = 0; round < 12; ++round) {
    const int m = 200;
    double best = centre, best_v = -INFINITY;
    for (int i = 0; i <= m; ++i) {
      const double f = centre - half + 2.0 * half * i / m;
      const double v = psi(f);
      if (v > best_v) best_v = v, best = f;
    }
    centre = best;
    half *= 4.0 / m;
  }
  return centre;
}

inline std::array<double, 2> argmax_2d(const std::function<double(double, double)>& psi, double range = 5.0) {
  std::array<double, 2> c{0.0, 0.0};
  double half = range;
  for (int round = 0; round < 12; ++round) {
    const int m = 100;
    std::array<double, 2> best = c;
    double best_v = -INFINITY;
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) {
        const double f1 = c[0] - half + 2.0 * half * i / m, f2 = c[1] - half + 2.0 * half * j / m;
        const double v = psi(f1, f2);
        if (v > best_v) best_v = v, best = {f1, f2};
      }
    c = best;
    half *= 4.0 / m;
  }
  return c;
}

struct Reference {
  std::array<double, 2> mode{};
  std::array<double, 2> w{};
  std::array<std::array<double, 2>, 2> k{};
};

inline std::array<std::array<double, 2>, 2> inverse(const std::array<std::array<double, 2>, 2>& m) {
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  return {{{m[1][1] / det, -m[0][1] / det}, {-m[1][0] / det, m[0][0] / det}}};
}

/// Laplace reference for a two-point dataset.
inline Reference laplace_2(const std::array<Point, 2>& x, const std::array<Label, 2>& q, const GPConfig& c) {
  Reference r;
  const double kij = fracsls::rbf_kernel(x[0], x[1], c.kernel_theta);
  r.k = {{{1.0 + c.jitter, kij}, {kij, 1.0 + c.jitter}}};
  const auto ki = inverse(r.k);
  auto psi = [&](double f1, double f2) {
    const double quad = f1 * (ki[0][0] * f1 + ki[0][1] * f2) + f2 * (ki[1][0] * f1 + ki[1][1] * f2);
    return log_lik(f1, q[0], c) + log_lik(f2, q[1], c) - 0.5 * quad;
  };
  r.mode = argmax_2d(psi);
  r.w = {curvature(r.mode[0], q[0], c), curvature(r.mode[1], q[1], c)};
  return r;
}

/// mean = k*' K^-1 f,  variance = 1 - k*' (K + W^-1)^-1 k*
inline fracsls::Prediction predict_2(const Reference& r, const std::array<Point, 2>& x, const Point& query,
                                     const GPConfig& c) {
  const std::array<double, 2> ks{fracsls::rbf_kernel(query, x[0], c.kernel_theta),
                                 fracsls::rbf_kernel(query, x[1], c.kernel_theta)};
  const auto ki = inverse(r.k);
  const double mean = ks[0] * (ki[0][0] * r.mode[0] + ki[0][1] * r.mode[1]) +
                      ks[1] * (ki[1][0] * r.mode[0] + ki[1][1] * r.mode[1]);
  auto kw = r.k;
  kw[0][0] += 1.0 / r.w[0];
  kw[1][1] += 1.0 / r.w[1];
  const auto kwi = inverse(kw);
  const double quad = ks[0] * (kwi[0][0] * ks[0] + kwi[0][1] * ks[1]) + ks[1] * (kwi[1][0] * ks[0] + kwi[1][1] * ks[1]);
  return {mean, 1.0 - quad};
}

/// Predictive moments of the exact (non-Gaussian) posterior by 2-D quadrature.
/// Only for context: a Laplace approximation is not expected to match it.
inline fracsls::Prediction exact_predict_2(const std::array<Point, 2>& x, const std::array<Label, 2>& q,
                                           const Point& query, const GPConfig& c) {
  const double kij = fracsls::rbf_kernel(x[0], x[1], c.kernel_theta);
  const std::array<std::array<double, 2>, 2> k{{{1.0 + c.jitter, kij}, {kij, 1.0 + c.jitter}}};
  const auto ki = inverse(k);
  const std::array<double, 2> ks{fracsls::rbf_kernel(query, x[0], c.kernel_theta),
                                 fracsls::rbf_kernel(query, x[1], c.kernel_theta)};
  const std::array<double, 2> proj{ks[0] * ki[0][0] + ks[1] * ki[1][0], ks[0] * ki[0][1] + ks[1] * ki[1][1]};
  const double prior_cond = 1.0 - (proj[0] * ks[0] + proj[1] * ks[1]);
  const int m = 600;
  const double lo = -6.0, step = 12.0 / m;
  double z = 0.0, s1 = 0.0, s2 = 0.0;
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j) {
      const double f1 = lo + i * step, f2 = lo + j * step;
      const double quad = f1 * (ki[0][0] * f1 + ki[0][1] * f2) + f2 * (ki[1][0] * f1 + ki[1][1] * f2);
      const double wgt = fracsls::ordinal_class_prob(f1, q[0], c) * fracsls::ordinal_class_prob(f2, q[1], c) *
                         std::exp(-0.5 * quad);
      const double mu = proj[0] * f1 + proj[1] * f2;
      z += wgt;
      s1 += wgt * mu;
      s2 += wgt * mu * mu;
    }
  const double mean = s1 / z;
  return {mean, prior_cond + s2 / z - mean * mean};
}

}  // namespace gp_oracle
