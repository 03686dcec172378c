#pragma once

// Gaussian-process model of a latent realism score observed through ordinal
// labels {different, similar, close}, with a Laplace-approximated posterior.
//
//   P(q = o_j | f) = Phi((t_j - f) / c) - Phi((t_{j-1} - f) / c)
//   k(x, x') = exp(-theta |x - x'|^2)

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracsls/io.hpp"
#include "fracsls/lhs.hpp"
#include "fracsls/types.hpp"

namespace fracsls {

enum class Label { different = 1, similar = 2, close = 3 };

inline std::string to_string(Label l) {
  switch (l) {
    case Label::different: return "different";
    case Label::similar: return "similar";
    case Label::close: return "close";
  }
  return "?";
}

inline Label label_from_string(const std::string& s) {
  if (s == "different" || s == "Different") return Label::different;
  if (s == "similar" || s == "Similar") return Label::similar;
  if (s == "close" || s == "Close") return Label::close;
  throw InvalidArgument("unknown label '" + s + "'");
}

inline Label label_from_int(int v) {
  if (v < 1 || v > 3) throw InvalidArgument("category must be 1, 2 or 3");
  return static_cast<Label>(v);
}

struct GPConfig {
  double kernel_theta = 30.0;
  double ordinal_noise = 0.5;
  std::array<double, 2> thresholds{-0.5, 0.5};  // interior t_1 < t_2; t_0 = -inf, t_3 = +inf
  double jitter = 1e-8;
  std::size_t max_newton_iterations = 100;
  double gradient_tolerance = 1e-8;

  bool operator==(const GPConfig&) const = default;
};

inline void validate(const GPConfig& c) {
  if (!(c.kernel_theta > 0.0)) throw InvalidArgument("kernel_theta must be positive");
  if (!(c.ordinal_noise > 0.0)) throw InvalidArgument("ordinal_noise must be positive");
  if (!(c.thresholds[0] < c.thresholds[1])) throw InvalidArgument("thresholds must increase");
  if (!(c.jitter > 0.0)) throw InvalidArgument("jitter must be positive");
}

struct OrdinalDataset {
  std::vector<Point> points;
  std::vector<Label> labels;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void add(Point x, Label q) {
    points.push_back(std::move(x));
    labels.push_back(q);
  }
};

inline void validate(const OrdinalDataset& d) {
  if (d.points.size() != d.labels.size()) throw InvalidArgument("points/labels length mismatch");
  for (const auto& x : d.points) {
    if (!d.points.empty() && x.size() != d.points.front().size())
      throw InvalidArgument("points have inconsistent dimension");
    for (double v : x)
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("points must lie in the unit box");
  }
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

namespace detail {

struct CellBounds {
  double lower;  // t_{j-1}
  double upper;  // t_j
};

inline CellBounds cell(Label q, const GPConfig& c) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (q) {
    case Label::different: return {-inf, c.thresholds[0]};
    case Label::similar: return {c.thresholds[0], c.thresholds[1]};
    case Label::close: return {c.thresholds[1], inf};
  }
  throw InvalidArgument("bad label");
}

// Probability mass of the cell, evaluated in whichever tail keeps precision.
inline double cell_mass(double z_lo, double z_hi) {
  if (z_lo > 0.0) return normal_cdf(-z_lo) - normal_cdf(-z_hi);
  return normal_cdf(z_hi) - normal_cdf(z_lo);
}

// z * pdf(z), with the infinite endpoints mapped to 0.
inline double zpdf(double z) { return std::isinf(z) ? 0.0 : z * normal_pdf(z); }
inline double pdf_or_zero(double z) { return std::isinf(z) ? 0.0 : normal_pdf(z); }

struct LikelihoodTerms {
  double log_p;
  double grad;  // d log p / d f
  double neg_hessian;
};

inline LikelihoodTerms likelihood_terms(double f, Label q, const GPConfig& c) {
  const auto b = cell(q, c);
  const double s = c.ordinal_noise;
  const double z_lo = (b.lower - f) / s, z_hi = (b.upper - f) / s;
  const double p = cell_mass(z_lo, z_hi);
  if (p > 1e-300) {
    const double g = (pdf_or_zero(z_lo) - pdf_or_zero(z_hi)) / (s * p);
    const double w = (zpdf(z_hi) - zpdf(z_lo)) / (s * s * p) + g * g;
    return {std::log(p), g, w};
  }
  // Far tail: the nearer finite edge dominates; use the Mills-ratio asymptote.
  const double z = std::isinf(z_lo) ? z_hi : (std::isinf(z_hi) ? z_lo : (z_lo > 0 ? z_lo : z_hi));
  const double az = std::abs(z);
  const double ratio = az + 1.0 / az;  // pdf(z) / tail mass
  const double sign = z > 0 ? 1.0 : -1.0;
  return {-0.5 * z * z - std::log(az * std::sqrt(2.0 * std::numbers::pi)), sign * ratio / s,
          1.0 / (s * s)};
}

}  // namespace detail

/// P(category | latent) under the ordinal probit likelihood.
inline double ordinal_class_prob(double latent, Label category, const GPConfig& config) {
  const auto b = detail::cell(category, config);
  return detail::cell_mass((b.lower - latent) / config.ordinal_noise,
                           (b.upper - latent) / config.ordinal_noise);
}

inline double ordinal_class_prob(double latent, int category, const GPConfig& config) {
  return ordinal_class_prob(latent, label_from_int(category), config);
}

inline double rbf_kernel(const Point& a, const Point& b, double theta) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-theta * d2);
}

inline Eigen::MatrixXd kernel_matrix(const std::vector<Point>& pts, double theta, double jitter) {
  const auto n = Eigen::Index(pts.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0 + jitter;
    for (Eigen::Index j = 0; j < i; ++j) k(i, j) = k(j, i) = rbf_kernel(pts[std::size_t(i)], pts[std::size_t(j)], theta);
  }
  return k;
}

struct Prediction {
  double mean = 0.0;
  double variance = 1.0;
};

/// Laplace posterior. Immutable once built; predictions are thread-safe.
class GPPosterior {
 public:
  GPPosterior() = default;

  /// Rebuilds the derived quantities from a stored mode. `jitter` is the
  /// diagonal actually used when the mode was computed.
  GPPosterior(GPConfig config, OrdinalDataset data, Eigen::VectorXd mode, double jitter)
      : config_(config), data_(std::move(data)), mode_(std::move(mode)), jitter_(jitter) {
    finalize();
  }

  const GPConfig& config() const { return config_; }
  const OrdinalDataset& dataset() const { return data_; }
  const Eigen::VectorXd& mode() const { return mode_; }
  const Eigen::VectorXd& neg_hessian() const { return w_; }
  const Eigen::MatrixXd& kernel() const { return k_; }
  double jitter() const { return jitter_; }
  std::size_t size() const { return data_.size(); }

  /// Log posterior gradient at the mode: grad log p(D|f) - K^-1 f.
  Eigen::VectorXd mode_gradient() const {
    if (size() == 0) return {};
    return grad_ - k_.llt().solve(mode_);
  }

  Prediction predict(const Point& x) const {
    if (size() == 0) return {};
    Eigen::VectorXd ks(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i)
      ks[Eigen::Index(i)] = rbf_kernel(x, data_.points[i], config_.kernel_theta);
    const double mean = ks.dot(grad_);
    const Eigen::VectorXd v = chol_b_.matrixL().solve(sqrt_w_.cwiseProduct(ks));
    const double var = std::max(0.0, 1.0 - v.squaredNorm());
    return {mean, var};
  }

 private:
  void finalize() {
    const auto n = Eigen::Index(data_.size());
    if (mode_.size() != n) throw InvalidArgument("mode length differs from dataset size");
    k_ = kernel_matrix(data_.points, config_.kernel_theta, jitter_);
    grad_.resize(n);
    w_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto t = detail::likelihood_terms(mode_[i], data_.labels[std::size_t(i)], config_);
      grad_[i] = t.grad;
      w_[i] = t.neg_hessian;
    }
    sqrt_w_ = w_.cwiseSqrt();
    Eigen::MatrixXd b = sqrt_w_.asDiagonal() * k_ * sqrt_w_.asDiagonal();
    b.diagonal().array() += 1.0;
    chol_b_.compute(b);
    if (chol_b_.info() != Eigen::Success) throw ModelError("Cholesky of I + W^1/2 K W^1/2 failed");
  }

  GPConfig config_{};
  OrdinalDataset data_{};
  Eigen::VectorXd mode_{};
  double jitter_ = 1e-8;
  Eigen::MatrixXd k_{};
  Eigen::VectorXd grad_{}, w_{}, sqrt_w_{};
  Eigen::LLT<Eigen::MatrixXd> chol_b_{};
};

/// log p(D|f) - 1/2 f^T K^-1 f (up to a constant), with a = K^-1 f given.
inline double log_posterior_objective(const Eigen::VectorXd& f, const Eigen::VectorXd& a,
                                      const OrdinalDataset& d, const GPConfig& c) {
  double acc = -0.5 * a.dot(f);
  for (Eigen::Index i = 0; i < f.size(); ++i)
    acc += detail::likelihood_terms(f[i], d.labels[std::size_t(i)], c).log_p;
  return acc;
}

/// Mode of the latent posterior by damped Newton iterations (Rasmussen &
/// Williams, Algorithm 3.1 adapted to the ordinal likelihood).
inline GPPosterior laplace_fit(const OrdinalDataset& data, const GPConfig& config = {}) {
  validate(config);
  validate(data);
  const auto n = Eigen::Index(data.size());
  if (n == 0) return GPPosterior(config, data, Eigen::VectorXd(), config.jitter);

  double jitter = config.jitter;
  Eigen::MatrixXd k;
  for (;;) {
    k = kernel_matrix(data.points, config.kernel_theta, jitter);
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) break;
    jitter *= 10.0;
    if (jitter > 1e-4 * (1.0 + 1e-9)) throw ModelError("kernel matrix is not positive definite");
  }

  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad(n), w(n);
  double psi = log_posterior_objective(f, a, data, config);
  bool converged = false;
  for (std::size_t it = 0; it < config.max_newton_iterations; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto t = detail::likelihood_terms(f[i], data.labels[std::size_t(i)], config);
      grad[i] = t.grad;
      w[i] = t.neg_hessian;
    }
    if ((grad - a).lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
      converged = true;
      break;
    }
    const Eigen::VectorXd sw = w.cwiseSqrt();
    Eigen::MatrixXd b = sw.asDiagonal() * k * sw.asDiagonal();
    b.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success) throw ModelError("Newton system factorization failed");
    const Eigen::VectorXd rhs = w.cwiseProduct(f) + grad;
    const Eigen::VectorXd c = llt.solve(sw.cwiseProduct(k * rhs));
    Eigen::VectorXd a_new = rhs - sw.cwiseProduct(c);

    // Step halving on a until the objective does not decrease. Near the mode the
    // change is pure rounding, so drops within a few ulps of psi count as ties.
    const double slack = 1e-12 * (1.0 + std::abs(psi));
    Eigen::VectorXd f_new = k * a_new;
    double psi_new = log_posterior_objective(f_new, a_new, data, config);
    for (int halve = 0; halve < 40 && psi_new < psi - slack; ++halve) {
      a_new = 0.5 * (a + a_new);
      f_new = k * a_new;
      psi_new = log_posterior_objective(f_new, a_new, data, config);
    }
    if (psi_new < psi - slack) break;  // no ascent direction left; checked below
    a = std::move(a_new);
    f = std::move(f_new);
    psi = psi_new;
  }
  if (!converged) {
    for (Eigen::Index i = 0; i < n; ++i)
      grad[i] = detail::likelihood_terms(f[i], data.labels[std::size_t(i)], config).grad;
    if ((grad - a).lpNorm<Eigen::Infinity>() > config.gradient_tolerance)
      throw ConvergenceError("laplace_fit: Newton iterations did not converge");
  }
  return GPPosterior(config, data, std::move(f), jitter);
}

inline Prediction predict_latent(const GPPosterior& post, const Point& query) {
  return post.predict(query);
}

// ---- JSON ---------------------------------------------------------------

inline void to_json(json& j, const GPConfig& c) {
  j = json{{"kernel_theta", c.kernel_theta}, {"ordinal_noise", c.ordinal_noise},
           {"thresholds", c.thresholds}, {"jitter", c.jitter},
           {"max_newton_iterations", c.max_newton_iterations},
           {"gradient_tolerance", c.gradient_tolerance}};
}

inline void from_json(const json& j, GPConfig& c) {
  c = GPConfig{};
  if (j.contains("kernel_theta")) j.at("kernel_theta").get_to(c.kernel_theta);
  if (j.contains("ordinal_noise")) j.at("ordinal_noise").get_to(c.ordinal_noise);
  if (j.contains("thresholds")) j.at("thresholds").get_to(c.thresholds);
  if (j.contains("jitter")) j.at("jitter").get_to(c.jitter);
  if (j.contains("max_newton_iterations")) j.at("max_newton_iterations").get_to(c.max_newton_iterations);
  if (j.contains("gradient_tolerance")) j.at("gradient_tolerance").get_to(c.gradient_tolerance);
  validate(c);
}

inline json posterior_to_json(const GPPosterior& p) {
  std::vector<std::string> labels;
  for (auto l : p.dataset().labels) labels.push_back(to_string(l));
  return json{{"config", p.config()},
              {"points", p.dataset().points},
              {"labels", labels},
              {"mode", std::vector<double>(p.mode().data(), p.mode().data() + p.mode().size())},
              {"w_diagonal", std::vector<double>(p.neg_hessian().data(),
                                                 p.neg_hessian().data() + p.neg_hessian().size())},
              {"jitter", p.jitter()}};
}

inline GPPosterior posterior_from_json(const json& j) {
  OrdinalDataset d;
  d.points = j.at("points").get<std::vector<Point>>();
  for (const auto& s : j.at("labels")) d.labels.push_back(label_from_string(s.get<std::string>()));
  validate(d);
  const auto mode = j.at("mode").get<std::vector<double>>();
  return GPPosterior(j.at("config").get<GPConfig>(), std::move(d),
                     Eigen::Map<const Eigen::VectorXd>(mode.data(), Eigen::Index(mode.size())),
                     j.value("jitter", GPConfig{}.jitter));
}

}  // namespace fracsls
