#pragma once

// Identification of fractional SLS parameters from stress-relaxation and
// creep-with-recovery records by NRMSE minimization.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <span>

#include <Eigen/Dense>

#include "fracsls/fom.hpp"
#include "fracsls/io.hpp"
#include "fracsls/lhs.hpp"
#include "fracsls/simplex.hpp"

namespace fracsls {

/// RMS of (test - reference) divided by the range of the reference.
inline double nrmse(const TimeSeries& reference, const TimeSeries& test) {
  if (reference.size() != test.size()) throw InvalidArgument("nrmse: length mismatch");
  if (reference.size() == 0) throw InvalidArgument("nrmse: empty series");
  if (std::abs(reference.sample_time - test.sample_time) > 1e-12 * reference.sample_time)
    throw InvalidArgument("nrmse: sample_time mismatch");
  const auto [lo, hi] = std::minmax_element(reference.values.begin(), reference.values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw InvalidArgument("nrmse: reference has zero range");
  double acc = 0.0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    const double e = test.values[k] - reference.values[k];
    acc += e * e;
  }
  return std::sqrt(acc / double(reference.size())) / range;
}

/// Per-parameter intervals, ordered (k0, k1, b1, alpha).
struct ParamBounds {
  std::array<double, 4> lower{-15.7, 1.0, 0.001, 0.01};
  std::array<double, 4> upper{0.44, 32.0, 32.0, 0.99};

  std::array<double, 4> normalize(const ModelParams& p) const {
    const std::array<double, 4> v{p.k0, p.k1, p.b1, p.alpha};
    std::array<double, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) out[i] = (v[i] - lower[i]) / (upper[i] - lower[i]);
    return out;
  }

  ModelParams denormalize(std::span<const double> u) const {
    std::array<double, 4> v{};
    for (std::size_t i = 0; i < 4; ++i)
      v[i] = lower[i] + std::clamp(u[i], 0.0, 1.0) * (upper[i] - lower[i]);
    return {v[0], v[1], v[2], v[3]};
  }
};

/// RMS distance between two parameter sets after normalizing each by its bound range.
inline double param_nrmse(const ModelParams& a, const ModelParams& b, const ParamBounds& bounds = {}) {
  const auto ua = bounds.normalize(a), ub = bounds.normalize(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < 4; ++i) acc += (ua[i] - ub[i]) * (ua[i] - ub[i]);
  return std::sqrt(acc / 4.0);
}

struct RelaxationRecord {
  TimeSeries force;
  double step_displacement = 5.0;
};

struct CreepRecord {
  TimeSeries displacement;
  TimeSeries force_profile;
};

struct IdentificationProblem {
  std::optional<RelaxationRecord> relaxation;
  std::optional<CreepRecord> creep;
  std::size_t window = kDefaultWindow;
  double sample_time = kDefaultSampleTime;
  ParamBounds bounds;
};

inline void validate(const IdentificationProblem& p) {
  if (!p.relaxation && !p.creep) throw InvalidArgument("identification needs at least one record");
  for (std::size_t i = 0; i < 4; ++i)
    if (!(p.bounds.lower[i] < p.bounds.upper[i])) throw InvalidArgument("empty parameter bound");
  if (p.bounds.lower[1] <= 0.0 || p.bounds.lower[2] < 0.0 || p.bounds.lower[3] <= 0.0 ||
      p.bounds.upper[3] > 1.0)
    throw InvalidArgument("bounds outside the model's valid region");
  if (p.relaxation) {
    validate(p.relaxation->force);
    if (std::abs(p.relaxation->force.sample_time - p.sample_time) > 1e-12)
      throw InvalidArgument("relaxation record sample_time differs from problem");
  }
  if (p.creep) {
    validate(p.creep->displacement);
    validate(p.creep->force_profile);
    if (p.creep->displacement.size() != p.creep->force_profile.size())
      throw InvalidArgument("creep record and force profile lengths differ");
  }
}

struct FitResult {
  ModelParams params;
  double creep_nrmse = std::numeric_limits<double>::quiet_NaN();
  double relaxation_nrmse = std::numeric_limits<double>::quiet_NaN();
  double objective = 0.0;
  double best_initial_objective = 0.0;
};

inline constexpr double kFailedFitObjective = 1e3;

/// Responses of `params` simulated on the problem's own inputs.
struct ResponseErrors {
  double creep = std::numeric_limits<double>::quiet_NaN();
  double relaxation = std::numeric_limits<double>::quiet_NaN();
  double objective = kFailedFitObjective;
};

inline ResponseErrors response_errors(const IdentificationProblem& prob, const ModelParams& params) {
  ResponseErrors e;
  try {
    const auto filter = build_filter(params, prob.sample_time, prob.window);
    double sum = 0.0;
    int terms = 0;
    if (prob.relaxation) {
      const auto sim = simulate_relaxation(filter, prob.relaxation->step_displacement,
                                           double(prob.relaxation->force.size()) * prob.sample_time);
      e.relaxation = nrmse(prob.relaxation->force, sim);
      sum += e.relaxation;
      ++terms;
    }
    if (prob.creep) {
      const auto sim = simulate_creep(filter, prob.creep->force_profile);
      e.creep = nrmse(prob.creep->displacement, sim);
      sum += e.creep;
      ++terms;
    }
    e.objective = sum / terms;
  } catch (const DivergenceError&) {
  } catch (const InvalidArgument&) {
  }
  if (!std::isfinite(e.objective)) e.objective = kFailedFitObjective;
  return e;
}

struct FitOptions {
  std::size_t restarts = 16;
  SimplexOptions simplex{};
  std::size_t polish_iterations = 40;  // per inner Levenberg-Marquardt fit; 0 disables polishing
};

namespace detail {

// Stacked residuals, each block scaled by 1/(range * sqrt(n)) so that the block's
// squared norm equals its squared NRMSE. Empty on simulation failure.
inline Eigen::VectorXd scaled_residuals(const IdentificationProblem& prob, const ModelParams& params) {
  std::vector<double> r;
  try {
    const auto filter = build_filter(params, prob.sample_time, prob.window);
    auto append = [&r](const TimeSeries& ref, const TimeSeries& sim) {
      const auto [lo, hi] = std::minmax_element(ref.values.begin(), ref.values.end());
      const double scale = 1.0 / ((*hi - *lo) * std::sqrt(double(ref.size())));
      for (std::size_t k = 0; k < ref.size(); ++k) r.push_back((sim.values[k] - ref.values[k]) * scale);
    };
    if (prob.relaxation)
      append(prob.relaxation->force,
             simulate_relaxation(filter, prob.relaxation->step_displacement,
                                 double(prob.relaxation->force.size()) * prob.sample_time));
    if (prob.creep) append(prob.creep->displacement, simulate_creep(filter, prob.creep->force_profile));
  } catch (const Error&) {
    return {};
  }
  return Eigen::Map<Eigen::VectorXd>(r.data(), Eigen::Index(r.size()));
}

// Levenberg-Marquardt on the stacked residuals over the coordinates flagged in
// `active` (normalized box). A step is kept only if it lowers the mean-NRMSE
// objective, so the result never gets worse.
inline double lm_refine(const IdentificationProblem& prob, Eigen::Vector4d& x,
                        const std::array<bool, 4>& active, std::size_t iterations) {
  constexpr double kFdStep = 1e-6;
  auto params_at = [&](const Eigen::Vector4d& v) {
    return prob.bounds.denormalize(std::span<const double>(v.data(), 4));
  };
  std::vector<int> cols;
  for (int j = 0; j < 4; ++j)
    if (active[std::size_t(j)]) cols.push_back(j);
  const int m = int(cols.size());
  double value = response_errors(prob, params_at(x)).objective;
  double lambda = 1e-4;
  for (std::size_t it = 0; it < iterations; ++it) {
    const Eigen::VectorXd r0 = scaled_residuals(prob, params_at(x));
    if (r0.size() == 0) break;
    Eigen::MatrixXd jac(r0.size(), m);
    for (int c = 0; c < m; ++c) {
      const int j = cols[std::size_t(c)];
      const double mid = std::clamp(x[j], kFdStep, 1.0 - kFdStep);
      Eigen::Vector4d xp = x, xm = x;
      xp[j] = mid + kFdStep;
      xm[j] = mid - kFdStep;
      const Eigen::VectorXd rp = scaled_residuals(prob, params_at(xp));
      const Eigen::VectorXd rm = scaled_residuals(prob, params_at(xm));
      if (rp.size() != r0.size() || rm.size() != r0.size()) return value;
      jac.col(c) = (rp - rm) / (2.0 * kFdStep);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r0;
    bool improved = false;
    double moved = 0.0;
    for (int tries = 0; tries < 16 && !improved; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * (jtj.diagonal().array() + 1e-15).matrix();
      const Eigen::VectorXd delta = a.ldlt().solve(g);
      Eigen::Vector4d cand = x;
      for (int c = 0; c < m; ++c) {
        const int j = cols[std::size_t(c)];
        cand[j] = std::clamp(x[j] - delta[c], 0.0, 1.0);
      }
      const double v = response_errors(prob, params_at(cand)).objective;
      if (v < value) {
        moved = (cand - x).norm();
        x = cand;
        value = v;
        lambda = std::max(lambda / 5.0, 1e-12);
        improved = true;
      } else {
        lambda *= 4.0;
      }
    }
    if (!improved || moved < 1e-13) break;
  }
  return value;
}

// The objective has a long, nearly flat valley along which alpha, B1 and K0 trade
// off. Walk it as a one-dimensional profile over alpha: a pattern search with
// small steps, refitting (K0, K1, B1) warm-started from the current point at each
// trial alpha, then a final joint refinement.
inline void profile_polish(const IdentificationProblem& prob, std::vector<double>& u, double& value,
                           std::size_t iterations) {
  constexpr std::array<bool, 4> kAllButAlpha{true, true, true, false};
  constexpr std::array<bool, 4> kAll{true, true, true, true};
  constexpr double kInitialStep = 0.01;
  constexpr double kMaxStep = 0.04;
  constexpr double kMinStep = 1e-7;

  Eigen::Vector4d x(u[0], u[1], u[2], u[3]);
  double fx = lm_refine(prob, x, kAllButAlpha, iterations);
  double step = kInitialStep;
  double direction = 1.0;
  while (step >= kMinStep) {
    bool moved = false;
    for (const double dir : {direction, -direction}) {
      Eigen::Vector4d trial = x;
      trial[3] = std::clamp(x[3] + dir * step, 0.0, 1.0);
      if (trial[3] == x[3]) continue;
      const double ft = lm_refine(prob, trial, kAllButAlpha, iterations);
      if (ft < fx) {
        x = trial;
        fx = ft;
        direction = dir;
        step = std::min(step * 1.5, kMaxStep);
        moved = true;
        break;
      }
    }
    if (!moved) step *= 0.5;
  }
  fx = std::min(fx, lm_refine(prob, x, kAll, iterations));
  if (fx < value) {
    value = fx;
    u.assign(x.data(), x.data() + 4);
  }
}

}  // namespace detail

/// Multi-start simplex fit in the normalized parameter box, finished with a
/// profile polish of the best restart. Deterministic per seed.
inline FitResult fit_params(const IdentificationProblem& prob, std::uint64_t seed,
                            const FitOptions& opt = {}) {
  validate(prob);
  auto objective = [&](const std::vector<double>& u) {
    return response_errors(prob, prob.bounds.denormalize(u)).objective;
  };

  const auto starts = lhs_init(opt.restarts, 4, seed);
  double best_initial = std::numeric_limits<double>::infinity();
  SimplexResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    best_initial = std::min(best_initial, objective(s));
    auto r = nelder_mead_box(objective, s, opt.simplex);
    if (r.value < best.value) best = std::move(r);
  }
  if (opt.polish_iterations > 0) detail::profile_polish(prob, best.x, best.value, opt.polish_iterations);
  if (!(best.value < best_initial))
    throw ConvergenceError("fit_params: no restart improved on the best initial sample");

  FitResult out;
  out.params = prob.bounds.denormalize(best.x);
  const auto e = response_errors(prob, out.params);
  out.creep_nrmse = e.creep;
  out.relaxation_nrmse = e.relaxation;
  out.objective = e.objective;
  out.best_initial_objective = best_initial;
  return out;
}

/// Noise-free records of `truth` under the standard test protocols
/// (5 mm step held 3 s; 3 N for 3 s then 0.5 N for 3 s).
inline IdentificationProblem synthetic_problem(const ModelParams& truth,
                                               std::size_t generator_window = kDefaultWindow,
                                               std::size_t fit_window = kDefaultWindow,
                                               double sample_time = kDefaultSampleTime) {
  const auto filter = build_filter(truth, sample_time, generator_window);
  IdentificationProblem prob;
  prob.window = fit_window;
  prob.sample_time = sample_time;
  prob.relaxation = RelaxationRecord{simulate_relaxation(filter, 5.0, 3.0), 5.0};
  const auto profile = creep_recovery_profile(sample_time);
  prob.creep = CreepRecord{simulate_creep(filter, profile), profile};
  return prob;
}

/// Adds zero-mean Gaussian noise with standard deviation `level` times each
/// record's range (level = 0.01 is "1% noise").
inline void add_relative_noise(IdentificationProblem& prob, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw InvalidArgument("noise level must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> eps(0.0, 1.0);
  auto perturb = [&](TimeSeries& s) {
    const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
    const double sigma = level * (*hi - *lo);
    for (auto& v : s.values) v += sigma * eps(rng);
  };
  if (prob.relaxation) perturb(prob.relaxation->force);
  if (prob.creep) perturb(prob.creep->displacement);
}

inline json fit_report(const FitResult& r, const IdentificationProblem& prob, std::uint64_t seed) {
  auto nan_to_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return json{{"params", r.params},
              {"creep_nrmse", nan_to_null(r.creep_nrmse)},
              {"relaxation_nrmse", nan_to_null(r.relaxation_nrmse)},
              {"window", prob.window},
              {"sample_time", prob.sample_time},
              {"seed", seed}};
}

}  // namespace fracsls
