#pragma once

// Fractional-order standard linear solid: Grunwald-Letnikov short-memory
// discretization, discrete impedance filter, and time-domain simulation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "fracsls/types.hpp"

namespace fracsls {

inline constexpr double kDefaultSampleTime = 1e-3;
inline constexpr std::size_t kDefaultWindow = 101;
inline constexpr double kDefaultOverflowBound = 1e6;

/// Short-memory Grunwald-Letnikov weights c_0..c_window for order alpha.
/// c_0 = 1, c_i = (i - alpha - 1) / i * c_{i-1}.
inline std::vector<double> gl_coeffs(double alpha, long window) {
  if (!std::isfinite(alpha)) throw InvalidArgument("alpha must be finite");
  if (window < 0) throw InvalidArgument("window must be non-negative");
  std::vector<double> c(static_cast<std::size_t>(window) + 1);
  c[0] = 1.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double di = static_cast<double>(i);
    c[i] = (di - alpha - 1.0) / di * c[i - 1];
  }
  return c;
}

/// Discrete realization of H(z) = K0 + K1 B1 S(z) / (K1 + B1 S(z)),
/// S(z) = T^-alpha sum c_i z^-i, as H(z) = sum num_i z^-i / sum den_i z^-i.
struct DiscreteImpedance {
  ModelParams params;
  double sample_time = kDefaultSampleTime;
  std::size_t window = kDefaultWindow;
  std::vector<double> gl_coeffs;
  std::vector<double> num;
  std::vector<double> den;

  /// B1 / T^alpha, the gain of the discretized fractional element.
  double element_gain() const { return params.b1 / std::pow(sample_time, params.alpha); }

  /// Discrete stiffness seen by a step input: num[0] / den[0].
  double instantaneous_stiffness() const { return num[0] / den[0]; }
};

inline DiscreteImpedance build_filter(const ModelParams& params,
                                      double sample_time = kDefaultSampleTime,
                                      std::size_t window = kDefaultWindow) {
  if (!is_finite(params)) throw InvalidArgument("model parameters must be finite");
  if (params.k1 <= 0.0) throw InvalidArgument("k1 must be positive");
  if (params.b1 < 0.0) throw InvalidArgument("b1 must be non-negative");
  if (params.alpha < 0.0 || params.alpha > 1.0) throw InvalidArgument("alpha must lie in [0, 1]");
  if (!(sample_time > 0.0)) throw InvalidArgument("sample_time must be positive");

  DiscreteImpedance f;
  f.params = params;
  f.sample_time = sample_time;
  f.window = window;
  f.gl_coeffs = gl_coeffs(params.alpha, static_cast<long>(window));
  const double beta = f.element_gain();
  f.num.resize(window + 1);
  f.den.resize(window + 1);
  for (std::size_t i = 0; i <= window; ++i) {
    const double branch = beta * f.gl_coeffs[i];
    f.den[i] = (i == 0 ? params.k1 : 0.0) + branch;
    f.num[i] = params.k0 * f.den[i] + params.k1 * branch;
  }
  return f;
}

/// Continuous complex stiffness H(j omega), principal branch of (j omega)^alpha.
inline std::complex<double> freq_response(const ModelParams& p, double omega) {
  if (!std::isfinite(omega) || !is_finite(p)) throw InvalidArgument("non-finite input");
  if (omega < 0.0) throw InvalidArgument("omega must be non-negative");
  if (omega == 0.0 || p.b1 == 0.0) return {p.k0, 0.0};
  const auto s_alpha = std::polar(std::pow(omega, p.alpha), p.alpha * std::numbers::pi / 2.0);
  const auto element = p.b1 * s_alpha;
  return p.k0 + p.k1 * element / (p.k1 + element);
}

/// H(e^{j omega T}) of the discrete filter.
inline std::complex<double> discrete_response(const DiscreteImpedance& f, double omega) {
  std::complex<double> n{0.0, 0.0}, d{0.0, 0.0};
  const auto step = std::polar(1.0, -omega * f.sample_time);
  std::complex<double> z{1.0, 0.0};
  for (std::size_t i = 0; i <= f.window; ++i) {
    n += f.num[i] * z;
    d += f.den[i] * z;
    z *= step;
  }
  return n / d;
}

/// Low-frequency stiffness-matching constraint that eliminates K0.
struct EffectiveStiffness {
  double omega = 4.357521628515767;  // rad/s
  double target = 0.44;              // N/mm
};

/// K0 such that Re H(j omega_eff) equals target_keff.
inline double solve_k0(double k1, double b1, double alpha, double target_keff, double omega_eff) {
  if (!std::isfinite(k1) || !std::isfinite(b1) || !std::isfinite(alpha) ||
      !std::isfinite(target_keff) || !std::isfinite(omega_eff))
    throw InvalidArgument("non-finite input");
  if (!(omega_eff > 0.0)) throw InvalidArgument("omega_eff must be positive");
  const ModelParams branch_only{0.0, k1, b1, alpha};
  return target_keff - freq_response(branch_only, omega_eff).real();
}

inline double solve_k0(double k1, double b1, double alpha, const EffectiveStiffness& c = {}) {
  return solve_k0(k1, b1, alpha, c.target, c.omega);
}

/// Effective viscous damping Im H(j omega) / omega, in N*s/mm.
inline double effective_damping(const ModelParams& p, double omega) {
  return freq_response(p, omega).imag() / omega;
}

/// Stepping state of the series branch. The internal node y obeys
/// K1 (x - y) = B1 D^alpha y; history before t = 0 is zero.
class FilterState {
 public:
  explicit FilterState(const DiscreteImpedance& f)
      : filter_(&f),
        beta_(f.element_gain()),
        history_(2 * f.window, 0.0),
        pos_(0) {}

  /// Advances one sample with prescribed displacement; returns the force.
  double step_displacement(double x) {
    const auto& p = filter_->params;
    const double y = (p.k1 * x - beta_ * memory()) / (p.k1 + beta_);
    push(y);
    return p.k0 * x + p.k1 * (x - y);
  }

  /// Advances one sample with prescribed force; returns the displacement.
  double step_force(double force) {
    const auto& p = filter_->params;
    const double denom = p.k1 + beta_;
    const double h = memory();
    // F = K0 x + K1 x - K1 (K1 x - beta h) / denom, solved for x.
    const double stiffness = p.k0 + p.k1 * beta_ / denom;
    const double x = (force - p.k1 * beta_ * h / denom) / stiffness;
    push((p.k1 * x - beta_ * h) / denom);
    return x;
  }

  void reset() {
    std::fill(history_.begin(), history_.end(), 0.0);
    pos_ = 0;
  }

 private:
  // sum_{i=1..N} c_i y_{k-i}
  double memory() const {
    const auto& c = filter_->gl_coeffs;
    const std::size_t n = filter_->window;
    double acc = 0.0;
    const double* h = history_.data() + pos_;
    for (std::size_t i = 1; i <= n; ++i) acc += c[i] * h[i - 1];
    return acc;
  }

  void push(double y) {
    const std::size_t n = filter_->window;
    if (n == 0) return;
    pos_ = (pos_ + n - 1) % n;
    history_[pos_] = y;
    history_[pos_ + n] = y;
  }

  const DiscreteImpedance* filter_;
  double beta_;
  std::vector<double> history_;  // doubled ring buffer, newest first
  std::size_t pos_;
};

inline std::size_t sample_count(double duration, double sample_time) {
  if (!(duration > 0.0)) throw InvalidArgument("duration must be positive");
  return static_cast<std::size_t>(std::llround(duration / sample_time));
}

/// Force response to a displacement step held for `duration` seconds.
inline TimeSeries simulate_relaxation(const DiscreteImpedance& f, double step_displacement,
                                      double duration,
                                      double overflow_bound = kDefaultOverflowBound) {
  if (!std::isfinite(step_displacement)) throw InvalidArgument("step must be finite");
  const std::size_t n = sample_count(duration, f.sample_time);
  TimeSeries out{f.sample_time, std::vector<double>(n), SignalRole::force};
  FilterState state(f);
  for (std::size_t k = 0; k < n; ++k) {
    const double force = state.step_displacement(step_displacement);
    if (!(std::abs(force) <= overflow_bound))
      throw DivergenceError("relaxation force exceeded overflow bound");
    out.values[k] = force;
  }
  return out;
}

/// Displacement response to a prescribed force profile.
inline TimeSeries simulate_creep(const DiscreteImpedance& f, const TimeSeries& force_profile,
                                 double overflow_bound = kDefaultOverflowBound) {
  validate(force_profile);
  if (!(f.params.k0 + f.params.k1 > 0.0) || !(f.instantaneous_stiffness() > 0.0))
    throw InvalidArgument("non-invertible instantaneous stiffness");
  TimeSeries out{f.sample_time, std::vector<double>(force_profile.size()),
                 SignalRole::displacement};
  FilterState state(f);
  for (std::size_t k = 0; k < force_profile.size(); ++k) {
    const double x = state.step_force(force_profile.values[k]);
    if (!(std::abs(x) <= overflow_bound))
      throw DivergenceError("creep displacement exceeded overflow bound");
    out.values[k] = x;
  }
  return out;
}

/// Displacement profile -> force, for arbitrary inputs.
inline TimeSeries simulate_force(const DiscreteImpedance& f, const TimeSeries& displacement,
                                 double overflow_bound = kDefaultOverflowBound) {
  validate(displacement);
  TimeSeries out{f.sample_time, std::vector<double>(displacement.size()), SignalRole::force};
  FilterState state(f);
  for (std::size_t k = 0; k < displacement.size(); ++k) {
    const double force = state.step_displacement(displacement.values[k]);
    if (!(std::abs(force) <= overflow_bound))
      throw DivergenceError("force exceeded overflow bound");
    out.values[k] = force;
  }
  return out;
}

/// Creep-with-recovery loading: hold_force for hold_s, then recovery_force for recovery_s.
inline TimeSeries creep_recovery_profile(double sample_time = kDefaultSampleTime,
                                         double hold_force = 3.0, double recovery_force = 0.5,
                                         double hold_s = 3.0, double recovery_s = 3.0) {
  const std::size_t n_hold = sample_count(hold_s, sample_time);
  const std::size_t n_rec = sample_count(recovery_s, sample_time);
  TimeSeries s{sample_time, std::vector<double>(n_hold + n_rec, recovery_force),
               SignalRole::force};
  std::fill_n(s.values.begin(), n_hold, hold_force);
  return s;
}

}  // namespace fracsls
