#pragma once

// Sampled-data passivity check (Colgate-Schenkel form): a discretely rendered
// impedance H(z) is passive with device damping b when
//   b >= T / (2 (1 - cos wT)) * Re[(1 - e^{-jwT}) H(e^{jwT})]  for all 0 < w <= pi/T.

#include <cmath>
#include <complex>
#include <algorithm>
#include <limits>
#include <numbers>
#include <vector>

#include "fracsls/fom.hpp"

namespace fracsls {

struct PassivityConfig {
  double device_damping = 0.01;  // N*s/mm
  std::size_t freq_grid_points = 1024;
  double sample_time = kDefaultSampleTime;
  std::size_t window = kDefaultWindow;
};

inline void validate(const PassivityConfig& c) {
  if (!(c.device_damping >= 0.0)) throw InvalidArgument("device_damping must be >= 0");
  if (c.freq_grid_points < 64) throw InvalidArgument("freq_grid_points must be >= 64");
  if (!(c.sample_time > 0.0)) throw InvalidArgument("sample_time must be positive");
}

/// Frequency grid plus the alpha-independent trigonometric tables. Building one is
/// O(points * window); evaluating a parameter set against it is O(points * window)
/// real multiply-adds, or O(points) when the fractional spectrum is reused.
class PassivityGrid {
 public:
  explicit PassivityGrid(const PassivityConfig& config) : config_(config) {
    validate(config);
    const double t = config.sample_time;
    const std::size_t n = config.freq_grid_points;
    const double lo = std::log(std::numbers::pi / (1000.0 * t));
    const double hi = std::log(std::numbers::pi / t);
    omega_.resize(n);
    weight_.resize(n);
    lead_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      // log-spaced on (lo, hi], last point exactly at Nyquist
      const double w = k + 1 == n ? std::numbers::pi / t
                                  : std::exp(lo + (hi - lo) * double(k + 1) / double(n));
      omega_[k] = w;
      weight_[k] = t / (2.0 * (1.0 - std::cos(w * t)));
      lead_[k] = 1.0 - std::polar(1.0, -w * t);
    }
    const std::size_t m = config.window + 1;
    cos_.resize(n * m);
    sin_.resize(n * m);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < m; ++i) {
        const double phase = omega_[k] * t * double(i);
        cos_[k * m + i] = std::cos(phase);
        sin_[k * m + i] = -std::sin(phase);
      }
  }

  const PassivityConfig& config() const { return config_; }
  const std::vector<double>& omega() const { return omega_; }

  /// S(e^{jwT}) = T^-alpha sum_i c_i e^{-jwTi} on the grid.
  std::vector<std::complex<double>> fractional_spectrum(double alpha) const {
    const auto c = gl_coeffs(alpha, static_cast<long>(config_.window));
    const double scale = std::pow(config_.sample_time, -alpha);
    const std::size_t m = c.size();
    std::vector<std::complex<double>> s(omega_.size());
    for (std::size_t k = 0; k < omega_.size(); ++k) {
      const double* cr = cos_.data() + k * m;
      const double* si = sin_.data() + k * m;
      double re = 0.0, im = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        re += c[i] * cr[i];
        im += c[i] * si[i];
      }
      s[k] = {scale * re, scale * im};
    }
    return s;
  }

  /// Largest damping the rendered impedance demands over the grid.
  double required_damping(const ModelParams& p,
                          const std::vector<std::complex<double>>& spectrum) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < omega_.size(); ++k) {
      std::complex<double> h{p.k0, 0.0};
      if (p.k1 != 0.0 && p.b1 != 0.0) {
        const auto element = p.b1 * spectrum[k];
        h += p.k1 * element / (p.k1 + element);
      }
      worst = std::max(worst, weight_[k] * (lead_[k] * h).real());
    }
    return worst;
  }

  double margin(const ModelParams& p) const {
    return config_.device_damping - required_damping(p, fractional_spectrum(p.alpha));
  }

  double margin(const ModelParams& p, const std::vector<std::complex<double>>& spectrum) const {
    return config_.device_damping - required_damping(p, spectrum);
  }

 private:
  PassivityConfig config_;
  std::vector<double> omega_;
  std::vector<double> weight_;
  std::vector<std::complex<double>> lead_;
  std::vector<double> cos_, sin_;
};

/// b minus the worst-case required damping; params are feasible iff margin >= 0.
inline double passivity_margin(const ModelParams& params, const PassivityConfig& config = {}) {
  if (!is_finite(params)) throw InvalidArgument("model parameters must be finite");
  return PassivityGrid(config).margin(params);
}

}  // namespace fracsls
