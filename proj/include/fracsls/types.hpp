#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracsls {

/// Base of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A time-domain simulation left the physical range (|F| or |x| above the overflow bound).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver ran out of iterations or could not improve.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra failure inside a GP model (non-PSD kernel, failed solve).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Four physical parameters of the fractional-order standard linear solid.
/// Stiffnesses in N/mm, b1 in N*s^alpha/mm.
struct ModelParams {
  double k0 = 0.0;
  double k1 = 1.0;
  double b1 = 0.0;
  double alpha = 0.5;

  bool operator==(const ModelParams&) const = default;
};

inline bool is_finite(const ModelParams& p) {
  return std::isfinite(p.k0) && std::isfinite(p.k1) && std::isfinite(p.b1) &&
         std::isfinite(p.alpha);
}

/// Throws InvalidArgument unless k1 > 0, b1 >= 0 and 0 < alpha <= 1.
inline void validate(const ModelParams& p) {
  if (!is_finite(p)) throw InvalidArgument("model parameters must be finite");
  if (p.k1 <= 0.0) throw InvalidArgument("k1 must be positive");
  if (p.b1 < 0.0) throw InvalidArgument("b1 must be non-negative");
  if (p.alpha <= 0.0 || p.alpha > 1.0) throw InvalidArgument("alpha must lie in (0, 1]");
}

enum class SignalRole { force, displacement };

/// Uniformly sampled signal starting at t = 0.
struct TimeSeries {
  double sample_time = 1e-3;
  std::vector<double> values;
  SignalRole role = SignalRole::force;

  std::size_t size() const { return values.size(); }
  double time(std::size_t k) const { return static_cast<double>(k) * sample_time; }
};

inline void validate(const TimeSeries& s) {
  if (!(s.sample_time > 0.0) || !std::isfinite(s.sample_time))
    throw InvalidArgument("sample_time must be positive");
  for (double v : s.values)
    if (!std::isfinite(v)) throw InvalidArgument("time series contains non-finite values");
}

}  // namespace fracsls
