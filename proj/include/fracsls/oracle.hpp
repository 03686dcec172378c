#pragma once

// Simulated participant. It feels a candidate through its creep and relaxation
// responses, compares them with a reference material, and answers with a label.

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>

#include "fracsls/gp_ordinal.hpp"
#include "fracsls/hil_bo.hpp"
#include "fracsls/sysid.hpp"

namespace fracsls {

inline constexpr ModelParams kIdentifiedParams{-2.89, 5.70, 5.89, 0.203};
inline constexpr ModelParams kPopulationBestParams{-3.18, 5.58, 7.88, 0.176};

struct OracleConfig {
  ModelParams ground_truth = kIdentifiedParams;
  double creep_weight = 0.5;
  double relaxation_weight = 0.5;
  double d_close = 0.05;
  double d_different = 0.15;
  double noise = 0.02;
  std::uint64_t seed = 0;
  double sample_time = kDefaultSampleTime;
  std::size_t window = kDefaultWindow;
};

inline void validate(const OracleConfig& c) {
  validate(c.ground_truth);
  if (!(c.creep_weight >= 0.0 && c.relaxation_weight >= 0.0) || c.creep_weight + c.relaxation_weight <= 0.0)
    throw InvalidArgument("response weights must be non-negative and not both zero");
  if (!(c.d_close < c.d_different)) throw InvalidArgument("thresholds must satisfy d_close < d_different");
  if (!(std::isfinite(c.noise) && c.noise >= 0.0)) throw InvalidArgument("noise must be finite and >= 0");
  if (!(c.sample_time > 0.0)) throw InvalidArgument("sample_time must be positive");
}

struct ResponseCurves {
  TimeSeries relaxation;  // force for a 5 mm step held 3 s
  TimeSeries creep;       // displacement under the 3 N / 0.5 N profile
};

inline constexpr double kRelaxationStep = 5.0;      // mm
inline constexpr double kRelaxationDuration = 3.0;  // s

inline ResponseCurves response_curves(const ModelParams& p, double sample_time = kDefaultSampleTime,
                                      std::size_t window = kDefaultWindow) {
  const auto f = build_filter(p, sample_time, window);
  return {simulate_relaxation(f, kRelaxationStep, kRelaxationDuration),
          simulate_creep(f, creep_recovery_profile(sample_time))};
}

inline json to_json_value(const ResponseCurves& c) {
  auto series = [](const TimeSeries& s) {
    return json{{"sample_time", s.sample_time}, {"values", s.values}};
  };
  return json{{"relaxation", series(c.relaxation)}, {"creep", series(c.creep)}};
}

/// Standard normal draw for (seed, query index), independent of call order.
inline double oracle_normal(std::uint64_t seed, std::uint64_t query) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(query),
                    std::uint32_t(query >> 32)};
  std::mt19937_64 rng(seq);
  auto uniform = [&] { return (double(rng() >> 11) + 0.5) * 0x1.0p-53; };  // open interval (0, 1)
  const double u1 = uniform(), u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Oracle with its reference responses simulated once.
class Oracle {
 public:
  explicit Oracle(OracleConfig config) : config_(config) {
    validate(config_);
    reference_ = response_curves(config_.ground_truth, config_.sample_time, config_.window);
  }

  const OracleConfig& config() const { return config_; }
  const ResponseCurves& reference() const { return reference_; }

  /// Weighted mean NRMSE of the candidate's responses against the reference.
  double distance(const ModelParams& candidate) const {
    const auto c = response_curves(candidate, config_.sample_time, config_.window);
    const double wsum = config_.creep_weight + config_.relaxation_weight;
    return (config_.creep_weight * nrmse(reference_.creep, c.creep) +
            config_.relaxation_weight * nrmse(reference_.relaxation, c.relaxation)) /
           wsum;
  }

  /// Noisy perceived distance for the given query index.
  double perceived(double distance, std::uint64_t query) const {
    return config_.noise == 0.0 ? distance : distance + config_.noise * oracle_normal(config_.seed, query);
  }

  Label classify(double perceived_distance) const {
    if (perceived_distance < config_.d_close) return Label::close;
    if (perceived_distance > config_.d_different) return Label::different;
    return Label::similar;
  }

  /// A candidate whose response cannot be simulated (diverges or has no
  /// instantaneous solution) feels nothing like the reference.
  Label respond(const ModelParams& candidate, std::uint64_t query) const {
    double d;
    try {
      d = distance(candidate);
    } catch (const DivergenceError&) {
      return Label::different;
    } catch (const InvalidArgument&) {
      return Label::different;
    }
    return classify(perceived(d, query));
  }

  FeedbackSource feedback() const {
    return [self = std::make_shared<const Oracle>(*this)](const ModelParams& p, std::size_t i) {
      return self->respond(p, i);
    };
  }

 private:
  OracleConfig config_;
  ResponseCurves reference_;
};

inline double perceptual_distance(const ModelParams& candidate, const OracleConfig& config) {
  return Oracle(config).distance(candidate);
}

inline Label respond(const ModelParams& candidate, const OracleConfig& config, std::uint64_t query_index = 0) {
  return Oracle(config).respond(candidate, query_index);
}

inline void to_json(json& j, const OracleConfig& c) {
  j = json{{"ground_truth", c.ground_truth}, {"creep_weight", c.creep_weight},
           {"relaxation_weight", c.relaxation_weight}, {"d_close", c.d_close},
           {"d_different", c.d_different}, {"noise", c.noise},
           {"seed", c.seed}, {"sample_time", c.sample_time},
           {"window", c.window}};
}

inline void from_json(const json& j, OracleConfig& c) {
  c = OracleConfig{};
  if (j.contains("ground_truth")) j.at("ground_truth").get_to(c.ground_truth);
  if (j.contains("creep_weight")) j.at("creep_weight").get_to(c.creep_weight);
  if (j.contains("relaxation_weight")) j.at("relaxation_weight").get_to(c.relaxation_weight);
  if (j.contains("d_close")) j.at("d_close").get_to(c.d_close);
  if (j.contains("d_different")) j.at("d_different").get_to(c.d_different);
  if (j.contains("noise")) j.at("noise").get_to(c.noise);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("sample_time")) j.at("sample_time").get_to(c.sample_time);
  if (j.contains("window")) j.at("window").get_to(c.window);
  validate(c);
}

/// The simulated population: thresholds scaled by a factor in [0.8, 1.2] and
/// noise drawn from [0.01, 0.04] per member, all seeded.
inline std::vector<OracleConfig> jittered_population(std::size_t count, std::uint64_t seed,
                                                     const OracleConfig& base = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(0.8, 1.2), noise(0.01, 0.04);
  std::vector<OracleConfig> out;
  for (std::size_t i = 0; i < count; ++i) {
    OracleConfig c = base;
    c.d_close = base.d_close * scale(rng);
    c.d_different = base.d_different * scale(rng);
    c.noise = noise(rng);
    c.seed = rng();
    validate(c);
    out.push_back(c);
  }
  return out;
}

}  // namespace fracsls
