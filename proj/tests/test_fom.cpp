#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "fracsls/fom.hpp"
#include "fracsls/io.hpp"
#include "fracsls/oracle.hpp"

using namespace fracsls;

namespace {

const ModelParams kIdentified{-2.89, 5.70, 5.89, 0.203};

// (-1)^k Gamma(a+1) / (Gamma(k+1) Gamma(a-k+1)), with the reflection formula for
// Gamma at negative arguments so large k does not overflow.
double binomial_weight(double a, int k) {
  if (k == 0) return 1.0;
  if (a - k + 1 > 0) {
    const double mag = std::exp(std::lgamma(a + 1) - std::lgamma(k + 1.0) - std::lgamma(a - k + 1));
    return (k % 2 ? -1.0 : 1.0) * mag;
  }
  // Gamma(a-k+1) = pi / (sin(pi(a-k+1)) Gamma(k-a)),  sin(pi(a-k+1)) = (-1)^(k-1) sin(pi a)
  const double ratio = std::exp(std::lgamma(a + 1) + std::lgamma(k - a) - std::lgamma(k + 1.0));
  return -ratio * std::sin(std::numbers::pi * a) / std::numbers::pi;
}

}  // namespace

TEST(GlCoeffs, Examples) {
  EXPECT_EQ(gl_coeffs(1.0, 3), (std::vector<double>{1, -1, 0, 0}));
  EXPECT_EQ(gl_coeffs(0.0, 2), (std::vector<double>{1, 0, 0}));
  const auto c = gl_coeffs(0.5, 2);
  EXPECT_DOUBLE_EQ(c[0], 1.0);
  EXPECT_DOUBLE_EQ(c[1], -0.5);
  EXPECT_DOUBLE_EQ(c[2], -0.125);
}

TEST(GlCoeffs, IntegerOrderIsBackwardDifference) {
  const auto c = gl_coeffs(1.0, 101);
  EXPECT_EQ(c[0], 1.0);
  EXPECT_EQ(c[1], -1.0);
  for (std::size_t i = 2; i < c.size(); ++i) EXPECT_EQ(c[i], 0.0);
}

TEST(GlCoeffs, MatchesGammaBinomial) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> alpha(0.0, 1.0);
  std::uniform_int_distribution<int> window(0, 256);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = alpha(rng);
    const int n = window(rng);
    const auto c = gl_coeffs(a, n);
    ASSERT_EQ(c.size(), std::size_t(n) + 1);
    for (int k = 0; k <= n; ++k) {
      const double ref = binomial_weight(a, k);
      ASSERT_NEAR(c[std::size_t(k)], ref, 1e-10 * std::abs(ref)) << "alpha=" << a << " k=" << k;
    }
  }
}

TEST(GlCoeffs, SignAndPartialSums) {
  for (double a : {0.01, 0.203, 0.5, 0.9, 0.99}) {
    const auto c = gl_coeffs(a, 300);
    double sum = c[0], prev = 2.0;
    EXPECT_EQ(c[0], 1.0);
    for (std::size_t i = 1; i < c.size(); ++i) {
      EXPECT_LT(c[i], 0.0);
      sum += c[i];
      EXPECT_GE(sum, 0.0);
      EXPECT_LT(sum, 1.0);
      EXPECT_LT(sum, prev);
      prev = sum;
    }
  }
}

TEST(GlCoeffs, RejectsBadInput) {
  EXPECT_THROW(gl_coeffs(std::nan(""), 3), InvalidArgument);
  EXPECT_THROW(gl_coeffs(0.5, -1), InvalidArgument);
}

TEST(BuildFilter, PureSpringWhenBranchVanishes) {
  const auto f = build_filter({1.7, 4.0, 0.0, 0.3});
  EXPECT_DOUBLE_EQ(f.num[0], 1.7 * 4.0);
  EXPECT_DOUBLE_EQ(f.den[0], 4.0);
  for (std::size_t i = 1; i < f.num.size(); ++i) {
    EXPECT_EQ(f.num[i], 0.0);
    EXPECT_EQ(f.den[i], 0.0);
  }
}

TEST(BuildFilter, BackwardDifferenceByHand) {
  const double k0 = 2.0, k1 = 5.7, b1 = 5.89, t = 0.001;
  const auto f = build_filter({k0, k1, b1, 1.0}, t, 1);
  const double g = b1 / t;
  // H = (k0 (k1 + g (1 - z^-1)) + k1 g (1 - z^-1)) / (k1 + g (1 - z^-1))
  EXPECT_NEAR(f.den[0], k1 + g, 1e-12 * g);
  EXPECT_NEAR(f.den[1], -g, 1e-12 * g);
  EXPECT_NEAR(f.num[0], k0 * (k1 + g) + k1 * g, 1e-12 * k1 * g);
  EXPECT_NEAR(f.num[1], -(k0 + k1) * g, 1e-12 * k1 * g);
}

TEST(BuildFilter, IdentifiedParamsDenominatorPositive) {
  const auto f = build_filter(kIdentified);
  EXPECT_NEAR(f.den[0], 5.70 + 5.89 / std::pow(0.001, 0.203), 1e-12);
  EXPECT_GT(f.den[0], 0.0);
  EXPECT_EQ(f.window, 101u);
  EXPECT_EQ(f.sample_time, 0.001);
}

TEST(BuildFilter, RejectsNonPositiveK1) {
  EXPECT_THROW(build_filter({0.0, 0.0, 1.0, 0.5}), InvalidArgument);
  EXPECT_THROW(build_filter({0.0, -1.0, 1.0, 0.5}), InvalidArgument);
}

TEST(FreqResponse, Limits) {
  EXPECT_EQ(freq_response(kIdentified, 0.0), std::complex<double>(kIdentified.k0, 0.0));
  // the branch deficit shrinks like k1^2 / (b1 w^alpha)
  auto gap = [](const ModelParams& p, double w) { return std::abs(freq_response(p, w) - (p.k0 + p.k1)); };
  EXPECT_LT(gap(kIdentified, 1e9), gap(kIdentified, 1e3));
  EXPECT_LT(gap(kIdentified, 1e9), 2.0 * kIdentified.k1 * kIdentified.k1 / (kIdentified.b1 * std::pow(1e9, kIdentified.alpha)));
  const ModelParams half{1.0, 3.0, 2.0, 0.5};
  EXPECT_LT(gap(half, 1e9), 1e-3);
}

TEST(FreqResponse, IndependentComplexEvaluation) {
  const std::complex<double> jw(0.0, 1.0);
  const auto s = std::exp(kIdentified.alpha * std::log(jw));
  const auto ref = kIdentified.k0 + kIdentified.k1 * kIdentified.b1 * s / (kIdentified.k1 + kIdentified.b1 * s);
  const auto h = freq_response(kIdentified, 1.0);
  EXPECT_LE(std::abs(h - ref), 1e-12 * std::abs(ref));
}

TEST(DiscreteResponse, ApproachesContinuousAtLowFrequency) {
  const auto f = build_filter(kIdentified, 1e-3, 4000);
  const double w = 10.0;
  EXPECT_LT(std::abs(discrete_response(f, w) - freq_response(kIdentified, w)), 0.02);
}

TEST(Relaxation, PureSpringIsConstant) {
  const auto f = build_filter({2.0, 5.0, 0.0, 0.4});
  const auto r = simulate_relaxation(f, 5.0, 0.5);
  for (double v : r.values) EXPECT_DOUBLE_EQ(v, 10.0);
}

TEST(Relaxation, IntegerOrderMatchesClosedForm) {
  const double k0 = 2.0, k1 = 5.7, b1 = 5.89, t = 1e-4, x0 = 5.0;
  const auto f = build_filter({k0, k1, b1, 1.0}, t);
  const auto r = simulate_relaxation(f, x0, 3.0);
  ASSERT_EQ(r.size(), 30000u);
  double worst = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double ref = (k0 + k1 * std::exp(-k1 * r.time(k) / b1)) * x0;
    worst = std::max(worst, std::abs(r.values[k] - ref) / std::abs(ref));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Relaxation, FirstSampleIsDiscreteInstantaneousStiffness) {
  const auto f = build_filter(kIdentified);
  const auto r = simulate_relaxation(f, 5.0, 0.01);
  EXPECT_NEAR(r.values[0], 5.0 * f.instantaneous_stiffness(), 1e-12);

  // and that stiffness tends to k0 + k1 as the sample time shrinks
  double prev = std::numeric_limits<double>::infinity();
  for (double t : {1e-2, 1e-3, 1e-4, 1e-6, 1e-9}) {
    const double gap = std::abs(build_filter(kIdentified, t).instantaneous_stiffness() - (kIdentified.k0 + kIdentified.k1));
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  const ModelParams fast{1.0, 4.0, 2.0, 0.9};
  EXPECT_NEAR(build_filter(fast, 1e-7).instantaneous_stiffness(), 5.0, 1e-4);
}

TEST(Relaxation, OverflowIsDivergence) {
  const auto f = build_filter(kIdentified);
  EXPECT_THROW(simulate_relaxation(f, 5.0, 1.0, 1.0), DivergenceError);
  EXPECT_THROW(simulate_relaxation(f, 5.0, 0.0), InvalidArgument);
}

TEST(Creep, PureSpringCompliance) {
  const auto f = build_filter({2.5, 5.0, 0.0, 0.4});
  TimeSeries force{1e-3, std::vector<double>(200, 3.0), SignalRole::force};
  const auto x = simulate_creep(f, force);
  for (double v : x.values) EXPECT_DOUBLE_EQ(v, 3.0 / 2.5);
}

TEST(Creep, IntegerOrderMatchesClosedForm) {
  const double k0 = 2.0, k1 = 5.7, b1 = 5.89, t = 1e-4;
  const auto f = build_filter({k0, k1, b1, 1.0}, t);
  const auto profile = creep_recovery_profile(t);
  const auto x = simulate_creep(f, profile);
  // compliance of a spring in parallel with a Maxwell arm
  const double tau = b1 * (k0 + k1) / (k0 * k1);
  auto j = [&](double s) { return 1.0 / k0 - (1.0 / k0 - 1.0 / (k0 + k1)) * std::exp(-s / tau); };
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double s = x.time(k);
    const double ref = 3.0 * j(s) + (s >= 3.0 - 0.5 * t ? (0.5 - 3.0) * j(s - 3.0) : 0.0);
    worst = std::max(worst, std::abs(x.values[k] - ref) / std::abs(ref));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Creep, FirstSampleIsInstantaneousCompliance) {
  const auto f = build_filter(kIdentified);
  const auto x = simulate_creep(f, creep_recovery_profile());
  EXPECT_NEAR(x.values[0], 3.0 / f.instantaneous_stiffness(), 1e-12);
}

TEST(Creep, RejectsNonInvertibleStiffness) {
  TimeSeries force{1e-3, std::vector<double>(10, 1.0), SignalRole::force};
  EXPECT_THROW(simulate_creep(build_filter({-6.0, 5.7, 5.89, 0.203}), force), InvalidArgument);
  EXPECT_THROW(simulate_creep(build_filter({-5.7, 5.7, 5.89, 0.203}), force), InvalidArgument);
}

TEST(Creep, InvertsRelaxation) {
  const auto f = build_filter(kIdentified);
  const auto force = simulate_relaxation(f, 5.0, 3.0);
  const auto x = simulate_creep(f, force);
  for (double v : x.values) ASSERT_NEAR(v, 5.0, 5.0 * 1e-8);
}

TEST(Window, LongerWindowsTrackTheLongReference) {
  // agreement with a 404-sample window improves monotonically with N
  const ModelParams p = kIdentified;
  const auto ref = simulate_relaxation(build_filter(p, 1e-3, 404), 5.0, 3.0);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n : {2u, 5u, 10u, 25u, 50u, 101u, 202u}) {
    const auto r = simulate_relaxation(build_filter(p, 1e-3, n), 5.0, 3.0);
    const double e = nrmse(ref, r);
    EXPECT_LT(e, prev) << "N=" << n;
    prev = e;
  }
}

TEST(SolveK0, Examples) {
  EXPECT_DOUBLE_EQ(solve_k0(5.0, 0.0, 0.4, 2.8, 3.0), 2.8);
  EXPECT_NEAR(solve_k0(5.0, 3.0, 1.0, 2.8, 1e12), 2.8 - 5.0, 1e-9);
  EXPECT_NEAR(solve_k0(5.70, 5.89, 0.203), -2.89, 1e-9);
  EXPECT_NEAR(solve_k0(5.58, 7.88, 0.176), -3.18, 0.02 * 3.18);
  EXPECT_THROW(solve_k0(5.0, 1.0, 0.5, 1.0, 0.0), InvalidArgument);
  EXPECT_THROW(solve_k0(5.0, std::nan(""), 0.5, 1.0, 1.0), InvalidArgument);
}

TEST(SolveK0, ReachesTheTargetStiffness) {
  const EffectiveStiffness c;
  for (auto [k1, b1, a] : {std::tuple{3.0, 1.0, 0.3}, std::tuple{20.0, 15.0, 0.8}, std::tuple{1.5, 30.0, 0.05}}) {
    const ModelParams p{solve_k0(k1, b1, a, c), k1, b1, a};
    EXPECT_NEAR(freq_response(p, c.omega).real(), c.target, 1e-12);
  }
}

TEST(TimeSeriesCsv, RoundTripsBitExactly) {
  const auto r = simulate_relaxation(build_filter(kIdentified), 5.0, 0.2);
  const auto back = time_series_from_csv(to_csv(r), SignalRole::force);
  EXPECT_EQ(back.values, r.values);
  EXPECT_DOUBLE_EQ(back.sample_time, r.sample_time);
  EXPECT_THROW(time_series_from_csv("time,v\n0,1\n", SignalRole::force), InvalidArgument);
  EXPECT_THROW(time_series_from_csv("t,value\n0,abc\n", SignalRole::force, 1e-3), InvalidArgument);
}
