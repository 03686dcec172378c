#include <gtest/gtest.h>

#include "fracsls/passivity.hpp"
#include "fracsls/search_space.hpp"

using namespace fracsls;

TEST(Passivity, PureSpringNeedsHalfKT) {
  PassivityConfig c;
  c.device_damping = 0.0;
  c.sample_time = 0.001;
  const ModelParams spring{1.0, 3.0, 0.0, 0.5};
  EXPECT_NEAR(passivity_margin(spring, c), -0.0005, 1e-12);

  const ModelParams stiff{40.0, 3.0, 0.0, 0.5};
  EXPECT_NEAR(passivity_margin(stiff, c), -40.0 * 0.001 / 2.0, 1e-12);
}

TEST(Passivity, SpringThresholdAtFineGrid) {
  PassivityConfig c;
  c.device_damping = 0.0;
  c.freq_grid_points = 4096;
  for (double k : {0.5, 1.0, 7.3}) {
    const double b_star = -passivity_margin({k, 1.0, 0.0, 0.5}, c);
    EXPECT_NEAR(b_star, k * c.sample_time / 2.0, 1e-6);
    EXPECT_NEAR(b_star, k * c.sample_time / 2.0, 0.01 * k * c.sample_time / 2.0);
  }
}

TEST(Passivity, NullEnvironmentIsPassive) {
  for (double b : {0.0, 0.01, 0.3}) {
    PassivityConfig c;
    c.device_damping = b;
    EXPECT_DOUBLE_EQ(passivity_margin({0.0, 1.0, 0.0, 0.5}, c), b);
  }
}

TEST(Passivity, IdentifiedSetsArePassive) {
  EXPECT_GE(passivity_margin({-2.89, 5.70, 5.89, 0.203}), 0.0);
  EXPECT_GE(passivity_margin({-3.18, 5.58, 7.88, 0.176}), 0.0);
}

TEST(Passivity, StiffElementIsNot) {
  // near Nyquist the element is stiff, so the spring bound (k0 + k1) T / 2 = 0.015 > b
  EXPECT_LT(passivity_margin({0.0, 30.0, 30.0, 0.9}), 0.0);
}

TEST(Passivity, AffineInDeviceDamping) {
  const ModelParams p{-2.89, 5.70, 5.89, 0.203};
  PassivityConfig a, b;
  a.device_damping = 0.0;
  b.device_damping = 0.25;
  EXPECT_NEAR(passivity_margin(p, b) - passivity_margin(p, a), 0.25, 1e-12);
}

TEST(Passivity, SpectrumReuseMatchesDirectEvaluation) {
  const PassivityGrid grid{PassivityConfig{}};
  const auto s = grid.fractional_spectrum(0.4);
  for (auto p : {ModelParams{-1.0, 4.0, 2.0, 0.4}, ModelParams{-6.0, 12.0, 20.0, 0.4}})
    EXPECT_EQ(grid.margin(p, s), grid.margin(p));
}

TEST(Passivity, GridEndsAtNyquist) {
  const PassivityGrid grid{PassivityConfig{}};
  EXPECT_EQ(grid.omega().size(), 1024u);
  EXPECT_DOUBLE_EQ(grid.omega().back(), std::numbers::pi / 1e-3);
  EXPECT_GT(grid.omega().front(), std::numbers::pi / 1.0);
  for (std::size_t k = 1; k < grid.omega().size(); ++k) EXPECT_GT(grid.omega()[k], grid.omega()[k - 1]);
}

TEST(Passivity, MaskIsDeterministic) {
  const FeasibilityChecker a{SearchSpace{}}, b{SearchSpace{}};
  std::vector<bool> first, second, third;
  for (std::size_t i = 0; i < 300; ++i) {
    const Point x{radical_inverse(i + 1, 2), radical_inverse(i + 1, 3), radical_inverse(i + 1, 5)};
    first.push_back(a.feasible(x));
    second.push_back(a.feasible(x));
    third.push_back(b.feasible(x));
  }
  EXPECT_EQ(first, second);
  EXPECT_EQ(first, third);
  EXPECT_NE(std::count(first.begin(), first.end(), true), 0);
  EXPECT_NE(std::count(first.begin(), first.end(), false), 0);
}

TEST(Passivity, ConfigValidation) {
  PassivityConfig c;
  c.device_damping = -1e-3;
  EXPECT_THROW(validate(c), InvalidArgument);
  c = {};
  c.freq_grid_points = 32;
  EXPECT_THROW(validate(c), InvalidArgument);
  EXPECT_THROW(passivity_margin({std::nan(""), 1.0, 1.0, 0.5}), InvalidArgument);
}
