#include <set>

#include <gtest/gtest.h>

#include "fracsls/lhs.hpp"
#include "fracsls/simplex.hpp"

using namespace fracsls;

namespace {

std::set<std::size_t> strata(const std::vector<Point>& pts, std::size_t dim) {
  std::set<std::size_t> out;
  for (const auto& x : pts) out.insert(std::min(pts.size() - 1, std::size_t(x[dim] * double(pts.size()))));
  return out;
}

}  // namespace

TEST(Lhs, FiveByThreeIsLatin) {
  const auto pts = lhs_init(5, 3, 11);
  ASSERT_EQ(pts.size(), 5u);
  for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(strata(pts, d).size(), 5u) << "dim " << d;
  for (const auto& x : pts)
    for (double v : x) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
}

TEST(Lhs, SinglePointInBox) {
  const auto pts = lhs_init(1, 3, 4);
  ASSERT_EQ(pts.size(), 1u);
  ASSERT_EQ(pts[0].size(), 3u);
  for (double v : pts[0]) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Lhs, HalfSpaceKeepsOtherAxesLatin) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pts = lhs_init(5, 3, seed, [](const Point& x) { return x[0] >= 0.5; });
    for (const auto& x : pts) EXPECT_GE(x[0], 0.5);
    EXPECT_EQ(strata(pts, 1).size(), 5u);
    EXPECT_EQ(strata(pts, 2).size(), 5u);
  }
}

TEST(Lhs, DeterministicPerSeed) {
  EXPECT_EQ(lhs_init(7, 4, 99), lhs_init(7, 4, 99));
  EXPECT_NE(lhs_init(7, 4, 99), lhs_init(7, 4, 100));
}

TEST(Lhs, Errors) {
  EXPECT_THROW(lhs_init(0, 3, 1), InvalidArgument);
  EXPECT_THROW(lhs_init(3, 0, 1), InvalidArgument);
  EXPECT_THROW(lhs_init(2, 2, 1, [](const Point&) { return false; }), Error);
}

TEST(LexLess, Ordering) {
  EXPECT_TRUE(lex_less({0.1, 0.9}, {0.2, 0.0}));
  EXPECT_TRUE(lex_less({0.1, 0.1}, {0.1, 0.2}));
  EXPECT_FALSE(lex_less({0.1, 0.2}, {0.1, 0.2}));
}

TEST(Simplex, FindsInteriorMinimum) {
  auto f = [](const std::vector<double>& x) {
    return (x[0] - 0.3) * (x[0] - 0.3) + 4.0 * (x[1] - 0.7) * (x[1] - 0.7) + (x[0] - 0.3) * (x[1] - 0.7);
  };
  const auto r = nelder_mead_box(f, {0.9, 0.1}, SimplexOptions{2000, 1e-14, 0.1});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 0.3, 1e-5);
  EXPECT_NEAR(r.x[1], 0.7, 1e-5);
  EXPECT_LE(r.value, f({0.9, 0.1}));
}

TEST(Simplex, StaysInsideTheBox) {
  std::size_t outside = 0;
  auto f = [&](const std::vector<double>& x) {
    for (double v : x) outside += v < 0.0 || v > 1.0;
    return (x[0] + 1.0) * (x[0] + 1.0) + (x[1] - 2.0) * (x[1] - 2.0);
  };
  const auto r = nelder_mead_box(f, {0.5, 0.5});
  EXPECT_EQ(outside, 0u);
  EXPECT_NEAR(r.x[0], 0.0, 1e-4);
  EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(Simplex, IterationCap) {
  auto f = [](const std::vector<double>& x) { return std::sin(40.0 * x[0]) + x[1]; };
  const auto r = nelder_mead_box(f, {0.5, 0.5}, SimplexOptions{3, 0.0, 0.1});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3u);
}
