#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "prl/rng.hpp"

namespace prl {
namespace {

// Known-answer vectors published with the Random123 Philox reference code.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RngStream, ReplayIsExact) {
  RngStream a(1, 0), b(1, 0);
  EXPECT_EQ(rng_uniform(a, 4, 5, 0, 1), rng_uniform(b, 4, 5, 0, 1));
  EXPECT_EQ(a.normal(), b.normal());
  EXPECT_EQ(a.permutation(50), b.permutation(50));
  EXPECT_EQ(a, b);
}

TEST(RngStream, DistinctStreamsDiffer) {
  RngStream a(1, 0), b(1, 1), c(2, 0);
  const auto x = a.next_u64();
  EXPECT_NE(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
}

TEST(RngStream, UniformMean) {
  RngStream rng(1, 0);
  const Matrix m = rng_uniform(rng, 1000, 1000, 0, 1);
  const double mean = std::accumulate(m.data().begin(), m.data().end(), 0.0) / static_cast<double>(m.size());
  EXPECT_GE(mean, 0.499);
  EXPECT_LE(mean, 0.501);
  EXPECT_GE(*std::min_element(m.data().begin(), m.data().end()), 0.0);
  EXPECT_LT(*std::max_element(m.data().begin(), m.data().end()), 1.0);
}

TEST(RngStream, UniformRejectsEmptyInterval) {
  RngStream rng(1, 0);
  EXPECT_THROW(rng_uniform(rng, 1, 1, 2.0, 2.0), std::invalid_argument);
  EXPECT_THROW(rng.uniform(3.0, 1.0), std::invalid_argument);
}

TEST(RngStream, NormalMoments) {
  RngStream rng(2, 0);
  const std::size_t n = 200000;
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal(1.0, 2.0);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 1.0, 4 * 2.0 / std::sqrt(double(n)));
  EXPECT_NEAR(var, 4.0, 0.05);
}

TEST(RngStream, LaplaceMoments) {
  RngStream rng(3, 0);
  const std::size_t n = 200000;
  const double b = 0.7;
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.laplace(b);
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 4 * std::sqrt(2.0) * b / std::sqrt(double(n)));
  EXPECT_NEAR(std::sqrt(s2 / n), std::sqrt(2.0) * b, 0.01 * std::sqrt(2.0) * b);
  EXPECT_EQ(rng.laplace(0.0), 0.0);
}

TEST(RngStream, GammaMean) {
  RngStream rng(4, 0);
  for (double shape : {0.3, 1.0, 4.5}) {
    double s = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) s += rng.gamma(shape);
    EXPECT_NEAR(s / n, shape, 5 * std::sqrt(shape / n)) << shape;
  }
}

TEST(RngStream, DirichletIsOnSimplex) {
  RngStream rng(5, 0);
  for (int t = 0; t < 100; ++t) {
    const auto p = rng.dirichlet(6, 0.5);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double v : p) EXPECT_GE(v, 0.0);
  }
}

TEST(RngStream, PermutationAndIndex) {
  RngStream rng(6, 0);
  auto p = rng.permutation(100);
  std::set<std::size_t> s(p.begin(), p.end());
  EXPECT_EQ(s.size(), 100u);
  EXPECT_EQ(*s.rbegin(), 99u);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 450);
  EXPECT_THROW(rng.uniform_index(0), std::invalid_argument);
}

TEST(RngStream, BernoulliFrequency) {
  RngStream rng(7, 0);
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += rng.bernoulli(0.3);
  EXPECT_NEAR(hits / 100000.0, 0.3, 0.006);
}

}  // namespace
}  // namespace prl
