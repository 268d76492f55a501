#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "klsal/error.hpp"
#include "klsal/klgrad.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace klsal;

namespace {

AffinityMatrix two_class(double p01) {
  return AffinityMatrix::from_unnormalized(2, {0.0, p01, 1.0 - p01, 0.0});
}

AffinityMatrix random_affinity(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> raw(k * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) raw[i * k + j] = raw[j * k + i] = u(rng);
  return AffinityMatrix::from_unnormalized(k, raw);
}

}  // namespace

TEST_CASE("kl_divergence") {
  SUBCASE("identical distributions") {
    auto p = studentt_joint(ScoreVector({0.3, -1.0, 2.0}));
    CHECK(kl_divergence(p, p) == 0.0);
  }
  SUBCASE("two-class formula") {
    // P off-diagonal {0.5, 0.5}; Q off-diagonal {0.25, 0.75}.
    auto p = two_class(0.5);
    auto q = two_class(0.25);
    CHECK(kl_divergence(p, q) == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)).epsilon(1e-14));
    CHECK(kl_divergence(p, q) == doctest::Approx(0.143841).epsilon(1e-6));
  }
  SUBCASE("class count mismatch") {
    CHECK_THROWS_AS(kl_divergence(two_class(0.5), studentt_joint(ScoreVector({0, 1, 2}))), ShapeMismatch);
  }
  SUBCASE("nonnegative on random floored pairs") {
    std::mt19937_64 rng(8);
    for (int n = 0; n < 100; ++n) {
      const std::size_t k = 2 + n % 9;
      CHECK(kl_divergence(random_affinity(rng, k), random_affinity(rng, k)) >= -1e-12);
    }
  }
  SUBCASE("strictly positive when entries differ by at least 1e-2") {
    std::mt19937_64 rng(9);
    int checked = 0;
    for (int n = 0; n < 200; ++n) {
      auto p = random_affinity(rng, 4), q = random_affinity(rng, 4);
      double gap = 0.0;
      for (std::size_t i = 0; i < 16; ++i) gap = std::max(gap, std::abs(p.entries()[i] - q.entries()[i]));
      if (gap < 1e-2) continue;
      ++checked;
      CHECK(kl_divergence(p, q) > 1e-6);
    }
    CHECK(checked > 50);
  }
}

TEST_CASE("kl_gradient") {
  SUBCASE("stationary when P equals Q") {
    ScoreVector s({0.5, -2.0, 1.0, 4.0});
    auto q = studentt_joint(s);
    auto z = kl_gradient(q, q, s);
    for (double v : z.values()) CHECK(v == 0.0);
  }
  SUBCASE("shape mismatch") {
    ScoreVector s({0.0, 1.0, 2.0});
    auto q = studentt_joint(s);
    CHECK_THROWS_AS(kl_gradient(two_class(0.5), q, s), ShapeMismatch);
    CHECK_THROWS_AS(kl_gradient(q, q, ScoreVector({0.0, 1.0})), ShapeMismatch);
  }
  SUBCASE("matches central finite differences on the committed cases") {
    for (const auto& c : testing::gradient_cases()) {
      ScoreVector s(c.scores);
      auto p = gaussian_joint(GroundTruth(c.label, 10, c.smoothing), c.perplexity).joint;
      auto z = kl_gradient(p, studentt_joint(s), s);
      auto fd = oracle::kl_gradient_fd(p, c.scores, 1e-5);
      for (std::size_t i = 0; i < 10; ++i) {
        INFO("component " << i << " analytic " << z[i] << " fd " << fd[i]);
        CHECK(testing::close(z[i], fd[i], 1e-5, 1e-8));
      }
    }
  }
  SUBCASE("components sum to zero") {
    std::mt19937_64 rng(10);
    for (int n = 0; n < 100; ++n) {
      const std::size_t k = 2 + n % 15;
      auto s = testing::random_scores(rng, k);
      auto p = gaussian_joint(GroundTruth(n % k, k, 0.05), 1.0 + 0.5 * static_cast<double>(k - 2)).joint;
      auto z = kl_gradient(p, studentt_joint(s), s);
      CHECK(std::abs(std::accumulate(z.values().begin(), z.values().end(), 0.0)) <= 1e-9);
    }
  }
}

TEST_CASE("standardize") {
  SUBCASE("direct arithmetic") {
    auto a = standardize(GradientVector({1, 2, 3}));
    const double s = std::sqrt(2.0 / 3.0);
    CHECK(a[0] == doctest::Approx(-1.0 / s).epsilon(1e-15));
    CHECK(a[1] == 0.0);
    CHECK(a[2] == doctest::Approx(1.0 / s).epsilon(1e-15));
    CHECK(a[2] == doctest::Approx(1.224744871391589).epsilon(1e-15));
    CHECK(a.source_mean() == 2.0);
    CHECK(a.source_stddev() == doctest::Approx(s));
  }
  SUBCASE("idempotent") {
    auto a = standardize(GradientVector({0.3, -7.0, 2.0, 5.5}));
    auto b = standardize(GradientVector({a.values().begin(), a.values().end()}));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  }
  SUBCASE("constant gradient is degenerate") {
    CHECK_THROWS_AS(standardize(GradientVector({5, 5, 5})), DegenerateGradient);
    CHECK_THROWS_AS(standardize(GradientVector({1e-14, -1e-14, 0.0})), DegenerateGradient);
  }
  SUBCASE("zero mean, unit variance, affine invariance") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0), scale(0.01, 50.0);
    for (int n = 0; n < 100; ++n) {
      std::vector<double> z(2 + n % 12);
      for (auto& v : z) v = u(rng);
      auto a = standardize(GradientVector(z));
      double mean = 0.0, var = 0.0;
      for (double v : a.values()) mean += v;
      mean /= static_cast<double>(a.size());
      for (double v : a.values()) var += (v - mean) * (v - mean);
      var /= static_cast<double>(a.size());
      CHECK(std::abs(mean) <= 1e-9);
      CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-9);

      const double m = scale(rng), b = u(rng);
      auto moved = z;
      for (auto& v : moved) v = m * v + b;
      auto a2 = standardize(GradientVector(moved));
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - a2[i]) <= 1e-9);
    }
  }
}
