#include "klsal/klgrad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "klsal/error.hpp"

namespace klsal {

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

GradientVector::GradientVector(std::vector<double> values) : values_(std::move(values)) {
  if (!all_finite(values_)) {
    throw InvalidArgument("gradient contains non-finite values");
  }
}

AlphaVector AlphaVector::from_weights(std::vector<double> values) {
  if (values.empty() || !all_finite(values)) {
    throw InvalidArgument("alpha weights must be nonempty and finite");
  }
  return AlphaVector(std::move(values), 0.0, 1.0);
}

double AlphaVector::l1() const {
  double s = 0.0;
  for (double v : values_) s += std::abs(v);
  return s;
}

double kl_divergence(const AffinityMatrix& p, const AffinityMatrix& q) {
  if (p.classes() != q.classes()) {
    throw ShapeMismatch("kl_divergence: P has " + std::to_string(p.classes()) + " classes, Q has " +
                        std::to_string(q.classes()));
  }
  const auto k = p.classes();
  double c = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double pij = p(i, j);
      c += pij * std::log(pij / q(i, j));
    }
  }
  return c;
}

GradientVector kl_gradient(const AffinityMatrix& p, const AffinityMatrix& q, const ScoreVector& s) {
  if (p.classes() != q.classes() || p.classes() != s.size()) {
    throw ShapeMismatch("kl_gradient: P, Q and scores disagree on class count (" + std::to_string(p.classes()) +
                        ", " + std::to_string(q.classes()) + ", " + std::to_string(s.size()) + ")");
  }
  const auto k = s.size();
  std::vector<double> z(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double diff = s[i] - s[j];
      acc += (p(i, j) - q(i, j)) * diff / (1.0 + diff * diff);
    }
    z[i] = 4.0 * acc;
  }
  return GradientVector(std::move(z));
}

AlphaVector standardize(const GradientVector& z) {
  const auto n = z.size();
  if (n < 2) {
    throw InvalidArgument("standardize needs at least 2 components");
  }
  double mean = 0.0;
  for (double v : z.values()) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : z.values()) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  if (sd < kDegenerateStddev) {
    throw DegenerateGradient("gradient standard deviation " + std::to_string(sd) + " is below 1e-12");
  }
  std::vector<double> alpha(n);
  std::transform(z.values().begin(), z.values().end(), alpha.begin(), [&](double v) { return (v - mean) / sd; });
  return AlphaVector(std::move(alpha), mean, sd);
}

}  // namespace klsal
