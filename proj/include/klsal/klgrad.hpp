#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "klsal/affinity.hpp"

namespace klsal {

/// dC/dk: gradient of KL(P || Q) with respect to the raw class scores.
class GradientVector {
 public:
  explicit GradientVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Gradient standardized to zero mean and unit population variance.
class AlphaVector {
 public:
  /// Wraps weights as given, with no standardization. Used for hand-built
  /// weights (selector vectors and the like).
  static AlphaVector from_weights(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  /// Mean and population standard deviation of the source gradient; zero
  /// and one for hand-built weights.
  double source_mean() const { return mean_; }
  double source_stddev() const { return stddev_; }

  /// Sum of |alpha_j|.
  double l1() const;

 private:
  friend AlphaVector standardize(const GradientVector& z);
  AlphaVector(std::vector<double> values, double mean, double stddev)
      : values_(std::move(values)), mean_(mean), stddev_(stddev) {}

  std::vector<double> values_;
  double mean_ = 0.0;
  double stddev_ = 1.0;
};

/// Sum over i != j of p_ij ln(p_ij / q_ij).
double kl_divergence(const AffinityMatrix& p, const AffinityMatrix& q);

/// z_i = 4 sum_{j != i} (p_ij - q_ij)(k_i - k_j) / (1 + (k_i - k_j)^2),
/// exact when q = studentt_joint(s).
GradientVector kl_gradient(const AffinityMatrix& p, const AffinityMatrix& q, const ScoreVector& s);

/// Spread below which a gradient is treated as constant.
inline constexpr double kDegenerateStddev = 1e-12;

/// (z - mean(z)) / popstd(z). Throws DegenerateGradient when popstd < 1e-12.
AlphaVector standardize(const GradientVector& z);

}  // namespace klsal
