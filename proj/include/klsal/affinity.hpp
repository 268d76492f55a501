#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "klsal/tensor.hpp"

namespace klsal {

/// Raw (pre-softmax) class scores, one scalar per class. K >= 2, all finite.
class ScoreVector {
 public:
  explicit ScoreVector(std::vector<double> values);
  static ScoreVector from_tensor(const Tensor& t);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Entries below this are raised to it before renormalization.
inline constexpr double kAffinityFloor = 1e-12;

/// K x K joint-probability matrix over ordered class pairs: symmetric, zero
/// diagonal, off-diagonal entries floored and summing to one.
class AffinityMatrix {
 public:
  /// Floors the off-diagonal entries of `raw`, zeroes the diagonal, and
  /// renormalizes to unit mass. `raw` must be K x K.
  static AffinityMatrix from_unnormalized(std::size_t k, std::vector<double> raw);

  std::size_t classes() const { return k_; }
  double operator()(std::size_t i, std::size_t j) const { return p_[i * k_ + j]; }
  std::span<const double> entries() const { return p_; }
  Tensor to_tensor() const;

 private:
  AffinityMatrix(std::size_t k, std::vector<double> p) : k_(k), p_(std::move(p)) {}

  std::size_t k_ = 0;
  std::vector<double> p_;
};

/// Ground-truth class encoding: one-hot, optionally label-smoothed so that
/// entries are (1 - eps) * onehot + eps / K.
class GroundTruth {
 public:
  GroundTruth(std::size_t label, std::size_t classes, double smoothing = 0.0);

  std::size_t label() const { return label_; }
  double smoothing() const { return smoothing_; }
  std::size_t classes() const { return encoding_.size(); }
  std::span<const double> encoding() const { return encoding_; }

 private:
  std::size_t label_;
  double smoothing_;
  std::vector<double> encoding_;
};

/// d_ij = (k_i - k_j)^2 as a K x K tensor.
Tensor pairwise_sq_dists(std::span<const double> values);
inline Tensor pairwise_sq_dists(const ScoreVector& s) { return pairwise_sq_dists(s.values()); }

/// Student-t joint over raw scores: (1 + d_ij)^-1 normalized over ordered
/// pairs i != j.
AffinityMatrix studentt_joint(const ScoreVector& s);

struct CalibrationOptions {
  double tolerance_bits = 1e-5;
  int max_iter = 64;
};

struct RowCalibration {
  double beta = 1.0;
  double entropy_bits = 0.0;
  /// True when the target was not reached; `beta` is then the bracket
  /// endpoint whose entropy came closest.
  bool clamped = false;
};

struct Calibration {
  std::vector<RowCalibration> rows;
  std::size_t clamped_count() const;
};

/// Per-row Gaussian precision beta_i such that the conditional row
/// p_{j|i} ∝ exp(-beta_i d_ij) has perplexity `target` (entropy within
/// tolerance bits of log2(target)).
///
/// Starts at beta = 1, doubles or halves up to max_iter times to bracket the
/// target entropy, then bisects at most max_iter times. Rows whose target
/// cannot be bracketed are clamped and flagged.
Calibration calibrate_perplexity(const Tensor& sq_dists, double target, const CalibrationOptions& opts = {});

/// Conditional distribution of row `i` at precision `beta` (p_{i|i} = 0).
std::vector<double> conditional_row(const Tensor& sq_dists, std::size_t i, double beta);

/// Shannon entropy in bits of conditional_row(sq_dists, i, beta).
double row_entropy_bits(const Tensor& sq_dists, std::size_t i, double beta);

struct GroundTruthAffinity {
  AffinityMatrix joint;
  Calibration calibration;
};

/// Perplexity-calibrated Gaussian joint over the ground-truth encoding:
/// (p_{j|i} + p_{i|j}) / 2K, floored and renormalized.
GroundTruthAffinity gaussian_joint(const GroundTruth& g, double target, const CalibrationOptions& opts = {});

}  // namespace klsal
