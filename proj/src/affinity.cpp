#include "klsal/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "klsal/error.hpp"

namespace klsal {

ScoreVector::ScoreVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw InvalidArgument("score vector needs at least 2 classes, got " + std::to_string(values_.size()));
  }
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
    throw InvalidArgument("score vector contains non-finite values");
  }
}

ScoreVector ScoreVector::from_tensor(const Tensor& t) {
  if (t.rank() != 1) {
    throw ShapeMismatch("logits must be 1-D, got shape " + shape_string(t.shape()));
  }
  return ScoreVector(t.values());
}

AffinityMatrix AffinityMatrix::from_unnormalized(std::size_t k, std::vector<double> raw) {
  if (raw.size() != k * k) {
    throw ShapeMismatch("affinity matrix needs " + std::to_string(k * k) + " entries, got " +
                        std::to_string(raw.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      auto& v = raw[i * k + j];
      v = i == j ? 0.0 : std::max(v, kAffinityFloor);
      total += v;
    }
  }
  for (auto& v : raw) v /= total;
  return AffinityMatrix(k, std::move(raw));
}

Tensor AffinityMatrix::to_tensor() const { return Tensor({k_, k_}, p_); }

GroundTruth::GroundTruth(std::size_t label, std::size_t classes, double smoothing)
    : label_(label), smoothing_(smoothing) {
  if (classes < 2) {
    throw InvalidArgument("ground truth needs at least 2 classes");
  }
  if (label >= classes) {
    throw InvalidArgument("label " + std::to_string(label) + " out of range for " + std::to_string(classes) +
                          " classes");
  }
  if (!(smoothing >= 0.0 && smoothing <= 1.0)) {
    throw InvalidArgument("label smoothing must lie in [0, 1]");
  }
  const double base = smoothing / static_cast<double>(classes);
  encoding_.assign(classes, base);
  encoding_[label] = (1.0 - smoothing) + base;
}

Tensor pairwise_sq_dists(std::span<const double> values) {
  const auto k = values.size();
  std::vector<double> d(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double diff = values[i] - values[j];
      d[i * k + j] = i == j ? 0.0 : diff * diff;
    }
  }
  return Tensor({k, k}, std::move(d));
}

AffinityMatrix studentt_joint(const ScoreVector& s) {
  const auto k = s.size();
  const auto d = pairwise_sq_dists(s);
  std::vector<double> num(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j) num[i * k + j] = 1.0 / (1.0 + d.at(i, j));
    }
  }
  return AffinityMatrix::from_unnormalized(k, std::move(num));
}

namespace {

void check_sq_dists(const Tensor& d) {
  if (d.rank() != 2 || d.dim(0) != d.dim(1)) {
    throw ShapeMismatch("distance matrix must be square, got " + shape_string(d.shape()));
  }
  if (d.dim(0) < 2) {
    throw ShapeMismatch("distance matrix needs at least 2 rows");
  }
}

// Unnormalized weights exp(-beta (d_ij - min_j d_ij)), shifted for stability.
// Returns the normalizer and fills `w` (w[i] = 0).
double row_weights(const Tensor& d, std::size_t i, double beta, std::vector<double>& w) {
  const auto k = d.dim(0);
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    if (j != i) dmin = std::min(dmin, d.at(i, j));
  }
  w.assign(k, 0.0);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j == i) continue;
    w[j] = std::exp(-beta * (d.at(i, j) - dmin));
    sum += w[j];
  }
  return sum;
}

}  // namespace

std::vector<double> conditional_row(const Tensor& sq_dists, std::size_t i, double beta) {
  check_sq_dists(sq_dists);
  std::vector<double> w;
  const double sum = row_weights(sq_dists, i, beta, w);
  for (auto& v : w) v /= sum;
  return w;
}

double row_entropy_bits(const Tensor& sq_dists, std::size_t i, double beta) {
  check_sq_dists(sq_dists);
  std::vector<double> w;
  const double sum = row_weights(sq_dists, i, beta, w);
  // H = log S + beta * E[d - dmin], in bits. Exact for equidistant rows.
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (j != i) dmin = std::min(dmin, sq_dists.at(i, j));
  }
  double spread = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (j != i) spread += w[j] * (sq_dists.at(i, j) - dmin);
  }
  const double h = std::log2(sum) + beta * spread / (sum * std::numbers::ln2);
  return std::max(h, 0.0);
}

std::size_t Calibration::clamped_count() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.clamped; }));
}

namespace {

RowCalibration calibrate_row(const Tensor& d, std::size_t i, double target_bits, const CalibrationOptions& opts) {
  auto eval = [&](double beta) { return row_entropy_bits(d, i, beta); };

  RowCalibration best{1.0, eval(1.0), false};
  auto consider = [&](double beta, double h) {
    if (std::abs(h - target_bits) < std::abs(best.entropy_bits - target_bits)) best = {beta, h, false};
  };
  if (std::abs(best.entropy_bits - target_bits) <= opts.tolerance_bits) return best;

  // Entropy is non-increasing in beta: too high an entropy needs a larger beta.
  const bool grow = best.entropy_bits > target_bits;
  double lo = 0.0, hi = 0.0;
  double beta = 1.0;
  bool bracketed = false;
  for (int n = 0; n < opts.max_iter; ++n) {
    const double next = grow ? beta * 2.0 : beta * 0.5;
    const double h = eval(next);
    consider(next, h);
    if (std::abs(h - target_bits) <= opts.tolerance_bits) return best;
    if (grow ? h < target_bits : h > target_bits) {
      lo = grow ? beta : next;
      hi = grow ? next : beta;
      bracketed = true;
      break;
    }
    beta = next;
  }
  if (!bracketed) {
    best.clamped = true;
    return best;
  }

  for (int n = 0; n < opts.max_iter; ++n) {
    const double mid = 0.5 * (lo + hi);
    const double h = eval(mid);
    consider(mid, h);
    if (std::abs(h - target_bits) <= opts.tolerance_bits) return best;
    if (h > target_bits) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  best.clamped = true;
  return best;
}

}  // namespace

Calibration calibrate_perplexity(const Tensor& sq_dists, double target, const CalibrationOptions& opts) {
  check_sq_dists(sq_dists);
  const auto k = sq_dists.dim(0);
  if (!(target >= 1.0 && target <= static_cast<double>(k - 1))) {
    throw TargetOutOfRange("perplexity " + std::to_string(target) + " outside [1, " + std::to_string(k - 1) + "]");
  }
  const double target_bits = std::log2(target);
  Calibration out;
  out.rows.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.rows.push_back(calibrate_row(sq_dists, i, target_bits, opts));
  }
  return out;
}

GroundTruthAffinity gaussian_joint(const GroundTruth& g, double target, const CalibrationOptions& opts) {
  const auto k = g.classes();
  const auto d = pairwise_sq_dists(g.encoding());
  auto calibration = calibrate_perplexity(d, target, opts);

  std::vector<double> cond(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    auto row = conditional_row(d, i, calibration.rows[i].beta);
    std::copy(row.begin(), row.end(), cond.begin() + static_cast<std::ptrdiff_t>(i * k));
  }
  std::vector<double> joint(k * k, 0.0);
  const double denom = 2.0 * static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j) joint[i * k + j] = (cond[i * k + j] + cond[j * k + i]) / denom;
    }
  }
  return {AffinityMatrix::from_unnormalized(k, std::move(joint)), std::move(calibration)};
}

}  // namespace klsal
