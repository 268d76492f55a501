#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "klsal/error.hpp"
#include "klsal/png.hpp"
#include "klsal/saliency.hpp"
#include "klsal/tinycnn.hpp"
#include "json.hpp"

namespace klsal {

/// A failure attributed to one pipeline stage ("load", "affinity",
/// "combine", ...). `exit_code` follows the CLI contract: 2 for input and
/// shape errors, 3 for a degenerate gradient.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, int exit_code = 2)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)), exit_code_(exit_code) {}

  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

inline constexpr double kDefaultPerplexity = 30.0;

struct ExplainOptions {
  CombineMode mode = CombineMode::literal;
  double perplexity = kDefaultPerplexity;
  double tau = 0.5;
  Colormap colormap = Colormap::jet;
  double blend = 0.5;
  /// Label-smoothing mass for the ground-truth encoding.
  double smoothing = 0.0;
};

/// Feature maps and logits exported from some network, plus an optional
/// base image for overlays.
struct ActivationBundle {
  FeatureStack features;
  ScoreVector logits;
  std::optional<png::Image> image;
  /// Contents of meta.json when the bundle came from a directory.
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
};

/// Loads features (M x H x W) and logits (K) NPY files and an optional PNG.
ActivationBundle load_bundle(const std::filesystem::path& features, const std::filesystem::path& logits,
                             const std::optional<std::filesystem::path>& image = std::nullopt);

/// Loads features.npy, logits.npy and, when present, image.png and meta.json
/// from a bundle directory.
ActivationBundle load_bundle_dir(const std::filesystem::path& dir);

struct MetricsReport {
  std::size_t label = 0;
  std::size_t classes = 0;
  std::size_t feature_maps = 0;
  std::size_t map_height = 0;
  std::size_t map_width = 0;
  std::size_t heatmap_height = 0;
  std::size_t heatmap_width = 0;
  CombineMode mode = CombineMode::literal;
  Colormap colormap = Colormap::jet;
  double perplexity_requested = kDefaultPerplexity;
  double perplexity = kDefaultPerplexity;
  double smoothing = 0.0;
  std::size_t clamped_rows = 0;
  double kl_value = 0.0;
  double alpha_l1 = 0.0;
  double tau = 0.5;
  double salient_area_fraction = 0.0;
  bool degenerate = false;

  nlohmann::ordered_json to_json() const;
};

struct ExplainResult {
  MetricsReport metrics;
  /// Finalized map in [0, 1]; absent when the gradient was degenerate.
  std::optional<Tensor> heat;
  std::optional<RenderedHeatmap> heatmap;
  std::optional<RenderedHeatmap> overlay;
  std::vector<std::string> warnings;
};

/// Clamps a perplexity request into [1, K - 1].
double clamp_perplexity(double requested, std::size_t classes);

/// Scores -> Student-t joint; label -> calibrated Gaussian joint; KL
/// gradient -> alpha -> saliency map -> finalized and rendered heatmap.
///
/// A degenerate gradient is reported through `metrics.degenerate` rather
/// than thrown; every other failure raises a StageError.
ExplainResult explain(const ActivationBundle& bundle, std::size_t label, const ExplainOptions& opts);

/// Writes heatmap.png, overlay.png (when present) and metrics.json into
/// `out_dir`, each atomically.
void write_outputs(const ExplainResult& result, const std::filesystem::path& out_dir);

/// Writes features.npy, logits.npy and meta.json for a forward pass.
void write_bundle(const tinycnn::ForwardResult& fwd, const nlohmann::ordered_json& meta,
                  const std::filesystem::path& out_dir);

struct Comparison {
  ExplainResult a;
  ExplainResult b;
  nlohmann::ordered_json to_json(const nlohmann::ordered_json& meta_a, const nlohmann::ordered_json& meta_b) const;
  /// fraction(a) / fraction(b); 1 when both are zero, empty when only b is.
  std::optional<double> ratio() const;
};

}  // namespace klsal
