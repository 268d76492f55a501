#include "klsal/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "klsal/io.hpp"
#include "klsal/npy.hpp"

namespace klsal {

using nlohmann::ordered_json;

namespace {

// Runs `fn`, re-raising library errors as a StageError named `stage`.
template <class Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what());
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

ActivationBundle load_bundle(const std::filesystem::path& features, const std::filesystem::path& logits,
                             const std::optional<std::filesystem::path>& image) {
  return in_stage("load", [&] {
    auto f = npy::load(features);
    if (f.rank() != 3) {
      throw ShapeMismatch("features '" + features.string() + "' must be 3-D (M x H x W), got " +
                          shape_string(f.shape()));
    }
    auto l = npy::load(logits);
    if (l.rank() != 1) {
      throw ShapeMismatch("logits '" + logits.string() + "' must be 1-D, got " + shape_string(l.shape()));
    }
    std::optional<png::Image> img;
    if (image) img = png::load(*image);
    return ActivationBundle{FeatureStack(std::move(f)), ScoreVector::from_tensor(l), std::move(img)};
  });
}

ActivationBundle load_bundle_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw StageError("load", "bundle directory '" + dir.string() + "' does not exist");
  }
  std::optional<std::filesystem::path> image;
  if (std::filesystem::exists(dir / "image.png")) image = dir / "image.png";
  auto bundle = load_bundle(dir / "features.npy", dir / "logits.npy", image);
  if (std::filesystem::exists(dir / "meta.json")) {
    bundle.meta = in_stage("load", [&] {
      auto bytes = io::read_file(dir / "meta.json");
      try {
        return ordered_json::parse(bytes.begin(), bytes.end());
      } catch (const nlohmann::json::exception& e) {
        throw MalformedContainer("meta.json in '" + dir.string() + "' is not valid JSON: " + e.what());
      }
    });
  }
  return bundle;
}

ordered_json MetricsReport::to_json() const {
  ordered_json j;
  j["label"] = label;
  j["classes"] = classes;
  j["feature_maps"] = feature_maps;
  j["map_shape"] = {map_height, map_width};
  j["heatmap_shape"] = {heatmap_height, heatmap_width};
  j["mode"] = std::string(to_string(mode));
  j["colormap"] = std::string(to_string(colormap));
  j["perplexity_requested"] = perplexity_requested;
  j["perplexity"] = perplexity;
  j["smoothing"] = smoothing;
  j["clamped_rows"] = clamped_rows;
  j["kl_value"] = kl_value;
  j["alpha_l1"] = alpha_l1;
  j["tau"] = tau;
  j["salient_area_fraction"] = salient_area_fraction;
  j["degenerate"] = degenerate;
  return j;
}

double clamp_perplexity(double requested, std::size_t classes) {
  return std::clamp(requested, 1.0, static_cast<double>(classes - 1));
}

ExplainResult explain(const ActivationBundle& bundle, std::size_t label, const ExplainOptions& opts) {
  const auto& scores = bundle.logits;
  const auto k = scores.size();
  ExplainResult result;
  auto& m = result.metrics;
  m.label = label;
  m.classes = k;
  m.feature_maps = bundle.features.count();
  m.map_height = bundle.features.height();
  m.map_width = bundle.features.width();
  m.mode = opts.mode;
  m.colormap = opts.colormap;
  m.perplexity_requested = opts.perplexity;
  m.smoothing = opts.smoothing;
  m.tau = opts.tau;

  in_stage("options", [&] {
    if (label >= k) {
      throw InvalidArgument("label " + std::to_string(label) + " out of range for " + std::to_string(k) + " classes");
    }
    if (!std::isfinite(opts.perplexity)) throw InvalidArgument("perplexity must be finite");
    if (!(opts.tau >= 0.0 && opts.tau <= 1.0)) throw InvalidArgument("tau must lie in [0, 1]");
    if (!(opts.blend >= 0.0 && opts.blend <= 1.0)) throw InvalidArgument("blend must lie in [0, 1]");
  });

  m.perplexity = clamp_perplexity(opts.perplexity, k);
  if (m.perplexity != opts.perplexity) {
    result.warnings.push_back("perplexity " + format_double(opts.perplexity) + " clamped to " +
                              format_double(m.perplexity) + " for " + std::to_string(k) + " classes");
  }

  auto [q, truth] = in_stage("affinity", [&] {
    return std::pair(studentt_joint(scores), gaussian_joint(GroundTruth(label, k, opts.smoothing), m.perplexity));
  });
  m.clamped_rows = truth.calibration.clamped_count();
  if (m.clamped_rows > 0) {
    result.warnings.push_back(std::to_string(m.clamped_rows) + " ground-truth row(s) could not reach perplexity " +
                              format_double(m.perplexity) + "; bandwidths clamped");
  }

  auto z = in_stage("gradient", [&] {
    m.kl_value = kl_divergence(truth.joint, q);
    return kl_gradient(truth.joint, q, scores);
  });

  std::optional<AlphaVector> alpha;
  try {
    alpha = standardize(z);
  } catch (const DegenerateGradient& e) {
    m.degenerate = true;
    result.warnings.push_back(std::string("[standardize] ") + e.what());
    return result;
  } catch (const Error& e) {
    throw StageError("standardize", e.what());
  }
  m.alpha_l1 = alpha->l1();

  auto map = in_stage("combine", [&] { return combine(bundle.features, *alpha, opts.mode); });

  const auto out_h = bundle.image ? bundle.image->height : m.map_height;
  const auto out_w = bundle.image ? bundle.image->width : m.map_width;
  result.heat = in_stage("finalize", [&] { return finalize_map(map, out_h, out_w); });
  m.heatmap_height = out_h;
  m.heatmap_width = out_w;
  m.salient_area_fraction = salient_area_fraction(*result.heat, opts.tau);

  result.heatmap = in_stage("render", [&] { return render(*result.heat, opts.colormap); });
  if (bundle.image) {
    result.overlay = in_stage("overlay", [&] { return overlay(png::to_rgb(*bundle.image), *result.heatmap, opts.blend); });
  }
  return result;
}

void write_outputs(const ExplainResult& result, const std::filesystem::path& out_dir) {
  in_stage("write", [&] {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
    if (result.heatmap) png::save_rgb(out_dir / "heatmap.png", result.heatmap->image);
    if (result.overlay) png::save_rgb(out_dir / "overlay.png", result.overlay->image);
    io::write_file_atomic(out_dir / "metrics.json", result.metrics.to_json().dump(2) + "\n");
  });
}

void write_bundle(const tinycnn::ForwardResult& fwd, const ordered_json& meta, const std::filesystem::path& out_dir) {
  in_stage("write", [&] {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
    npy::save(out_dir / "features.npy", fwd.features.tensor());
    npy::save(out_dir / "logits.npy", Tensor({fwd.logits.size()}, {fwd.logits.values().begin(), fwd.logits.values().end()}));
    io::write_file_atomic(out_dir / "meta.json", meta.dump(2) + "\n");
  });
}

std::optional<double> Comparison::ratio() const {
  const double fa = a.metrics.salient_area_fraction;
  const double fb = b.metrics.salient_area_fraction;
  if (fb > 0.0) return fa / fb;
  if (fa == 0.0) return 1.0;
  return std::nullopt;
}

ordered_json Comparison::to_json(const ordered_json& meta_a, const ordered_json& meta_b) const {
  auto side = [](const ExplainResult& r, const ordered_json& meta) {
    ordered_json j;
    j["network"] = meta.value("network", "");
    j["layer"] = meta.value("layer", "");
    j["salient_area_fraction"] = r.metrics.salient_area_fraction;
    j["degenerate"] = r.metrics.degenerate;
    j["metrics"] = r.metrics.to_json();
    return j;
  };
  ordered_json j;
  j["label"] = a.metrics.label;
  j["tau"] = a.metrics.tau;
  j["a"] = side(a, meta_a);
  j["b"] = side(b, meta_b);
  const auto r = ratio();
  j["ratio"] = r ? ordered_json(*r) : ordered_json(nullptr);
  return j;
}

}  // namespace klsal
