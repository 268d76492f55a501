// klsal: KL-divergence-gradient saliency maps from exported activations.
//
//   klsal explain --features F.npy --logits L.npy [--image I.png] --label N --out-dir D
//   klsal explain --bundle DIR --label N --out-dir D
//   klsal compare --bundle-a DIR --bundle-b DIR --label N --out-dir D
//   klsal forward --manifest M.json --image I.png --out-dir D
//   klsal forward-explain --manifest M.json --image I.png --label N --out-dir D
//
// Exit codes: 0 success, 2 input/shape errors, 3 degenerate gradient.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "klsal/io.hpp"
#include "klsal/pipeline.hpp"

namespace fs = std::filesystem;
using namespace klsal;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;

struct CommonFlags {
  std::size_t label = 0;
  std::string mode = "literal";
  double perplexity = kDefaultPerplexity;
  double tau = 0.5;
  std::string colormap = "jet";
  double blend = 0.5;
  double smoothing = 0.0;
  std::string out_dir;

  ExplainOptions options() const {
    ExplainOptions o;
    o.mode = parse_combine_mode(mode);
    o.perplexity = perplexity;
    o.tau = tau;
    o.colormap = parse_colormap(colormap);
    o.blend = blend;
    o.smoothing = smoothing;
    return o;
  }
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_label = true) {
  if (with_label) cmd->add_option("--label", f.label, "Ground-truth class index")->required();
  cmd->add_option("--mode", f.mode, "Feature-map weighting: literal or matched")
      ->check(CLI::IsMember({"literal", "matched"}))
      ->capture_default_str();
  cmd->add_option("--perplexity", f.perplexity, "Ground-truth perplexity, clamped to [1, K-1]")->capture_default_str();
  cmd->add_option("--tau", f.tau, "Salient-area threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--colormap", f.colormap, "Heatmap colormap")
      ->check(CLI::IsMember({"jet", "gray"}))
      ->capture_default_str();
  cmd->add_option("--blend", f.blend, "Overlay blend factor")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--smoothing", f.smoothing, "Label smoothing mass for the ground truth")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--out-dir", f.out_dir, "Output directory")->required();
}

void print_warnings(const ExplainResult& r, const std::string& prefix = "") {
  for (const auto& w : r.warnings) std::cerr << "warning: " << prefix << w << "\n";
}

int finish(const ExplainResult& r, const fs::path& out_dir) {
  write_outputs(r, out_dir);
  return r.metrics.degenerate ? kExitDegenerate : 0;
}

tinycnn::ForwardResult run_forward(const std::string& manifest, const std::string& image) {
  auto model = [&] {
    try {
      return tinycnn::Model::load(manifest);
    } catch (const Error& e) {
      throw StageError("model", e.what());
    }
  }();
  auto img = [&] {
    try {
      return png::load(image);
    } catch (const Error& e) {
      throw StageError("load", e.what());
    }
  }();
  try {
    return model.forward(png::to_tensor(img));
  } catch (const Error& e) {
    throw StageError("forward", e.what());
  }
}

nlohmann::ordered_json forward_meta(const std::string& manifest, const tinycnn::ForwardResult& fwd) {
  nlohmann::ordered_json meta;
  meta["network"] = "tinycnn";
  meta["layer"] = "layer_" + std::to_string(tinycnn::Model::load(manifest).feature_layer());
  meta["features_shape"] = fwd.features.tensor().shape();
  meta["logits_shape"] = {fwd.logits.size()};
  return meta;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KL-divergence-gradient saliency maps"};
  app.require_subcommand(1);

  CommonFlags explain_flags;
  std::string features, logits, image, bundle;
  auto* explain_cmd = app.add_subcommand("explain", "Saliency map for one activation bundle");
  explain_cmd->add_option("--features", features, "M x H x W feature maps (NPY)");
  explain_cmd->add_option("--logits", logits, "K raw class scores (NPY)");
  explain_cmd->add_option("--image", image, "Base image for the overlay (PNG)");
  explain_cmd->add_option("--bundle", bundle, "Bundle directory (features.npy, logits.npy, image.png, meta.json)")
      ->excludes("--features", "--logits", "--image");
  add_common(explain_cmd, explain_flags);

  CommonFlags compare_flags;
  std::string bundle_a, bundle_b;
  auto* compare_cmd = app.add_subcommand("compare", "Explain two bundles and compare their salient areas");
  compare_cmd->add_option("--bundle-a", bundle_a, "First bundle directory")->required();
  compare_cmd->add_option("--bundle-b", bundle_b, "Second bundle directory")->required();
  add_common(compare_cmd, compare_flags);

  std::string manifest, fwd_image, fwd_out;
  auto* forward_cmd = app.add_subcommand("forward", "Run the tiny CNN and write an activation bundle");
  forward_cmd->add_option("--manifest", manifest, "Model manifest (JSON)")->required();
  forward_cmd->add_option("--image", fwd_image, "Input image (PNG)")->required();
  forward_cmd->add_option("--out-dir", fwd_out, "Bundle output directory")->required();

  CommonFlags fe_flags;
  std::string fe_manifest, fe_image;
  auto* fe_cmd = app.add_subcommand("forward-explain", "Run the tiny CNN then explain its prediction");
  fe_cmd->add_option("--manifest", fe_manifest, "Model manifest (JSON)")->required();
  fe_cmd->add_option("--image", fe_image, "Input image (PNG)")->required();
  add_common(fe_cmd, fe_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*explain_cmd) {
      auto opts = explain_flags.options();
      ActivationBundle b = [&] {
        if (!bundle.empty()) return load_bundle_dir(bundle);
        if (features.empty() || logits.empty()) {
          throw StageError("load", "explain needs --bundle or both --features and --logits");
        }
        return load_bundle(features, logits, image.empty() ? std::nullopt : std::optional<fs::path>(image));
      }();
      auto r = explain(b, explain_flags.label, opts);
      print_warnings(r);
      return finish(r, explain_flags.out_dir);
    }

    if (*compare_cmd) {
      auto opts = compare_flags.options();
      auto load_side = [](const std::string& dir, const char* name) {
        try {
          return load_bundle_dir(dir);
        } catch (const StageError& e) {
          throw StageError(e.stage(), std::string("bundle ") + name + ": " + e.what(), e.exit_code());
        }
      };
      auto run_side = [&](const ActivationBundle& b, const char* name) {
        try {
          return explain(b, compare_flags.label, opts);
        } catch (const StageError& e) {
          throw StageError(e.stage(), std::string("bundle ") + name + ": " + e.what(), e.exit_code());
        }
      };
      auto a = load_side(bundle_a, "A");
      auto b = load_side(bundle_b, "B");
      Comparison cmp{run_side(a, "A"), run_side(b, "B")};
      print_warnings(cmp.a, "bundle A: ");
      print_warnings(cmp.b, "bundle B: ");
      const fs::path out = compare_flags.out_dir;
      write_outputs(cmp.a, out / "a");
      write_outputs(cmp.b, out / "b");
      io::write_file_atomic(out / "comparison.json", cmp.to_json(a.meta, b.meta).dump(2) + "\n");
      return cmp.a.metrics.degenerate || cmp.b.metrics.degenerate ? kExitDegenerate : 0;
    }

    if (*forward_cmd) {
      auto fwd = run_forward(manifest, fwd_image);
      write_bundle(fwd, forward_meta(manifest, fwd), fwd_out);
      io::write_file_atomic(fs::path(fwd_out) / "image.png", io::read_file(fwd_image));
      return 0;
    }

    if (*fe_cmd) {
      auto opts = fe_flags.options();
      auto fwd = run_forward(fe_manifest, fe_image);
      ActivationBundle b{std::move(fwd.features), std::move(fwd.logits), png::load(fe_image)};
      auto r = explain(b, fe_flags.label, opts);
      print_warnings(r);
      return finish(r, fe_flags.out_dir);
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
