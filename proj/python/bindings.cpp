#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "klsal/affinity.hpp"
#include "klsal/error.hpp"
#include "klsal/klgrad.hpp"
#include "klsal/npy.hpp"
#include "klsal/pipeline.hpp"
#include "klsal/saliency.hpp"

namespace py = pybind11;
using namespace klsal;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const F64Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<std::uint8_t> to_array(const RgbImage& img) {
  py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(img.height), static_cast<py::ssize_t>(img.width),
                                 py::ssize_t{3}});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

RgbImage to_rgb(const U8Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw ShapeMismatch("expected an H x W x 3 uint8 array");
  return {static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
          std::vector<std::uint8_t>(a.data(), a.data() + a.size())};
}

AffinityMatrix to_affinity(const F64Array& a) {
  auto t = to_tensor(a);
  if (t.rank() != 2 || t.dim(0) != t.dim(1)) throw ShapeMismatch("affinity matrix must be square");
  return AffinityMatrix::from_unnormalized(t.dim(0), t.values());
}

ScoreVector to_scores(const F64Array& a) { return ScoreVector::from_tensor(to_tensor(a)); }

py::dict metrics_dict(const MetricsReport& m) {
  return py::module_::import("json").attr("loads")(m.to_json().dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "KL-divergence-gradient saliency maps";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<MalformedContainer>(m, "MalformedContainer", base.ptr());
  py::register_exception<UnsupportedDType>(m, "UnsupportedDType", base.ptr());
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch", base.ptr());
  py::register_exception<TargetOutOfRange>(m, "TargetOutOfRange", base.ptr());
  py::register_exception<DegenerateGradient>(m, "DegenerateGradient", base.ptr());
  py::register_exception<ValueOutOfRange>(m, "ValueOutOfRange", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<StageError>(m, "StageError", base.ptr());

  m.def(
      "npy_read",
      [](py::bytes data) {
        std::string_view s = data;
        return to_array(npy::read(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())));
      },
      py::arg("data"), "Parse NPY v1.0 bytes (<f4 or <f8) into a float64 array.");
  m.def(
      "npy_write",
      [](const F64Array& a) {
        auto bytes = npy::write(to_tensor(a));
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("array"));

  m.def("minmax_normalize", [](const F64Array& a) { return to_array(minmax_normalize(to_tensor(a))); });
  m.def(
      "resize_bilinear",
      [](const F64Array& a, std::size_t h, std::size_t w) { return to_array(resize_bilinear(to_tensor(a), h, w)); },
      py::arg("map"), py::arg("height"), py::arg("width"));

  m.def("pairwise_sq_dists", [](const F64Array& s) { return to_array(pairwise_sq_dists(to_scores(s))); });
  m.def("studentt_joint", [](const F64Array& s) { return to_array(studentt_joint(to_scores(s)).to_tensor()); },
        py::arg("scores"));
  m.def(
      "calibrate_perplexity",
      [](const F64Array& d, double target, double tol, int max_iter) {
        auto cal = calibrate_perplexity(to_tensor(d), target, {tol, max_iter});
        std::vector<double> betas, entropies;
        std::vector<bool> clamped;
        for (const auto& r : cal.rows) {
          betas.push_back(r.beta);
          entropies.push_back(r.entropy_bits);
          clamped.push_back(r.clamped);
        }
        return py::make_tuple(to_array(betas), to_array(entropies), clamped);
      },
      py::arg("sq_dists"), py::arg("target"), py::arg("tol") = 1e-5, py::arg("max_iter") = 64,
      "Per-row Gaussian precisions; returns (betas, entropies_bits, clamped_flags).");
  m.def(
      "gaussian_joint",
      [](std::size_t label, std::size_t classes, double target, double smoothing) {
        auto g = gaussian_joint(GroundTruth(label, classes, smoothing), target);
        return py::make_tuple(to_array(g.joint.to_tensor()), g.calibration.clamped_count());
      },
      py::arg("label"), py::arg("classes"), py::arg("target"), py::arg("smoothing") = 0.0,
      "Ground-truth joint; returns (P, clamped_row_count).");

  m.def("kl_divergence", [](const F64Array& p, const F64Array& q) {
    return kl_divergence(to_affinity(p), to_affinity(q));
  });
  m.def(
      "kl_gradient",
      [](const F64Array& p, const F64Array& q, const F64Array& s) {
        return to_array(kl_gradient(to_affinity(p), to_affinity(q), to_scores(s)).values());
      },
      py::arg("p"), py::arg("q"), py::arg("scores"));
  m.def("standardize", [](const F64Array& z) {
    auto t = to_tensor(z);
    return to_array(standardize(GradientVector(t.values())).values());
  });

  m.def(
      "combine",
      [](const F64Array& features, const F64Array& alpha, const std::string& mode) {
        auto a = to_tensor(alpha);
        return to_array(
            combine(FeatureStack(to_tensor(features)), AlphaVector::from_weights(a.values()), parse_combine_mode(mode))
                .raw);
      },
      py::arg("features"), py::arg("alpha"), py::arg("mode") = "literal");
  m.def(
      "finalize_map",
      [](const F64Array& raw, std::size_t h, std::size_t w) {
        auto t = to_tensor(raw);
        return to_array(finalize_map(SaliencyMap{t, minmax_normalize(t), CombineMode::literal}, h, w));
      },
      py::arg("raw"), py::arg("height"), py::arg("width"));
  m.def(
      "render",
      [](const F64Array& heat, const std::string& cmap) {
        return to_array(render(to_tensor(heat), parse_colormap(cmap)).image);
      },
      py::arg("heat"), py::arg("colormap") = "jet");
  m.def(
      "overlay",
      [](const U8Array& base, const U8Array& heat, double blend) {
        return to_array(overlay(to_rgb(base), RenderedHeatmap{to_rgb(heat), Colormap::jet, 0.0}, blend).image);
      },
      py::arg("image"), py::arg("heatmap"), py::arg("blend") = 0.5);
  m.def(
      "salient_area_fraction", [](const F64Array& heat, double tau) { return salient_area_fraction(to_tensor(heat), tau); },
      py::arg("heat"), py::arg("tau") = 0.5);

  m.def(
      "explain",
      [](const F64Array& features, const F64Array& logits, std::size_t label, const std::string& mode,
         double perplexity, double tau, const std::string& colormap, double smoothing) {
        ActivationBundle bundle{FeatureStack(to_tensor(features)), to_scores(logits), std::nullopt};
        ExplainOptions opts;
        opts.mode = parse_combine_mode(mode);
        opts.perplexity = perplexity;
        opts.tau = tau;
        opts.colormap = parse_colormap(colormap);
        opts.smoothing = smoothing;
        auto r = explain(bundle, label, opts);
        py::dict out;
        out["metrics"] = metrics_dict(r.metrics);
        out["heat"] = r.heat ? py::object(to_array(*r.heat)) : py::none();
        out["heatmap"] = r.heatmap ? py::object(to_array(r.heatmap->image)) : py::none();
        out["warnings"] = r.warnings;
        return out;
      },
      py::arg("features"), py::arg("logits"), py::arg("label"), py::arg("mode") = "literal",
      py::arg("perplexity") = kDefaultPerplexity, py::arg("tau") = 0.5, py::arg("colormap") = "jet",
      py::arg("smoothing") = 0.0,
      "Run the full pipeline on in-memory activations. Returns a dict with metrics, heat, heatmap, warnings.");
}
