#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "g2m/error.hpp"
#include "g2m/features.hpp"
#include "g2m/g2mf.hpp"
#include "g2m/grid_gen.hpp"
#include "g2m/harness.hpp"
#include "g2m/metrics.hpp"
#include "g2m/parser.hpp"
#include "g2m/patch_geometry.hpp"
#include "g2m/png_io.hpp"
#include "g2m/probe.hpp"
#include "g2m/prompt.hpp"
#include "g2m/report.hpp"

namespace py = pybind11;
using namespace g2m;

namespace {

using Rows = std::vector<std::vector<int>>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Rows& rows) { return Matrix::from_rows(rows); }

py::array_t<std::uint8_t> image_to_array(const RgbImage& img) {
  py::array_t<std::uint8_t> out({img.height, img.width, 3});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

RgbImage array_to_image(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw ShapeError("expected an H x W x 3 uint8 array");
  RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
  return img;
}

py::array_t<float> tensor_to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
  py::array_t<float> out(shape);
  std::copy(t.values.begin(), t.values.end(), out.mutable_data());
  return out;
}

Tensor array_to_tensor(const FloatArray& a) {
  Tensor t;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) t.dims.push_back(static_cast<std::uint32_t>(a.shape(i)));
  t.values.assign(a.data(), a.data() + a.size());
  return t;
}

FeatureMap array_to_map(const FloatArray& a) {
  if (a.ndim() != 3) throw ShapeError("expected a d x h x w array");
  FeatureMap fm(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), fm.values.begin());
  return fm;
}

py::array_t<float> map_to_array(const FeatureMap& fm) {
  py::array_t<float> out({fm.d, fm.h, fm.w});
  std::copy(fm.values.begin(), fm.values.end(), out.mutable_data());
  return out;
}

py::dict outcome_to_dict(const ParseOutcome& out) {
  py::dict d;
  d["ok"] = out.ok();
  if (out.ok()) {
    d["stage"] = std::string(to_string(out.stage));
    d["matrix"] = out.matrix->to_rows();
  } else {
    d["failure"] = std::string(to_string(out.failure));
    d["matrix"] = py::none();
  }
  return d;
}

Prediction to_prediction_arg(const std::optional<Rows>& rows) {
  if (!rows) return std::nullopt;
  return Matrix::from_rows(*rows);
}

PatchConfig patch_config(int image_size, int patch) {
  PatchConfig cfg{image_size, patch};
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grid-to-matrix benchmark toolkit";

  static py::exception<Error> base(m, "G2MError", PyExc_ValueError);
  static py::exception<FormatError> format_error(m, "FormatError", base.ptr());
  static py::exception<ShapeError> shape_error(m, "ShapeError", base.ptr());
  static py::exception<DecodeError> decode_error(m, "DecodeError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const FormatError& e) {
      PyErr_SetString(format_error.ptr(), e.what());
    } catch (const ShapeError& e) {
      PyErr_SetString(shape_error.ptr(), e.what());
    } catch (const DecodeError& e) {
      PyErr_SetString(decode_error.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  m.attr("DEFAULT_IMAGE_SIZE") = kDefaultImageSize;
  m.attr("MAX_TOKEN_CAP") = kMaxTokenCap;

  m.def("palette", [] {
    py::list out;
    for (const auto& e : Palette::canonical().entries()) out.append(py::make_tuple(e.name, py::make_tuple(e.rgb.r, e.rgb.g, e.rgb.b)));
    return out;
  }, "Canonical (name, (r, g, b)) entries in index order.");

  m.def("sample_matrix", [](std::uint64_t seed, int n, int c) { return sample_matrix(seed, n, c).to_rows(); },
        py::arg("seed"), py::arg("n"), py::arg("c"));
  m.def("render", [](const Rows& rows, int image_size) {
    return image_to_array(render(to_matrix(rows), Palette::canonical(), image_size));
  }, py::arg("matrix"), py::arg("image_size") = kDefaultImageSize);
  m.def("decode_image", [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& img, int n) {
    return decode_image(array_to_image(img), Palette::canonical(), n).to_rows();
  }, py::arg("image"), py::arg("n"));
  m.def("encode_png", [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& img) {
    const auto bytes = encode_png(array_to_image(img));
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("decode_png", [](const py::bytes& data) {
    const std::string s = data;
    return image_to_array(decode_png(std::vector<std::uint8_t>(s.begin(), s.end())));
  });

  m.def("build_prompt", [](int h, int w, int c) { return build_prompt(h, w, ColorMapping::from_palette(Palette::canonical(), c)); },
        py::arg("h"), py::arg("w"), py::arg("c"));
  m.def("max_tokens", &max_tokens, py::arg("h"), py::arg("w"));
  m.def("format_matrix", [](const Rows& rows) { return format_matrix(to_matrix(rows)); });

  m.def("normalize", [](const std::string& text) { return normalize(text); });
  m.def("parse", [](const std::string& text, int h, int w) { return outcome_to_dict(parse_cascade(text, h, w)); },
        py::arg("text"), py::arg("h"), py::arg("w"));

  m.def("exact_match", [](const std::optional<Rows>& pred, const Rows& truth) {
    return exact_match(to_prediction_arg(pred), to_matrix(truth));
  }, py::arg("pred"), py::arg("truth"));
  m.def("cell_accuracy", [](const std::optional<Rows>& pred, const Rows& truth) {
    return cell_accuracy(to_prediction_arg(pred), to_matrix(truth));
  }, py::arg("pred"), py::arg("truth"));
  m.def("random_baseline", &random_baseline);
  m.def("score", [](const std::vector<std::optional<Rows>>& preds, const std::vector<Rows>& truths, int c) {
    if (preds.size() != truths.size()) throw InvalidBatch("predictions and truths differ in length");
    std::vector<ScoredPair> pairs;
    for (std::size_t i = 0; i < preds.size(); ++i) pairs.push_back({to_prediction_arg(preds[i]), to_matrix(truths[i])});
    RunAggregate run;
    run.metrics = aggregate(pairs, c);
    return py::module_::import("json").attr("loads")(aggregate_to_json(run).dump());
  }, py::arg("predictions"), py::arg("truths"), py::arg("c"),
     "Aggregate metrics as the dictionary stored in aggregate.json.");

  m.def("type_distribution", [](int n, int image_size, int patch) {
    const TypeHistogram h = type_distribution(n, patch_config(image_size, patch));
    py::dict out;
    for (auto t : kInteractionTypes) out[py::str(std::string(to_string(t)))] = h[static_cast<int>(t)];
    return out;
  }, py::arg("n"), py::arg("image_size") = 512, py::arg("patch") = 16);
  m.def("cell_interaction", [](int row, int col, int n, int image_size, int patch) {
    return std::string(to_string(cell_interaction(row, col, n, patch_config(image_size, patch))));
  }, py::arg("row"), py::arg("col"), py::arg("n"), py::arg("image_size") = 512, py::arg("patch") = 16);

  m.def("encode_g2mf", [](const FloatArray& a) {
    const auto bytes = encode_g2mf(array_to_tensor(a));
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("decode_g2mf", [](const py::bytes& data) {
    const std::string s = data;
    return tensor_to_array(decode_g2mf(std::vector<std::uint8_t>(s.begin(), s.end())));
  });
  m.def("save_g2mf", [](const std::filesystem::path& path, const FloatArray& a) { save_g2mf(path, array_to_tensor(a)); },
        py::arg("path"), py::arg("array"));
  m.def("load_g2mf", [](const std::filesystem::path& path) { return tensor_to_array(load_g2mf(path)); });
  m.def("load_features", [](const std::filesystem::path& path, int drop_leading) {
    return map_to_array(load_features(path, drop_leading));
  }, py::arg("path"), py::arg("drop_leading") = 0, "Feature file as a d x h x w array.");

  m.def("interpolate", [](const FloatArray& a, int n) { return map_to_array(interpolate(array_to_map(a), n)); },
        py::arg("features"), py::arg("n"));
  m.def("synthetic_features", [](const Rows& rows, double sigma, int d, std::uint64_t seed) {
    return map_to_array(synthetic_features(to_matrix(rows), sigma, d, seed));
  }, py::arg("matrix"), py::arg("sigma") = 0.05, py::arg("d") = 16, py::arg("seed") = 0);

  m.def("gradient_check", [](std::uint64_t seed) { return gradient_check(seed).max_rel_error; }, py::arg("seed"),
        "Largest relative error between analytic and finite-difference probe gradients.");
  m.def("probe_logits", [](const std::filesystem::path& checkpoint, const FloatArray& features) {
    const ProbeParamsF params = load_checkpoint(checkpoint);
    const FeatureMap fm = array_to_map(features);
    py::array_t<float> out({params.classes(), fm.h, fm.w});
    const auto logits = probe_forward(params, fm);
    std::copy(logits.begin(), logits.end(), out.mutable_data());
    return out;
  }, py::arg("checkpoint"), py::arg("features"));

  m.def("percent", &percent, py::arg("num"), py::arg("den"));
}
