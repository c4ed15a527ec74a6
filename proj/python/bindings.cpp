#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stcl/checkpoint.hpp"
#include "stcl/config.hpp"
#include "stcl/error.hpp"
#include "stcl/metrics.hpp"

namespace py = pybind11;
using namespace stcl;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

struct Image {
  Array keep;
  ImageView view;
};

// Accepts [C,H,W] or [H,W] (one channel).
Image image(const Array& a, const char* name) {
  Image img{a, {}};
  if (a.ndim() == 2) {
    img.view = {std::span<const double>(a.data(), a.size()), 1, static_cast<std::size_t>(a.shape(0)),
                static_cast<std::size_t>(a.shape(1))};
  } else if (a.ndim() == 3) {
    img.view = {std::span<const double>(a.data(), a.size()), static_cast<std::size_t>(a.shape(0)),
                static_cast<std::size_t>(a.shape(1)), static_cast<std::size_t>(a.shape(2))};
  } else {
    throw ValidationError(std::string(name) + ": expected a [C,H,W] or [H,W] array");
  }
  return img;
}

void same_shape(const Image& a, const Image& b) {
  if (a.view.channels != b.view.channels || a.view.height != b.view.height || a.view.width != b.view.width) {
    throw ValidationError("images must have the same shape");
  }
}

std::span<const double> flat(const Array& a) { return {a.data(), static_cast<std::size_t>(a.size())}; }

template <typename F>
auto pair_metric(F f) {
  return [f](const Array& x, const Array& y) {
    auto a = image(x, "x"), b = image(y, "y");
    same_shape(a, b);
    return f(a.view, b.view);
  };
}

py::array_t<float> image_stack(const std::vector<std::vector<float>>& images, std::size_t h, std::size_t w) {
  py::array_t<float> out({images.size(), std::size_t{3}, h, w});
  auto* dst = out.mutable_data();
  for (const auto& img : images) dst = std::copy(img.begin(), img.end(), dst);
  return out;
}

py::dict checkpoint_dict(const Checkpoint& c) {
  py::dict d;
  d["kind"] = c.kind;
  py::dict config;
  for (const auto& [k, v] : c.config) config[py::str(k)] = v;
  d["config"] = config;
  py::dict arrays;
  for (const auto& a : c.arrays) {
    py::array_t<double> arr(std::vector<py::ssize_t>(a.shape.begin(), a.shape.end()));
    std::copy(a.values.begin(), a.values.end(), arr.mutable_data());
    arrays[py::str(a.name)] = arr;
  }
  d["arrays"] = arrays;
  d["fingerprint"] = c.fingerprint();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quality metrics, knee detection, difficulty rules and data helpers";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
  static py::exception<DataError> data(m, "DataError", base.ptr());
  static py::exception<NumericError> numeric(m, "NumericError", base.ptr());
  static py::exception<CheckpointError> checkpoint(m, "CheckpointError", data.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const CheckpointError& e) {
      py::object err = py::handle(checkpoint.ptr())(e.what());
      err.attr("fault") = to_string(e.fault());
      PyErr_SetObject(checkpoint.ptr(), err.ptr());
    } catch (const ValidationError& e) {
      validation(e.what());
    } catch (const DataError& e) {
      data(e.what());
    } catch (const NumericError& e) {
      numeric(e.what());
    }
  });

  m.attr("PSNR_CAP") = kPsnrCap;
  m.attr("CHECKPOINT_VERSION") = kCheckpointVersion;

  m.def("ssim", pair_metric([](ImageView a, ImageView b) { return ssim(a, b); }), py::arg("x"), py::arg("y"),
        "Mean local SSIM (11x11 Gaussian window), averaged over channels.");
  m.def(
      "ms_ssim",
      [](const Array& x, const Array& y, std::size_t scales) {
        auto a = image(x, "x"), b = image(y, "y");
        same_shape(a, b);
        return ms_ssim(a.view, b.view, scales);
      },
      py::arg("x"), py::arg("y"), py::arg("scales") = 0, "Multi-scale SSIM; scales=0 picks the largest count that fits.");
  m.def("psnr", pair_metric([](ImageView a, ImageView b) { return psnr(a, b); }), py::arg("x"), py::arg("y"));
  m.def("rmse", pair_metric([](ImageView a, ImageView b) { return rmse(a, b); }), py::arg("x"), py::arg("y"));
  m.def(
      "bce", [](const Array& p, const Array& t) { return bce(flat(p), flat(t)); }, py::arg("probs"),
      py::arg("targets"));
  m.def(
      "bit_accuracy", [](const Array& p, const Array& t) { return bit_accuracy(flat(p), flat(t)); }, py::arg("probs"),
      py::arg("targets"));
  m.def("ms_ssim_weights", &ms_ssim_weights, py::arg("scales"));

  m.def(
      "analyze_knee",
      [](const Array& series, std::size_t window, double sensitivity, std::size_t min_epochs) {
        const auto a = analyze_knee(flat(series), KneeParams{window, sensitivity, min_epochs});
        py::dict d;
        d["knee"] = a.knee ? py::cast(*a.knee) : py::none();
        d["smoothed"] = a.smoothed;
        d["difference"] = a.difference;
        return d;
      },
      py::arg("series"), py::arg("window") = 5, py::arg("sensitivity") = 1.0, py::arg("min_epochs") = 10);
  m.def(
      "detect_knee",
      [](const Array& series, std::size_t window, double sensitivity, std::size_t min_epochs) {
        return detect_knee(flat(series), KneeParams{window, sensitivity, min_epochs});
      },
      py::arg("series"), py::arg("window") = 5, py::arg("sensitivity") = 1.0, py::arg("min_epochs") = 10,
      "Index of the knee of a decreasing (or increasing) series, or None.");

  m.def(
      "classify",
      [](std::vector<double> ssim_scores, std::vector<double> psnr_scores, double alpha1, double alpha2, double mu1,
         double mu2) {
        return std::string(
            to_string(classify({std::move(ssim_scores), std::move(psnr_scores)}, {alpha1, alpha2, mu1, mu2})));
      },
      py::arg("ssim"), py::arg("psnr"), py::arg("alpha1") = 0.9, py::arg("alpha2") = 0.8, py::arg("mu1") = 20.0,
      py::arg("mu2") = 12.0, "Difficulty label from one SSIM and one PSNR score per teacher.");

  m.def(
      "payload",
      [](std::uint64_t seed, std::size_t depth, std::size_t height, std::size_t width) {
        const auto p = gen_payload(seed, depth, height, width);
        py::array_t<float> out({depth, height, width});
        std::copy(p.bits.begin(), p.bits.end(), out.mutable_data());
        return out;
      },
      py::arg("seed"), py::arg("depth"), py::arg("height"), py::arg("width"));

  m.def(
      "open_corpus",
      [](const std::string& source, std::size_t count, std::size_t height, std::size_t width, std::uint64_t seed) {
        const auto c = open_corpus(source, count, height, width, seed);
        std::vector<std::vector<float>> pixels;
        std::vector<std::string> ids, families;
        for (const auto& s : c.samples) {
          pixels.push_back(s.pixels);
          ids.push_back(s.id);
          families.push_back(to_string(s.family));
        }
        py::dict d;
        d["images"] = image_stack(pixels, c.height, c.width);
        d["ids"] = ids;
        d["families"] = families;
        d["train"] = c.split.train;
        d["val"] = c.split.val;
        d["test"] = c.split.test;
        d["fingerprint"] = c.fingerprint();
        return d;
      },
      py::arg("source") = "synthetic", py::arg("count") = 200, py::arg("height") = 32, py::arg("width") = 32,
      py::arg("seed") = 0, "Synthetic corpus ('synthetic') or an image directory, with its split.");

  m.def(
      "load_checkpoint", [](const std::filesystem::path& p) { return checkpoint_dict(load_checkpoint(p)); },
      py::arg("path"), "Parsed checkpoint: kind, config fields, named float arrays, fingerprint.");
  m.def(
      "parse_checkpoint",
      [](const py::bytes& b) {
        const std::string s = b;
        return checkpoint_dict(parse_checkpoint(std::vector<unsigned char>(s.begin(), s.end())));
      },
      py::arg("data"));

  m.def(
      "config_json",
      [](const std::string& json_text) { return config_json(parse_config(json_text)); },
      py::arg("json_text") = "{}", "Fully resolved run config (defaults filled in) as JSON text.");
}
