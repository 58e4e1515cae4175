// Python bindings: images travel as uint8 numpy arrays, tables as lists of
// lists of str.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gridscan/config.hpp"
#include "gridscan/datagen.hpp"
#include "gridscan/error.hpp"
#include "gridscan/eval.hpp"
#include "gridscan/grid.hpp"
#include "gridscan/netpbm.hpp"
#include "gridscan/nn/serialize.hpp"
#include "gridscan/pipeline.hpp"
#include "gridscan/preprocess.hpp"

namespace py = pybind11;
using namespace gridscan;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using Rows = std::vector<std::vector<std::string>>;

template <typename Tag>
Plane<Tag> to_plane(const U8Array& a) {
  if (a.ndim() != 2) throw InvalidArgument("expected a 2-D uint8 array");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  return Plane<Tag>(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

template <typename Tag>
U8Array from_plane(const Plane<Tag>& p) {
  U8Array out({p.height(), p.width()});
  std::copy(p.pixels().begin(), p.pixels().end(), out.mutable_data());
  return out;
}

U8Array from_rgb(const RgbImage& img) {
  U8Array out({img.height(), img.width(), 3});
  std::copy(img.bytes().begin(), img.bytes().end(), out.mutable_data());
  return out;
}

GrayImage page(const U8Array& a) {
  if (a.ndim() == 3 && a.shape(2) == 3) {
    return to_grayscale(RgbImage(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                                 std::vector<std::uint8_t>(a.data(), a.data() + a.size())));
  }
  return to_plane<GrayTag>(a);
}

eval::Table to_table(const Rows& rows) { return eval::Table(rows); }

py::dict counts_dict(const eval::EvalCounts& c) {
  py::dict d;
  d["correct"] = c.correct;
  d["incorrect"] = c.incorrect;
  d["missing"] = c.missing;
  d["extra"] = c.extra;
  d["empty"] = c.empty;
  return d;
}

eval::EvalCounts counts_from(std::size_t correct, std::size_t incorrect, std::size_t missing) {
  eval::EvalCounts c;
  c.correct = correct;
  c.incorrect = incorrect;
  c.missing = missing;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grid-ruled sheet digitization: imaging, grid detection, recognition, evaluation, synthetic data.";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DegenerateGrid>(m, "DegenerateGrid", m.attr("Error").ptr());
  py::register_exception<FormatError>(m, "FormatError", m.attr("Error").ptr());
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", m.attr("Error").ptr());
  py::register_exception<SpecError>(m, "SpecError", m.attr("Error").ptr());
  py::register_exception<ConfigError>(m, "ConfigError", m.attr("Error").ptr());

  // ---- imaging
  m.def(
      "load_image",
      [](const std::filesystem::path& path) -> py::object {
        auto img = load_image(path);
        if (auto* rgb = std::get_if<RgbImage>(&img)) return from_rgb(*rgb);
        return from_plane(std::get<GrayImage>(img));
      },
      py::arg("path"), "Read a binary PGM (H, W) or PPM (H, W, 3).");
  m.def(
      "save_image",
      [](const std::filesystem::path& path, const U8Array& a) {
        if (a.ndim() == 3) {
          save_image(RgbImage(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                              std::vector<std::uint8_t>(a.data(), a.data() + a.size())),
                     path);
        } else {
          save_image(to_plane<GrayTag>(a), path);
        }
      },
      py::arg("path"), py::arg("image"));
  m.def("to_grayscale", [](const U8Array& a) { return from_plane(page(a)); }, py::arg("image"));
  m.def(
      "resize", [](const U8Array& a, int w, int h) { return from_plane(resize(to_plane<GrayTag>(a), w, h)); },
      py::arg("image"), py::arg("width") = 1000, py::arg("height") = 1000);
  m.def("gaussian_blur", [](const U8Array& a) { return from_plane(gaussian_blur_5x5(to_plane<GrayTag>(a))); },
        py::arg("image"));
  m.def(
      "adaptive_threshold",
      [](const U8Array& a, int block, double c) { return from_plane(adaptive_threshold(to_plane<GrayTag>(a), block, c)); },
      py::arg("image"), py::arg("block") = 15, py::arg("c") = 8.0, "Returns a {0,1} mask, 1 for dark ink.");
  m.def(
      "morph_open",
      [](const U8Array& mask, int w, int h) { return from_plane(morph_open(to_plane<BinaryTag>(mask), {w, h})); },
      py::arg("mask"), py::arg("se_width"), py::arg("se_height"));
  m.def(
      "connected_components",
      [](const U8Array& mask) {
        std::vector<std::tuple<int, int, int, int, int>> out;
        for (const auto& c : connected_components(to_plane<BinaryTag>(mask)))
          out.emplace_back(c.bbox.x, c.bbox.y, c.bbox.w, c.bbox.h, c.area);
        return out;
      },
      py::arg("mask"), "8-connected components as (x, y, w, h, area).");
  m.def("group_positions", &group_positions, py::arg("positions"), py::arg("min_gap") = 30);

  // ---- configuration and pipeline
  py::class_<PipelineConfig>(m, "Config")
      .def(py::init<>())
      .def_static("parse", [](const std::string& text) { return parse_config(text); }, py::arg("text"))
      .def_readwrite("resize_width", &PipelineConfig::resize_width)
      .def_readwrite("resize_height", &PipelineConfig::resize_height)
      .def_readwrite("threshold_block", &PipelineConfig::threshold_block)
      .def_readwrite("threshold_c", &PipelineConfig::threshold_c)
      .def_readwrite("morph_length", &PipelineConfig::morph_length)
      .def_readwrite("group_gap", &PipelineConfig::group_gap)
      .def_readwrite("cell_inset", &PipelineConfig::cell_inset)
      .def_readwrite("line_fraction", &PipelineConfig::line_fraction)
      .def_readwrite("weights", &PipelineConfig::weights)
      .def_readwrite("glyphs", &PipelineConfig::glyphs)
      .def_readwrite("empty_threshold", &PipelineConfig::empty_threshold)
      .def_readwrite("classes", &PipelineConfig::classes)
      .def_property(
          "recognizer", [](const PipelineConfig& c) { return std::string(recognizer_name(c.recognizer)); },
          [](PipelineConfig& c, const std::string& v) { set_config_value(c, "recognizer", v); })
      .def("set", [](PipelineConfig& c, const std::string& k, const std::string& v) { set_config_value(c, k, v); })
      .def("__str__", &format_config)
      .def("__eq__", [](const PipelineConfig& a, const PipelineConfig& b) { return a == b; });

  m.def(
      "detect_grid",
      [](const U8Array& img, const PipelineConfig& cfg) {
        const auto d = detect_grid(page(img), cfg);
        py::dict out;
        out["columns"] = d.grid.col_xs;
        out["rows"] = d.grid.row_ys;
        out["input_columns"] = d.source_grid.col_xs;
        out["input_rows"] = d.source_grid.row_ys;
        out["cells"] = d.grid.cell_count();
        return out;
      },
      py::arg("image"), py::arg("config") = PipelineConfig{});
  m.def(
      "digitize",
      [](const U8Array& img, const PipelineConfig& cfg) {
        const auto rec = make_recognizer(cfg);
        GrayImage g = page(img);
        Digitized d;
        {
          py::gil_scoped_release release;
          d = digitize(g, cfg, *rec);
        }
        return d.table.cells();
      },
      py::arg("image"), py::arg("config") = PipelineConfig{}, "Table of recognised cell strings ('' = blank).");

  // ---- evaluation
  m.def("compare_tables", [](const Rows& p, const Rows& t) { return counts_dict(eval::compare_tables(to_table(p), to_table(t))); },
        py::arg("pred"), py::arg("truth"));
  m.def(
      "report",
      [](const Rows& p, const Rows& t) { return eval::format_report_csv(eval::report(to_table(p), to_table(t))); },
      py::arg("pred"), py::arg("truth"), "Metric report as CSV text (metric,value,percent).");
  m.def("precision", [](std::size_t c, std::size_t i, std::size_t mi) { return eval::precision(counts_from(c, i, mi)); },
        py::arg("correct"), py::arg("incorrect"), py::arg("missing"));
  m.def("recall", [](std::size_t c, std::size_t i, std::size_t mi) { return eval::recall(counts_from(c, i, mi)); },
        py::arg("correct"), py::arg("incorrect"), py::arg("missing"));
  m.def("f1", [](std::size_t c, std::size_t i, std::size_t mi) { return eval::f1(counts_from(c, i, mi)); },
        py::arg("correct"), py::arg("incorrect"), py::arg("missing"));
  m.def("accuracy", [](std::size_t c, std::size_t i, std::size_t mi) { return eval::accuracy(counts_from(c, i, mi)); },
        py::arg("correct"), py::arg("incorrect"), py::arg("missing"));
  m.def("levenshtein", &eval::levenshtein, py::arg("a"), py::arg("b"));
  m.def("cer", &eval::cer, py::arg("pred"), py::arg("truth"));
  m.def("wer", &eval::wer, py::arg("pred"), py::arg("truth"));

  // ---- synthetic data
  m.def(
      "render_sheet",
      [](int rows, int cols, int cell_w, int cell_h, int thickness, int jitter, double blank, std::uint64_t seed) {
        datagen::SheetSpec s;
        s.rows = rows;
        s.cols = cols;
        s.cell_w = cell_w;
        s.cell_h = cell_h;
        s.line_thickness = thickness;
        s.line_jitter = jitter;
        s.blank_fraction = blank;
        s.seed = seed;
        const auto sheet = datagen::render_sheet(s, datagen::builtin_glyphs());
        return py::make_tuple(from_plane(sheet.image), sheet.truth.cells(), sheet.col_xs, sheet.row_ys);
      },
      py::arg("rows") = 8, py::arg("cols") = 12, py::arg("cell_w") = 80, py::arg("cell_h") = 80,
      py::arg("thickness") = 2, py::arg("jitter") = 0, py::arg("blank") = 0.2, py::arg("seed") = 0,
      "Returns (image, truth rows, column x positions, row y positions).");
  m.def(
      "rotate", [](const U8Array& a, double deg) { return from_plane(datagen::rotate(to_plane<GrayTag>(a), deg)); },
      py::arg("image"), py::arg("degrees"));
  m.def(
      "digit_samples",
      [](std::size_t n, std::uint64_t seed) {
        py::list out;
        for (const auto& s : datagen::digit_samples(n, seed)) out.append(py::make_tuple(from_plane(s.image), s.label));
        return out;
      },
      py::arg("n"), py::arg("seed") = 0);

  // ---- CNN
  m.def(
      "train",
      [](const std::vector<U8Array>& images, const std::vector<int>& labels, int epochs, std::uint64_t seed,
         float lr) {
        if (images.size() != labels.size()) throw InvalidArgument("images and labels differ in length");
        std::vector<LabeledImage> li;
        for (std::size_t i = 0; i < images.size(); ++i) li.push_back({to_plane<GrayTag>(images[i]), labels[i]});
        nn::TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.seed = seed;
        cfg.lr = lr;
        nn::TrainResult r;
        {
          py::gil_scoped_release release;
          r = nn::train(to_examples(li), cfg);
        }
        const auto bytes = nn::encode_weights(r.weights);
        return py::make_tuple(py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size()), r.epoch_loss);
      },
      py::arg("images"), py::arg("labels"), py::arg("epochs") = 5, py::arg("seed") = 0, py::arg("lr") = 0.01f,
      "Train the CNN on glyph images; returns (GSW1 weight bytes, per-epoch loss).");
  m.def(
      "classify",
      [](const py::bytes& weights, const U8Array& cell) {
        const std::string raw = weights;
        const CnnRecognizer rec(nn::decode_weights(std::span<const std::uint8_t>(
            reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size())));
        const auto p = predict_cell(rec, to_plane<GrayTag>(cell));
        return py::make_tuple(p.is_empty ? -1 : p.label, p.confidence);
      },
      py::arg("weights"), py::arg("cell"), "Returns (label or -1 when empty, confidence).");
}
