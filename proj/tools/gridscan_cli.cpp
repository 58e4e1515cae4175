// gridscan command-line front end: digitize, grid-debug, train, eval, gen.

#include <cstdio>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridscan/config.hpp"
#include "gridscan/datagen.hpp"
#include "gridscan/error.hpp"
#include "gridscan/eval.hpp"
#include "gridscan/netpbm.hpp"
#include "gridscan/nn/serialize.hpp"
#include "gridscan/pipeline.hpp"
#include "gridscan/preprocess.hpp"

namespace fs = std::filesystem;
using namespace gridscan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoGrid = 2;

GrayImage load_page(const fs::path& path) {
  auto img = load_image(path);
  if (auto* rgb = std::get_if<RgbImage>(&img)) return to_grayscale(*rgb);
  return std::get<GrayImage>(std::move(img));
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

struct ConfigFlags {
  std::string config_path;
  std::string recognizer;
  std::string weights;
  std::string glyphs;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app->add_option("--recognizer", recognizer, "centroid or cnn")->check(CLI::IsMember({"centroid", "cnn"}));
    app->add_option("--weights", weights, "CNN weights file (GSW1)");
    app->add_option("--glyphs", glyphs, "glyph directory <class>/<name>.pgm for the centroid recognizer");
  }

  // Flags override the file, the file overrides defaults.
  PipelineConfig resolve() const {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    if (!recognizer.empty()) set_config_value(cfg, "recognizer", recognizer);
    if (!weights.empty()) {
      cfg.weights = weights;
      if (recognizer.empty()) cfg.recognizer = RecognizerKind::cnn;
    }
    if (!glyphs.empty()) cfg.glyphs = glyphs;
    cfg.validate();
    return cfg;
  }
};

// ---- digitize ----

struct DigitizeArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::string overlay;
  std::string cells_dir;
  bool header = false;
  ConfigFlags cfg;
};

struct PageResult {
  int code = kExitOk;
  std::string log;
};

PageResult digitize_page(const fs::path& input, const PipelineConfig& cfg, const Recognizer& rec,
                         const DigitizeArgs& args, bool many) {
  PageResult res;
  const auto stem = input.stem().string();
  auto target = [&](const std::string& opt, const std::string& ext) -> fs::path {
    if (!many) return opt;
    return fs::path(opt) / (stem + ext);
  };
  try {
    const auto page = load_page(input);
    const auto out = digitize(page, cfg, rec);
    const fs::path csv_path = args.out.empty() ? fs::path(input).replace_extension(".csv") : target(args.out, ".csv");
    eval::write_table(out.table, csv_path, args.header);
    if (!args.overlay.empty()) save_image(render_overlay(page, out.detection.source_grid),
                                          target(args.overlay, ".ppm"));
    if (!args.cells_dir.empty()) {
      const fs::path dir = many ? fs::path(args.cells_dir) / stem : fs::path(args.cells_dir);
      fs::create_directories(dir);
      save_cells(out.cells, dir);
    }
    std::ostringstream msg;
    msg << input.string() << ": " << out.table.rows() << "x" << out.table.cols() << " cells -> " << csv_path.string()
        << "\n";
    res.log = msg.str();
  } catch (const DegenerateGrid& e) {
    res.code = kExitNoGrid;
    res.log = input.string() + ": " + e.what() + "\n";
  } catch (const std::exception& e) {
    res.code = kExitError;
    res.log = input.string() + ": error: " + e.what() + "\n";
  }
  return res;
}

int run_digitize(const DigitizeArgs& args) {
  const auto cfg = args.cfg.resolve();
  const auto rec = make_recognizer(cfg);
  const bool many = args.inputs.size() > 1;
  if (many) {
    for (const auto* dir : {&args.out, &args.overlay}) {
      if (!dir->empty()) fs::create_directories(*dir);
    }
  }
  // one worker per document; the recognizer and config are shared read-only
  std::vector<std::future<PageResult>> jobs;
  for (const auto& in : args.inputs) {
    jobs.push_back(std::async(std::launch::async, [&, in] { return digitize_page(in, cfg, *rec, args, many); }));
  }
  int code = kExitOk;
  for (auto& j : jobs) {
    const auto r = j.get();
    (r.code == kExitOk ? std::cout : std::cerr) << r.log;
    if (r.code == kExitError || (r.code == kExitNoGrid && code == kExitOk)) code = r.code;
  }
  return code;
}

// ---- grid-debug ----

int run_grid_debug(const std::string& input, const std::string& overlay, const ConfigFlags& flags) {
  const auto cfg = flags.resolve();
  const auto page = load_page(input);
  const auto det = detect_grid(page, cfg);
  std::cout << "raw columns: " << join(det.raw_cols) << "\n";
  std::cout << "raw rows: " << join(det.raw_rows) << "\n";
  std::cout << "columns: " << join(det.grid.col_xs) << "\n";
  std::cout << "rows: " << join(det.grid.row_ys) << "\n";
  std::cout << "input columns: " << join(det.source_grid.col_xs) << "\n";
  std::cout << "input rows: " << join(det.source_grid.row_ys) << "\n";
  std::cout << "cells: " << det.grid.rows() << "x" << det.grid.cols() << "\n";
  if (!overlay.empty()) save_image(render_overlay(page, det.source_grid), overlay);
  return kExitOk;
}

// ---- train ----

struct TrainArgs {
  std::string data_dir;
  std::string labels;
  std::string out = "weights.gsw";
  std::uint64_t seed = 0;
  int epochs = 5;
  int batch = 32;
  float lr = 0.01f;
  ConfigFlags cfg;
};

int run_train(const TrainArgs& args) {
  const auto cfg = args.cfg.resolve();
  const auto images = load_labeled_dir(args.data_dir, args.labels, cfg.classes);
  if (images.empty()) throw EmptyDataset("no samples listed in " + args.labels);
  const auto examples = to_examples(images, prep_config(cfg));
  const auto parts = datagen::split(examples, datagen::kDefaultSplit, args.seed);
  std::cerr << "samples: " << examples.size() << " (train " << parts.train.size() << ", test " << parts.test.size()
            << ", val " << parts.val.size() << ")\n";

  nn::TrainConfig tc;
  tc.epochs = args.epochs;
  tc.batch = static_cast<std::size_t>(args.batch);
  tc.lr = args.lr;
  tc.seed = args.seed;
  tc.num_classes = cfg.classes.size();
  const auto result = nn::train(parts.train, tc, [](int epoch, double loss) {
    std::cerr << "epoch " << epoch << " loss " << loss << "\n";
  });
  nn::save_weights(result.weights, args.out);

  const double loss = result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back();
  std::ostringstream line;
  line << "final_loss=" << loss;
  if (!parts.test.empty()) line << " test_accuracy=" << nn::accuracy(result.weights, parts.test);
  if (!parts.val.empty()) line << " val_accuracy=" << nn::accuracy(result.weights, parts.val);
  line << " weights=" << args.out;
  std::cout << line.str() << "\n";
  return kExitOk;
}

// ---- eval ----

int run_eval(const std::string& pred, const std::string& truth, const std::string& out) {
  const auto r = eval::report(eval::read_table(pred), eval::read_table(truth));
  std::cout << eval::format_report_text(r);
  if (!out.empty()) eval::write_report(r, out);
  return kExitOk;
}

// ---- gen ----

struct GenArgs {
  datagen::SheetSpec spec;
  int count = 1;
  std::size_t samples = 0;
  std::string glyphs;
  std::string out = ".";
};

int run_gen(GenArgs args) {
  fs::create_directories(args.out);
  if (args.samples > 0) {
    const auto s = datagen::digit_samples(args.samples, args.spec.seed);
    datagen::write_samples(s, args.out);
    std::cout << "wrote " << s.size() << " samples and labels.csv to " << args.out << "\n";
    return kExitOk;
  }
  args.spec.validate();
  const auto glyphs = args.glyphs.empty() ? datagen::builtin_glyphs() : datagen::load_glyph_dir(args.glyphs);
  const auto base_seed = args.spec.seed;
  for (int k = 0; k < args.count; ++k) {
    args.spec.seed = base_seed + static_cast<std::uint64_t>(k);
    datagen::write_sheet(datagen::render_sheet(args.spec, glyphs), args.out, k);
  }
  std::cout << "wrote " << args.count << " sheet(s) to " << args.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridscan: grid-ruled sheet digitization"};
  app.require_subcommand(1);

  DigitizeArgs dig;
  auto* c_dig = app.add_subcommand("digitize", "detect the grid, recognize cells, write CSV");
  c_dig->add_option("inputs", dig.inputs, "PGM/PPM images")->required()->check(CLI::ExistingFile);
  c_dig->add_option("--out", dig.out, "output CSV (a directory when several inputs are given)");
  c_dig->add_option("--overlay", dig.overlay, "write the red/green grid overlay PPM here");
  c_dig->add_option("--cells-dir", dig.cells_dir, "dump cell crops as cell_<row>_<col>.pgm");
  c_dig->add_flag("--header", dig.header, "emit a col_0..col_n-1 header row");
  dig.cfg.add(c_dig);

  std::string dbg_input, dbg_overlay;
  ConfigFlags dbg_cfg;
  auto* c_dbg = app.add_subcommand("grid-debug", "print detected line positions, optionally write the overlay");
  c_dbg->add_option("input", dbg_input, "PGM/PPM image")->required()->check(CLI::ExistingFile);
  c_dbg->add_option("--overlay", dbg_overlay, "overlay PPM path");
  dbg_cfg.add(c_dbg);

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "train the CNN recognizer on a labelled glyph directory");
  c_tr->add_option("data_dir", tr.data_dir, "directory of glyph PGMs")->required()->check(CLI::ExistingDirectory);
  c_tr->add_option("labels", tr.labels, "CSV of filename,label")->required()->check(CLI::ExistingFile);
  c_tr->add_option("--out", tr.out, "weights output path");
  c_tr->add_option("--seed", tr.seed, "initialization, shuffle and split seed");
  c_tr->add_option("--epochs", tr.epochs, "training epochs")->check(CLI::PositiveNumber);
  c_tr->add_option("--batch", tr.batch, "minibatch size")->check(CLI::PositiveNumber);
  c_tr->add_option("--lr", tr.lr, "learning rate")->check(CLI::NonNegativeNumber);
  tr.cfg.add(c_tr);

  std::string ev_pred, ev_truth, ev_out;
  auto* c_ev = app.add_subcommand("eval", "compare a predicted table with ground truth");
  c_ev->add_option("pred", ev_pred, "predicted CSV")->required()->check(CLI::ExistingFile);
  c_ev->add_option("truth", ev_truth, "ground-truth CSV")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--out", ev_out, "report CSV path (a .txt twin is written alongside)");

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "generate synthetic sheets or a labelled glyph dataset");
  c_gen->add_option("--out", gen.out, "output directory");
  c_gen->add_option("--seed", gen.spec.seed, "base seed; sheet k uses seed + k");
  c_gen->add_option("--count", gen.count, "number of sheets")->check(CLI::PositiveNumber);
  c_gen->add_option("--rows", gen.spec.rows);
  c_gen->add_option("--cols", gen.spec.cols);
  c_gen->add_option("--cell-w", gen.spec.cell_w);
  c_gen->add_option("--cell-h", gen.spec.cell_h);
  c_gen->add_option("--thickness", gen.spec.line_thickness, "line thickness, 1 to 5 px");
  c_gen->add_option("--jitter", gen.spec.line_jitter, "max per-line displacement in px");
  c_gen->add_option("--margin", gen.spec.margin);
  c_gen->add_option("--blank", gen.spec.blank_fraction, "probability that a cell is left blank");
  c_gen->add_option("--glyphs", gen.glyphs, "glyph directory <class>/<name>.pgm (default: built-in digits)");
  c_gen->add_option("--samples", gen.samples, "write N labelled digit samples instead of sheets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*c_dig) return run_digitize(dig);
    if (*c_dbg) return run_grid_debug(dbg_input, dbg_overlay, dbg_cfg);
    if (*c_tr) return run_train(tr);
    if (*c_ev) return run_eval(ev_pred, ev_truth, ev_out);
    if (*c_gen) return run_gen(gen);
  } catch (const DegenerateGrid& e) {
    std::cerr << e.what() << "\n";
    return kExitNoGrid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
