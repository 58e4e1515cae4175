#include "gridscan/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "gridscan/csv.hpp"
#include "gridscan/error.hpp"

namespace gridscan::eval {
namespace {

bool is_header(const csv::Row& row) {
  if (row.empty()) return false;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] != "col_" + std::to_string(i)) return false;
  }
  return true;
}

double ratio(std::size_t num, std::size_t den, const char* what) {
  if (den == 0) throw UndefinedMetric(std::string(what) + " undefined: zero denominator");
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string exact(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

template <typename F>
std::optional<double> defined(F&& f) {
  try {
    return f();
  } catch (const UndefinedMetric&) {
    return std::nullopt;
  }
}

struct CountRow {
  const char* name;
  std::size_t EvalCounts::*field;
};
constexpr CountRow kCountRows[] = {
    {"Total Correct Cells", &EvalCounts::correct},   {"Total Incorrect Cells", &EvalCounts::incorrect},
    {"Total Missing Cells", &EvalCounts::missing},   {"Total Extra Cells", &EvalCounts::extra},
    {"Total Empty Cells", &EvalCounts::empty},
};

struct RateRow {
  const char* name;
  std::optional<double> MetricReport::*field;
};
constexpr RateRow kRateRows[] = {
    {"Precision (%)", &MetricReport::precision}, {"Recall (%)", &MetricReport::recall},
    {"F1 Score (%)", &MetricReport::f1},         {"Accuracy (%)", &MetricReport::accuracy},
    {"CER (%)", &MetricReport::avg_cer},         {"WER (%)", &MetricReport::avg_wer},
};

}  // namespace

Table::Table(std::size_t rows, std::size_t cols)
    : cells_(rows, std::vector<std::string>(cols)), cols_(rows ? cols : 0) {}

Table::Table(std::vector<std::vector<std::string>> cells) : cells_(std::move(cells)) {
  cols_ = cells_.empty() ? 0 : cells_.front().size();
  for (const auto& r : cells_) {
    if (r.size() != cols_) throw FormatError("table rows have differing lengths");
  }
}

Table parse_table(std::string_view text) {
  auto rows = csv::parse(text);
  if (!rows.empty() && is_header(rows.front())) rows.erase(rows.begin());
  return Table(std::move(rows));
}

Table read_table(const std::filesystem::path& path) {
  auto rows = csv::read(path);
  if (!rows.empty() && is_header(rows.front())) rows.erase(rows.begin());
  try {
    return Table(std::move(rows));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string format_table(const Table& t, bool header) {
  std::vector<csv::Row> rows;
  if (header) {
    csv::Row h;
    for (std::size_t c = 0; c < t.cols(); ++c) h.push_back("col_" + std::to_string(c));
    rows.push_back(std::move(h));
  }
  rows.insert(rows.end(), t.cells().begin(), t.cells().end());
  return csv::format(rows);
}

void write_table(const Table& t, const std::filesystem::path& path, bool header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << format_table(t, header);
  if (!out) throw IoError("write failed: " + path.string());
}

CellOutcome classify_cell(std::string_view pred, std::string_view truth) noexcept {
  if (truth.empty()) return pred.empty() ? CellOutcome::empty : CellOutcome::extra;
  if (pred.empty()) return CellOutcome::missing;
  return pred == truth ? CellOutcome::correct : CellOutcome::incorrect;
}

EvalCounts compare_tables(const Table& pred, const Table& truth) {
  EvalCounts c;
  const std::size_t rows = std::max(pred.rows(), truth.rows());
  const std::size_t cols = std::max(pred.cols(), truth.cols());
  static const std::string blank;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < cols; ++k) {
      const bool in_pred = r < pred.rows() && k < pred.cols();
      const bool in_truth = r < truth.rows() && k < truth.cols();
      if (!in_pred && !in_truth) continue;
      const auto& p = in_pred ? pred.at(r, k) : blank;
      const auto& t = in_truth ? truth.at(r, k) : blank;
      switch (classify_cell(p, t)) {
        case CellOutcome::correct: ++c.correct; break;
        case CellOutcome::incorrect: ++c.incorrect; break;
        case CellOutcome::missing: ++c.missing; break;
        case CellOutcome::extra: ++c.extra; break;
        case CellOutcome::empty: ++c.empty; break;
      }
    }
  }
  return c;
}

double precision(const EvalCounts& c) { return ratio(c.correct, c.correct + c.incorrect, "precision"); }
double recall(const EvalCounts& c) { return ratio(c.correct, c.correct + c.missing, "recall"); }
double accuracy(const EvalCounts& c) {
  return ratio(c.correct, c.correct + c.incorrect + c.missing, "accuracy");
}
double f1(const EvalCounts& c) {
  const double p = precision(c);
  const double r = recall(c);
  if (p + r == 0.0) throw UndefinedMetric("f1 undefined: precision and recall are both zero");
  return 2 * p * r / (p + r);
}

std::vector<char32_t> code_points(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    int len = 1;
    char32_t cp = b;
    if (b >= 0xF0 && b < 0xF8) {
      len = 4;
      cp = b & 0x07;
    } else if (b >= 0xE0) {
      len = 3;
      cp = b & 0x0F;
    } else if (b >= 0xC0) {
      len = 2;
      cp = b & 0x1F;
    }
    if (len > 1) {
      if (i + static_cast<std::size_t>(len) > s.size()) {
        len = 1;
        cp = b;
      } else {
        for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]) & 0x3F);
      }
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return edit_distance(code_points(a), code_points(b));
}

double cer(std::string_view pred, std::string_view truth) {
  const auto t = code_points(truth);
  if (t.empty()) throw UndefinedMetric("cer undefined for empty truth");
  return static_cast<double>(edit_distance(code_points(pred), t)) / static_cast<double>(t.size());
}

double wer(std::string_view pred, std::string_view truth) {
  const auto t = tokens(truth);
  if (t.empty()) throw UndefinedMetric("wer undefined for blank truth");
  return static_cast<double>(edit_distance(tokens(pred), t)) / static_cast<double>(t.size());
}

MetricReport report(const EvalCounts& counts, std::optional<double> avg_cer, std::optional<double> avg_wer) {
  MetricReport r;
  r.counts = counts;
  r.precision = defined([&] { return precision(counts); });
  r.recall = defined([&] { return recall(counts); });
  r.f1 = defined([&] { return f1(counts); });
  r.accuracy = defined([&] { return accuracy(counts); });
  r.avg_cer = avg_cer;
  r.avg_wer = avg_wer;
  return r;
}

MetricReport report(const Table& pred, const Table& truth) {
  double cer_sum = 0, wer_sum = 0;
  std::size_t cer_n = 0, wer_n = 0;
  static const std::string blank;
  for (std::size_t r = 0; r < truth.rows(); ++r) {
    for (std::size_t c = 0; c < truth.cols(); ++c) {
      const auto& t = truth.at(r, c);
      if (t.empty()) continue;
      const auto& p = (r < pred.rows() && c < pred.cols()) ? pred.at(r, c) : blank;
      cer_sum += cer(p, t);
      ++cer_n;
      if (!tokens(t).empty()) {
        wer_sum += wer(p, t);
        ++wer_n;
      }
    }
  }
  std::optional<double> avg_cer, avg_wer;
  if (cer_n) avg_cer = cer_sum / static_cast<double>(cer_n);
  if (wer_n) avg_wer = wer_sum / static_cast<double>(wer_n);
  return report(compare_tables(pred, truth), avg_cer, avg_wer);
}

std::string format_report_csv(const MetricReport& r) {
  std::vector<csv::Row> rows{{"metric", "value", "percent"}};
  for (const auto& cr : kCountRows) rows.push_back({cr.name, std::to_string(r.counts.*cr.field), ""});
  for (const auto& rr : kRateRows) {
    const auto& v = r.*rr.field;
    rows.push_back({rr.name, v ? exact(*v) : "NA", v ? percent(*v) : "NA"});
  }
  return csv::format(rows);
}

MetricReport parse_report_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty() || rows.front() != csv::Row{"metric", "value", "percent"}) {
    throw FormatError("report csv: missing metric,value,percent header");
  }
  MetricReport r;
  std::size_t seen = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 3) throw FormatError("report csv: expected 3 fields per row");
    bool known = false;
    for (const auto& cr : kCountRows) {
      if (row[0] != cr.name) continue;
      std::size_t v = 0;
      const auto res = std::from_chars(row[1].data(), row[1].data() + row[1].size(), v);
      if (res.ec != std::errc{} || res.ptr != row[1].data() + row[1].size()) {
        throw FormatError("report csv: bad count for " + row[0]);
      }
      r.counts.*cr.field = v;
      known = true;
    }
    for (const auto& rr : kRateRows) {
      if (row[0] != rr.name) continue;
      known = true;
      if (row[1] == "NA") {
        r.*rr.field = std::nullopt;
        continue;
      }
      double v = 0;
      const auto res = std::from_chars(row[1].data(), row[1].data() + row[1].size(), v);
      if (res.ec != std::errc{} || res.ptr != row[1].data() + row[1].size()) {
        throw FormatError("report csv: bad value for " + row[0]);
      }
      r.*rr.field = v;
    }
    if (!known) throw FormatError("report csv: unknown metric '" + row[0] + "'");
    ++seen;
  }
  if (seen != std::size(kCountRows) + std::size(kRateRows)) throw FormatError("report csv: missing metrics");
  return r;
}

std::string format_report_text(const MetricReport& r) {
  std::size_t width = 0;
  for (const auto& cr : kCountRows) width = std::max(width, std::string_view(cr.name).size());
  for (const auto& rr : kRateRows) width = std::max(width, std::string_view(rr.name).size());
  std::ostringstream os;
  auto line = [&](std::string_view name, const std::string& value) {
    os << name << std::string(width + 2 - name.size(), ' ') << value << '\n';
  };
  for (const auto& cr : kCountRows) line(cr.name, std::to_string(r.counts.*cr.field));
  for (const auto& rr : kRateRows) {
    const auto& v = r.*rr.field;
    line(rr.name, v ? percent(*v) : "NA");
  }
  return os.str();
}

void write_report(const MetricReport& r, const std::filesystem::path& csv_path) {
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + p.string());
    out << text;
    if (!out) throw IoError("write failed: " + p.string());
  };
  write(csv_path, format_report_csv(r));
  auto txt = csv_path;
  txt.replace_extension(".txt");
  write(txt, format_report_text(r));
}

}  // namespace gridscan::eval
