#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridscan::eval {

/// Rectangular grid of cell strings; "" is a blank cell.
class Table {
 public:
  Table() = default;
  Table(std::size_t rows, std::size_t cols);
  /// Throws FormatError when rows differ in length.
  explicit Table(std::vector<std::vector<std::string>> cells);

  std::size_t rows() const noexcept { return cells_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  const std::string& at(std::size_t r, std::size_t c) const { return cells_.at(r).at(c); }
  std::string& at(std::size_t r, std::size_t c) { return cells_.at(r).at(c); }
  const std::vector<std::vector<std::string>>& cells() const noexcept { return cells_; }

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::vector<std::vector<std::string>> cells_;
  std::size_t cols_ = 0;
};

/// Reads a table CSV. A first row of exactly col_0..col_{n-1} is skipped.
Table read_table(const std::filesystem::path& path);
/// Writes RFC-4180 CSV, optionally preceded by a col_0..col_{n-1} header.
void write_table(const Table& t, const std::filesystem::path& path, bool header = false);
Table parse_table(std::string_view text);
std::string format_table(const Table& t, bool header = false);

struct EvalCounts {
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t missing = 0;
  std::size_t extra = 0;
  std::size_t empty = 0;
  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

enum class CellOutcome { correct, incorrect, missing, extra, empty };

/// Outcome of one aligned cell pair.
CellOutcome classify_cell(std::string_view pred, std::string_view truth) noexcept;

/// Positional comparison. Cells present in only one table count as blank on
/// the other side.
EvalCounts compare_tables(const Table& pred, const Table& truth);

// Each throws UndefinedMetric when its denominator is zero.
double precision(const EvalCounts& c);  // C / (C + I)
double recall(const EvalCounts& c);     // C / (C + M)
double f1(const EvalCounts& c);         // 2PR / (P + R)
double accuracy(const EvalCounts& c);   // C / (C + I + M)

/// Unit-cost edit distance between two sequences.
template <typename Seq>
std::size_t edit_distance(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Levenshtein distance over Unicode code points (UTF-8 input).
std::size_t levenshtein(std::string_view a, std::string_view b);

std::vector<char32_t> code_points(std::string_view s);
std::vector<std::string> tokens(std::string_view s);

/// Character error rate against a non-empty truth; throws UndefinedMetric.
double cer(std::string_view pred, std::string_view truth);
/// Word error rate over whitespace tokens; throws UndefinedMetric.
double wer(std::string_view pred, std::string_view truth);

/// Counts plus derived rates. Rates are nullopt when undefined.
struct MetricReport {
  EvalCounts counts;
  std::optional<double> precision, recall, f1, accuracy, avg_cer, avg_wer;
  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// Assembles the report; CER/WER are means over non-blank truth cells.
MetricReport report(const Table& pred, const Table& truth);
MetricReport report(const EvalCounts& counts, std::optional<double> avg_cer = {}, std::optional<double> avg_wer = {});

/// metric,value,percent rows. value is the exact fraction (or count),
/// percent is the value rendered to two decimals; "NA" marks undefined rates.
std::string format_report_csv(const MetricReport& r);
MetricReport parse_report_csv(std::string_view text);
/// Aligned two-column text table.
std::string format_report_text(const MetricReport& r);

/// Writes `<path>` as CSV and the same stem with a `.txt` extension as plain text.
void write_report(const MetricReport& r, const std::filesystem::path& csv_path);

}  // namespace gridscan::eval
