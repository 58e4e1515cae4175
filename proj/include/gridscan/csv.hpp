#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gridscan::csv {

using Row = std::vector<std::string>;

/// RFC-4180 parser. Accepts LF or CRLF line ends; a trailing newline does
/// not produce an empty record. Throws FormatError on unbalanced quotes.
std::vector<Row> parse(std::string_view text);

/// Quotes fields containing a comma, quote, CR or LF. Lines end in "\n".
std::string format(const std::vector<Row>& rows);
std::string format_row(const Row& row);

std::vector<Row> read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const std::vector<Row>& rows);

}  // namespace gridscan::csv
