#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cerfgp::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
};

/// Reads an RFC-4180 style file: comma separated, double-quote quoting with
/// "" as the escaped quote, first row is the header.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

std::string quote(std::string_view field);
void write_row(std::ostream& out, const Row& row);

/// Fixed significant-digit rendering used for every numeric output file.
std::string format_number(double value, int significant_digits = 10);

}  // namespace cerfgp::csv
