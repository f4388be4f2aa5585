#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spinsim {

/// Shortest-safe decimal form with 17 significant digits; parsing it back
/// reproduces the double exactly.
std::string format_double(double v);

/// A rectangular table of text cells with a header row.
class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header);

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return cells_.size(); }
  const std::vector<std::string>& row(std::size_t r) const { return cells_.at(r); }

  /// Throws ConfigError if the width differs from the header.
  void add_row(std::vector<std::string> cells);

  std::size_t column_index(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
  std::vector<std::string> text_column(const std::string& name) const;

  std::string to_string() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
};

/// Builds a table from equally long numeric columns.
CsvTable make_numeric_table(const std::vector<std::string>& header,
                            const std::vector<std::vector<double>>& columns);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Binary PBM (P4): one bit per site, row-major, 1 = occupied (black).
void write_pbm(const std::filesystem::path& path, std::span<const std::uint8_t> bits,
               std::size_t rows, std::size_t cols);

struct PbmImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;
};
PbmImage read_pbm(const std::filesystem::path& path);

}  // namespace spinsim
