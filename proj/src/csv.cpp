#include "spinsim/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spinsim/errors.hpp"

namespace spinsim {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw ConfigError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header_.size()));
  }
  cells_.push_back(std::move(cells));
}

std::size_t CsvTable::column_index(const std::string& name) const {
  for (std::size_t c = 0; c < header_.size(); ++c) {
    if (header_[c] == name) return c;
  }
  throw ConfigError("CSV has no column \"" + name + "\"");
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const std::size_t c = column_index(name);
  std::vector<double> out;
  out.reserve(cells_.size());
  for (std::size_t r = 0; r < cells_.size(); ++r) {
    const std::string& cell = cells_[r][c];
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || *end != '\0') {
      throw ConfigError("CSV column \"" + name + "\" row " + std::to_string(r + 1) +
                        ": not a number: \"" + cell + "\"");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> CsvTable::text_column(const std::string& name) const {
  const std::size_t c = column_index(name);
  std::vector<std::string> out;
  out.reserve(cells_.size());
  for (const auto& row : cells_) out.push_back(row[c]);
  return out;
}

std::string CsvTable::to_string() const {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) out += ',';
      out += cells[c];
    }
    out += '\n';
  };
  emit(header_);
  for (const auto& row : cells_) emit(row);
  return out;
}

CsvTable make_numeric_table(const std::vector<std::string>& header,
                            const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw ConfigError("CSV header/column count mismatch");
  CsvTable table(header);
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& col : columns) {
    if (col.size() != rows) throw ConfigError("CSV columns differ in length");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> cells;
    cells.reserve(columns.size());
    for (const auto& col : columns) cells.push_back(format_double(col[r]));
    table.add_row(std::move(cells));
  }
  return table;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << table.to_string();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty CSV");
  CsvTable table(split(line));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    table.add_row(split(line));
  }
  return table;
}

void write_pbm(const std::filesystem::path& path, std::span<const std::uint8_t> bits,
               std::size_t rows, std::size_t cols) {
  if (bits.size() != rows * cols) throw ConfigError("PBM size does not match the bit count");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P4\n" << cols << ' ' << rows << '\n';
  const std::size_t stride = (cols + 7) / 8;
  std::vector<char> line(stride);
  for (std::size_t r = 0; r < rows; ++r) {
    std::fill(line.begin(), line.end(), 0);
    for (std::size_t c = 0; c < cols; ++c) {
      if (bits[r * cols + c] != 0) line[c / 8] |= static_cast<char>(0x80u >> (c % 8));
    }
    out.write(line.data(), static_cast<std::streamsize>(stride));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

PbmImage read_pbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string magic;
  PbmImage img;
  in >> magic >> img.cols >> img.rows;
  if (magic != "P4" || !in) throw ConfigError(path.string() + ": not a binary PBM");
  in.get();
  const std::size_t stride = (img.cols + 7) / 8;
  std::vector<char> line(stride);
  img.bits.assign(img.rows * img.cols, 0);
  for (std::size_t r = 0; r < img.rows; ++r) {
    if (!in.read(line.data(), static_cast<std::streamsize>(stride))) {
      throw ConfigError(path.string() + ": truncated PBM");
    }
    for (std::size_t c = 0; c < img.cols; ++c) {
      img.bits[r * img.cols + c] = (static_cast<unsigned char>(line[c / 8]) >> (7 - c % 8)) & 1u;
    }
  }
  return img;
}

}  // namespace spinsim
