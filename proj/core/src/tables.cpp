#include "hardmine/tables.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <system_error>

#include "hardmine/errors.hpp"

namespace hardmine {
namespace {

std::string quote_if_needed(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string quoted = "\"";
  for (char c : cell) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string temp_name(const std::string& filename) { return "." + filename + ".tmp"; }

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buffer;
  const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), result.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    throw Error("csv row width " + std::to_string(row.size()) + " does not match header width " +
                std::to_string(header_.size()));
  }
  rows_.push_back(std::move(row));
}

std::string CsvTable::to_string() const {
  std::string out;
  const auto append_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += quote_if_needed(row[i]);
    }
    out += '\n';
  };
  append_row(header_);
  for (const auto& row : rows_) append_row(row);
  return out;
}

OutputStager::OutputStager(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec) {
    throw Error("cannot create output directory '" + directory_.string() + "': " + ec.message());
  }
}

OutputStager::~OutputStager() {
  std::error_code ec;
  for (const std::string& filename : staged_) {
    std::filesystem::remove(directory_ / temp_name(filename), ec);
  }
}

void OutputStager::stage(const std::string& filename, const std::string& content) {
  const std::filesystem::path path = directory_ / temp_name(filename);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open '" + path.string() + "' for writing");
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) {
    throw Error("failed writing '" + path.string() + "'");
  }
  staged_.push_back(filename);
}

std::vector<std::filesystem::path> OutputStager::commit() {
  std::vector<std::filesystem::path> finals;
  finals.reserve(staged_.size());
  for (const std::string& filename : staged_) {
    const std::filesystem::path from = directory_ / temp_name(filename);
    const std::filesystem::path to = directory_ / filename;
    std::error_code ec;
    std::filesystem::rename(from, to, ec);
    if (ec) {
      throw Error("cannot move '" + from.string() + "' to '" + to.string() + "': " + ec.message());
    }
    finals.push_back(to);
  }
  staged_.clear();
  return finals;
}

}  // namespace hardmine
