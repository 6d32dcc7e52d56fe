#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hardmine {

/// Shortest decimal form that parses back to the exact same double. This is
/// the one number formatter every table goes through, so equal values always
/// produce equal bytes.
std::string format_double(double value);

/// Minimal CSV assembly: a header row plus string rows, RFC-style quoting
/// applied only when a cell needs it. Rows must match the header width.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> row);
  std::size_t num_rows() const { return rows_.size(); }
  std::string to_string() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// All-or-nothing output writing: content is staged to hidden temp files and
/// renamed into place only on commit, so a failed run never leaves partial
/// tables behind. The destructor discards anything not committed.
class OutputStager {
 public:
  explicit OutputStager(std::filesystem::path directory);
  ~OutputStager();
  OutputStager(const OutputStager&) = delete;
  OutputStager& operator=(const OutputStager&) = delete;

  void stage(const std::string& filename, const std::string& content);
  /// Rename every staged file into place; returns the final paths in staging
  /// order.
  std::vector<std::filesystem::path> commit();

 private:
  std::filesystem::path directory_;
  std::vector<std::string> staged_;  // final filenames, in staging order
};

}  // namespace hardmine
