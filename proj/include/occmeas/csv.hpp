#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace occmeas {

/// Shortest round-trip decimal form of a double; stable across reruns so CSV
/// bodies compare byte-identical.
std::string format_double(double x);

/// CSV buffer with the project dialect: comma separator, '.' decimal, one
/// header row, LF line endings. Comment lines (leading '#') go before the
/// header and are excluded from body comparisons.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void comment(const std::string& line);
  void row(const std::vector<std::string>& cells);

  const std::string& body() const { return body_; }
  std::string full_text() const;

  /// Writes to a temp file in the target directory, then renames into place.
  void write_file(const std::filesystem::path& path) const;

 private:
  std::string comments_;
  std::string body_;
  std::size_t ncols_;
};

/// Cell helpers.
std::string csv_cell(double x);
std::string csv_cell(std::size_t x);
std::string csv_cell(long long x);
std::string csv_cell(int x);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace occmeas
