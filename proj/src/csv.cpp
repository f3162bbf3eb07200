#include "occmeas/csv.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace occmeas {

std::string format_double(double x) {
  if (x == 0.0) return "0";  // normalize -0
  char buf[40];
  // Shortest representation that round-trips: try increasing precision.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == x) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : ncols_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) body_ += ',';
    body_ += header[i];
  }
  body_ += '\n';
}

void CsvWriter::comment(const std::string& line) {
  comments_ += "# " + line + "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != ncols_) throw std::invalid_argument("CsvWriter: column count mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) body_ += ',';
    body_ += cells[i];
  }
  body_ += '\n';
}

std::string CsvWriter::full_text() const { return comments_ + body_; }

void CsvWriter::write_file(const std::filesystem::path& path) const {
  write_text_atomic(path, full_text());
}

std::string csv_cell(double x) { return format_double(x); }
std::string csv_cell(std::size_t x) { return std::to_string(x); }
std::string csv_cell(long long x) { return std::to_string(x); }
std::string csv_cell(int x) { return std::to_string(x); }

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace occmeas
