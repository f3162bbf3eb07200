#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "occmeas/config.hpp"

namespace occmeas {

struct ReportRecord {
  std::string experiment;
  std::string metric;
  double value = 0.0;
  double stderr_ = 0.0;
  std::string params;
  std::uint64_t seed = 0;
};

/// Collects every number a command emits and writes records.csv. The body is
/// deterministic for a fixed (config, seed); the wall time and timestamp live
/// in header comments so reruns compare byte-identical below the header.
class RecordSink {
 public:
  RecordSink(std::string experiment_id, std::uint64_t seed, std::uint64_t config_hash);

  void add(const std::string& metric, double value, double stderr_ = 0.0,
           const std::string& params = "");

  const std::vector<ReportRecord>& records() const { return records_; }

  void write(const std::filesystem::path& path, double wall_seconds) const;
  std::string body() const;

 private:
  std::string experiment_;
  std::uint64_t seed_;
  std::uint64_t config_hash_;
  std::vector<ReportRecord> records_;
};

}  // namespace occmeas
