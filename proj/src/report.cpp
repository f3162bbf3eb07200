#include "occmeas/report.hpp"

#include "occmeas/csv.hpp"

namespace occmeas {

RecordSink::RecordSink(std::string experiment_id, std::uint64_t seed, std::uint64_t config_hash)
    : experiment_(std::move(experiment_id)), seed_(seed), config_hash_(config_hash) {}

void RecordSink::add(const std::string& metric, double value, double stderr_,
                     const std::string& params) {
  records_.push_back(ReportRecord{experiment_, metric, value, stderr_, params, seed_});
}

std::string RecordSink::body() const {
  CsvWriter csv({"experiment", "metric", "value", "stderr", "params", "seed", "config_hash"});
  for (const auto& r : records_) {
    csv.row({r.experiment, r.metric, csv_cell(r.value), csv_cell(r.stderr_), r.params,
             std::to_string(r.seed), std::to_string(config_hash_)});
  }
  return csv.body();
}

void RecordSink::write(const std::filesystem::path& path, double wall_seconds) const {
  CsvWriter csv({"experiment", "metric", "value", "stderr", "params", "seed", "config_hash"});
  csv.comment("wall_time_s: " + format_double(wall_seconds));
  for (const auto& r : records_) {
    csv.row({r.experiment, r.metric, csv_cell(r.value), csv_cell(r.stderr_), r.params,
             std::to_string(r.seed), std::to_string(config_hash_)});
  }
  csv.write_file(path);
}

}  // namespace occmeas
