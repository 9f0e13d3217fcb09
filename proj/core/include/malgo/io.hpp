#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "malgo/adaptation.hpp"
#include "malgo/meta_train.hpp"
#include "malgo/systems.hpp"

namespace malgo {

// Self-describing binary dataset container (magic MALGODS1, version 1,
// little-endian 64-bit floats). Dynamics families only; characteristics
// data lives in CSV.
void save_dataset(const DatasetSplit& split, const std::string& path);
DatasetSplit load_dataset(const std::string& path);

// Human-readable export: one row per tuple across all three sections.
void export_dataset_csv(const DatasetSplit& split, std::ostream& os);
std::size_t dataset_tuple_count(const DatasetSplit& split);

// Model checkpoint (magic MALGOMD1, version 1): NetworkSpec, flat theta,
// and the eta table with system ids.
void save_model(const MetaModel& model, const std::string& path);
MetaModel load_model(const std::string& path);

// Plain-text key-value run configuration ("key = value" lines, '#' comments).
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig parse_file(const std::string& path);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  // Rejects keys outside the allowed set (unknown keys are configuration
  // errors, not typo fodder).
  void require_known(const std::set<std::string>& allowed) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  void dump(std::ostream& os) const;  // sorted, reproducible

 private:
  std::map<std::string, std::string> entries_;
};

// Adaptation results CSV (one row per system).
void write_adaptation_csv(std::ostream& os, std::span<const AdaptationResult> results,
                          const std::vector<SystemInstance>& instances);

struct BenchmarkRow {
  std::string method;
  std::string family;
  int run = 0;
  double metric = 0;  // mean test infidelity (dynamics) or test loss (characteristics)
};

void write_benchmark_csv(std::ostream& os, std::span<const BenchmarkRow> rows);
std::vector<BenchmarkRow> read_benchmark_csv(std::istream& in);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace malgo
