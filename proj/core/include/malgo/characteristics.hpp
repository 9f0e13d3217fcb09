#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "malgo/adaptation.hpp"
#include "malgo/meta_train.hpp"
#include "malgo/systems.hpp"

namespace malgo {

// One measured point: barrier gate voltages and the regression target
// (g-factor or Rabi frequency) for one gate-voltage configuration.
struct CharRecord {
  int config_id = 0;
  double v1 = 0, v2 = 0, v3 = 0;
  double target = 0;
};

struct ColumnStats {
  double mean = 0;
  double std = 0;  // population std
};

struct NormalizationStats {
  // Per configuration: stats for v1, v2, v3, target in that order.
  std::map<int, std::array<ColumnStats, 4>> per_config;

  CharRecord denormalize(const CharRecord& r) const;
};

// Expects the documented CSV header "config_id,v1,v2,v3,target"; duplicate
// voltage rows are retained. Malformed rows raise with their line number.
std::vector<CharRecord> ingest_char_csv(std::istream& in);
std::vector<CharRecord> ingest_char_csv_file(const std::string& path);

std::map<int, int> per_config_counts(std::span<const CharRecord> records);

// Per-configuration z-scoring of all four columns; needs >= 2 records per
// configuration and nonzero variance in every column.
std::pair<std::vector<CharRecord>, NormalizationStats> normalize(
    std::span<const CharRecord> records);

// All but the last configuration (highest id) train; of the last one,
// ceil(adapt_fraction * n) random points adapt and the rest test.
DatasetSplit build_char_split(std::span<const CharRecord> normalized_records,
                              double adapt_fraction, std::uint64_t seed);

enum class SurrogateKind { GFactor, Rabi };

// Synthetic stand-in for the unpublished device data: per configuration the
// target is a smooth random function of the voltages built from basis
// directions shared across configurations. Per-configuration amplitudes vary
// around a shared profile (amplitude_dev controls how far the configurations
// drift apart), plus multiplicative measurement noise.
struct SurrogateConfig {
  std::vector<int> counts = {260, 84, 125};  // g-factor sizes; Rabi uses {215, 33, 97}
  double noise = 0.05;
  double amplitude_dev = 0.35;
  std::uint64_t seed = 1;

  static SurrogateConfig for_kind(SurrogateKind kind);
};

std::vector<CharRecord> generate_surrogate(const SurrogateConfig& cfg);

void write_char_csv(std::ostream& os, std::span<const CharRecord> records);

struct AblationRow {
  double fraction = 0;
  int seed = 0;
  double test_loss = 0;
};

// Full train+adapt+evaluate cycle per (fraction, seed) cell.
std::vector<AblationRow> run_ablation(std::span<const CharRecord> records,
                                      std::span<const double> fractions, int n_seeds,
                                      const TrainSchedule& schedule, const AdaptConfig& adapt_cfg,
                                      std::uint64_t master_seed, int threads = 0);

}  // namespace malgo
