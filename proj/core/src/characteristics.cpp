#include "malgo/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "malgo/util.hpp"

namespace malgo {

namespace {

constexpr std::array<const char*, 4> kColumnNames = {"v1", "v2", "v3", "target"};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(trim(f));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& s, int line_no, const char* col) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("characteristics csv line " + std::to_string(line_no) +
                             ": cannot parse " + col + " value '" + s + "'");
  }
  if (pos != s.size() || !std::isfinite(v))
    throw std::runtime_error("characteristics csv line " + std::to_string(line_no) +
                             ": cannot parse " + col + " value '" + s + "'");
  return v;
}

int parse_int(const std::string& s, int line_no, const char* col) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("characteristics csv line " + std::to_string(line_no) +
                             ": cannot parse " + col + " value '" + s + "'");
  }
  if (pos != s.size())
    throw std::runtime_error("characteristics csv line " + std::to_string(line_no) +
                             ": cannot parse " + col + " value '" + s + "'");
  return v;
}

}  // namespace

CharRecord NormalizationStats::denormalize(const CharRecord& r) const {
  auto it = per_config.find(r.config_id);
  if (it == per_config.end())
    throw std::invalid_argument("NormalizationStats: unknown config " + std::to_string(r.config_id));
  const auto& s = it->second;
  CharRecord out = r;
  out.v1 = r.v1 * s[0].std + s[0].mean;
  out.v2 = r.v2 * s[1].std + s[1].mean;
  out.v3 = r.v3 * s[2].std + s[2].mean;
  out.target = r.target * s[3].std + s[3].mean;
  return out;
}

std::vector<CharRecord> ingest_char_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};  // empty file -> empty list
  auto header = split_csv_line(line);
  const std::vector<std::string> expected = {"config_id", "v1", "v2", "v3", "target"};
  if (header.size() != expected.size())
    throw std::runtime_error("characteristics csv: expected header config_id,v1,v2,v3,target");
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (header[i] != expected[i])
      throw std::runtime_error("characteristics csv: unknown column '" + header[i] +
                               "' (expected '" + expected[i] + "')");

  std::vector<CharRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 5)
      throw std::runtime_error("characteristics csv line " + std::to_string(line_no) +
                               ": expected 5 fields, got " + std::to_string(fields.size()));
    CharRecord r;
    r.config_id = parse_int(fields[0], line_no, "config_id");
    r.v1 = parse_double(fields[1], line_no, "v1");
    r.v2 = parse_double(fields[2], line_no, "v2");
    r.v3 = parse_double(fields[3], line_no, "v3");
    r.target = parse_double(fields[4], line_no, "target");
    records.push_back(r);
  }
  return records;
}

std::vector<CharRecord> ingest_char_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return ingest_char_csv(in);
}

std::map<int, int> per_config_counts(std::span<const CharRecord> records) {
  std::map<int, int> counts;
  for (const auto& r : records) ++counts[r.config_id];
  return counts;
}

std::pair<std::vector<CharRecord>, NormalizationStats> normalize(
    std::span<const CharRecord> records) {
  std::map<int, std::vector<const CharRecord*>> groups;
  for (const auto& r : records) groups[r.config_id].push_back(&r);

  NormalizationStats stats;
  for (const auto& [cfg, rows] : groups) {
    if (rows.size() < 2)
      throw std::invalid_argument("normalize: config " + std::to_string(cfg) +
                                  " has fewer than 2 records");
    std::array<ColumnStats, 4> s{};
    auto column = [](const CharRecord& r, int c) {
      switch (c) {
        case 0: return r.v1;
        case 1: return r.v2;
        case 2: return r.v3;
        default: return r.target;
      }
    };
    for (int c = 0; c < 4; ++c) {
      double mean = 0;
      for (const auto* r : rows) mean += column(*r, c);
      mean /= static_cast<double>(rows.size());
      double var = 0;
      for (const auto* r : rows) var += (column(*r, c) - mean) * (column(*r, c) - mean);
      var /= static_cast<double>(rows.size());
      if (var <= 0.0)
        throw std::domain_error("normalize: zero variance in column " +
                                std::string(kColumnNames[static_cast<std::size_t>(c)]) +
                                " of config " + std::to_string(cfg));
      s[static_cast<std::size_t>(c)] = {mean, std::sqrt(var)};
    }
    stats.per_config[cfg] = s;
  }

  std::vector<CharRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto& s = stats.per_config.at(r.config_id);
    CharRecord n = r;
    n.v1 = (r.v1 - s[0].mean) / s[0].std;
    n.v2 = (r.v2 - s[1].mean) / s[1].std;
    n.v3 = (r.v3 - s[2].mean) / s[2].std;
    n.target = (r.target - s[3].mean) / s[3].std;
    out.push_back(n);
  }
  return {std::move(out), std::move(stats)};
}

DatasetSplit build_char_split(std::span<const CharRecord> normalized_records,
                              double adapt_fraction, std::uint64_t seed) {
  auto counts = per_config_counts(normalized_records);
  if (counts.size() < 2)
    throw std::invalid_argument("build_char_split: need at least 2 configurations");
  int last_cfg = counts.rbegin()->first;
  int n_last = counts.rbegin()->second;
  int n_adapt = static_cast<int>(std::ceil(adapt_fraction * n_last));
  if (n_adapt < 1) throw std::invalid_argument("build_char_split: adaptation set empty");
  if (n_adapt >= n_last)
    throw std::invalid_argument("build_char_split: no test points left for the last config");

  auto to_tuple = [](const CharRecord& r) {
    DataTuple t;
    t.system_id = r.config_id;
    t.x = Eigen::Vector3d(r.v1, r.v2, r.v3);
    t.y = Eigen::VectorXd::Constant(1, r.target);
    return t;
  };

  DatasetSplit split;
  split.seed = seed;
  split.n_adapt_points = n_adapt;
  std::vector<DataTuple> last_tuples;
  for (const auto& r : normalized_records) {
    if (r.config_id == last_cfg)
      last_tuples.push_back(to_tuple(r));
    else
      split.train.push_back(to_tuple(r));
  }
  for (const auto& [cfg, cnt] : counts)
    if (cfg != last_cfg) split.train_ids.push_back(cfg);
  split.adapt_ids = {last_cfg};

  std::vector<int> idx(last_tuples.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(derive_seed(seed, "char-adapt-subset", static_cast<std::uint64_t>(last_cfg)));
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<char> is_adapt(last_tuples.size(), 0);
  for (int k = 0; k < n_adapt; ++k) is_adapt[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = 1;
  for (std::size_t k = 0; k < last_tuples.size(); ++k)
    (is_adapt[k] ? split.adapt[last_cfg] : split.test[last_cfg]).push_back(last_tuples[k]);
  return split;
}

SurrogateConfig SurrogateConfig::for_kind(SurrogateKind kind) {
  SurrogateConfig cfg;
  cfg.counts = kind == SurrogateKind::GFactor ? std::vector<int>{260, 84, 125}
                                              : std::vector<int>{215, 33, 97};
  return cfg;
}

std::vector<CharRecord> generate_surrogate(const SurrogateConfig& cfg) {
  if (cfg.counts.empty()) throw std::invalid_argument("generate_surrogate: empty counts");
  if (cfg.noise < 0) throw std::invalid_argument("generate_surrogate: negative noise");
  if (cfg.amplitude_dev < 0) throw std::invalid_argument("generate_surrogate: negative amplitude_dev");
  constexpr int kBasis = 4;
  Rng rng = make_rng(derive_seed(cfg.seed, "surrogate-basis"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  // Basis directions and the amplitude profile shared across configurations.
  std::array<Eigen::Vector3d, kBasis> w;
  std::array<double, kBasis> b{}, base{};
  for (int r = 0; r < kBasis; ++r) {
    w[static_cast<std::size_t>(r)] = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    b[static_cast<std::size_t>(r)] = uni(rng);
    base[static_cast<std::size_t>(r)] = normal(rng);
  }

  std::vector<CharRecord> records;
  for (std::size_t c = 0; c < cfg.counts.size(); ++c) {
    int config_id = static_cast<int>(c) + 1;
    Rng crng = make_rng(derive_seed(cfg.seed, "surrogate-config", c));
    std::array<double, kBasis> amp{};
    for (int r = 0; r < kBasis; ++r)
      amp[static_cast<std::size_t>(r)] =
          base[static_cast<std::size_t>(r)] + cfg.amplitude_dev * normal(crng);
    for (int i = 0; i < cfg.counts[c]; ++i) {
      CharRecord rec;
      rec.config_id = config_id;
      rec.v1 = uni(crng);
      rec.v2 = uni(crng);
      rec.v3 = uni(crng);
      Eigen::Vector3d v(rec.v1, rec.v2, rec.v3);
      double t = 0;
      for (int r = 0; r < kBasis; ++r)
        t += amp[static_cast<std::size_t>(r)] *
             std::tanh(w[static_cast<std::size_t>(r)].dot(v) + b[static_cast<std::size_t>(r)]);
      rec.target = t * (1.0 + cfg.noise * normal(crng));
      records.push_back(rec);
    }
  }
  return records;
}

void write_char_csv(std::ostream& os, std::span<const CharRecord> records) {
  os << "config_id,v1,v2,v3,target\n";
  os.precision(17);
  for (const auto& r : records)
    os << r.config_id << "," << r.v1 << "," << r.v2 << "," << r.v3 << "," << r.target << "\n";
}

std::vector<AblationRow> run_ablation(std::span<const CharRecord> records,
                                      std::span<const double> fractions, int n_seeds,
                                      const TrainSchedule& schedule, const AdaptConfig& adapt_cfg,
                                      std::uint64_t master_seed, int threads) {
  if (fractions.empty()) throw std::invalid_argument("run_ablation: no fractions");
  if (n_seeds < 1) throw std::invalid_argument("run_ablation: n_seeds must be >= 1");
  auto [normed, stats] = normalize(records);

  std::vector<AblationRow> rows(fractions.size() * static_cast<std::size_t>(n_seeds));
  parallel_for(rows.size(), threads, [&](std::size_t cell) {
    std::size_t fi = cell / static_cast<std::size_t>(n_seeds);
    int si = static_cast<int>(cell % static_cast<std::size_t>(n_seeds));
    std::uint64_t cell_seed = derive_seed(master_seed, "ablation-cell", cell);
    DatasetSplit split = build_char_split(normed, fractions[fi], cell_seed);
    auto [model, log] = train(split.train, NetworkSpec::characteristics(), schedule, cell_seed);
    AdaptConfig acfg = adapt_cfg;
    acfg.seed = cell_seed;
    int last = split.adapt_ids.front();
    AdaptationResult res = adapt_and_evaluate(model, split.adapt.at(last), split.test.at(last),
                                              std::nullopt, acfg);
    rows[cell] = {fractions[fi], si, res.test_loss};
  });
  return rows;
}

}  // namespace malgo
