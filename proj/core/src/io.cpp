#include "malgo/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace malgo {

namespace {

constexpr char kDatasetMagic[8] = {'M', 'A', 'L', 'G', 'O', 'D', 'S', '1'};
constexpr char kModelMagic[8] = {'M', 'A', 'L', 'G', 'O', 'M', 'D', '1'};

void write_raw(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("unexpected end of file");
}

void write_u32(std::ostream& os, std::uint32_t v) { write_raw(os, &v, 4); }
void write_u64(std::ostream& os, std::uint64_t v) { write_raw(os, &v, 8); }
void write_f64(std::ostream& os, double v) { write_raw(os, &v, 8); }

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v;
  read_raw(is, &v, 4);
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v;
  read_raw(is, &v, 8);
  return v;
}
double read_f64(std::istream& is) {
  double v;
  read_raw(is, &v, 8);
  return v;
}

void write_vec(std::ostream& os, const Eigen::VectorXd& v) {
  write_raw(os, v.data(), static_cast<std::size_t>(v.size()) * 8);
}

Eigen::VectorXd read_vec(std::istream& is, Eigen::Index n) {
  Eigen::VectorXd v(n);
  read_raw(is, v.data(), static_cast<std::size_t>(n) * 8);
  return v;
}

void write_tuple_section(std::ostream& os, std::span<const DataTuple> tuples, int x_dim,
                         int y_dim) {
  write_u64(os, tuples.size());
  for (const auto& t : tuples) {
    if (t.x.size() != x_dim || t.y.size() != y_dim)
      throw std::invalid_argument("save_dataset: tuple dimension mismatch");
    write_u32(os, static_cast<std::uint32_t>(t.system_id));
    write_vec(os, t.x);
    write_vec(os, t.y);
  }
}

std::vector<DataTuple> read_tuple_section(std::istream& is, int x_dim, int y_dim) {
  std::uint64_t n = read_u64(is);
  std::vector<DataTuple> tuples;
  tuples.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    DataTuple t;
    t.system_id = static_cast<int>(read_u32(is));
    t.x = read_vec(is, x_dim);
    t.y = read_vec(is, y_dim);
    tuples.push_back(std::move(t));
  }
  return tuples;
}

}  // namespace

void save_dataset(const DatasetSplit& split, const std::string& path) {
  if (!split.family)
    throw std::invalid_argument("save_dataset: binary container is for dynamics families");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  int dim = state_dim(*split.family);

  write_raw(os, kDatasetMagic, 8);
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(*split.family));
  write_f64(os, split.dt);
  write_u64(os, split.seed);
  write_u32(os, static_cast<std::uint32_t>(split.n_adapt_points));
  write_u32(os, static_cast<std::uint32_t>(dim));
  write_u32(os, static_cast<std::uint32_t>(dim));

  write_u32(os, static_cast<std::uint32_t>(split.instances.size()));
  for (const auto& inst : split.instances) {
    write_u32(os, static_cast<std::uint32_t>(inst.id));
    write_u32(os, static_cast<std::uint32_t>(inst.params.size()));
    write_vec(os, inst.params);
  }
  write_u32(os, static_cast<std::uint32_t>(split.train_ids.size()));
  for (int id : split.train_ids) write_u32(os, static_cast<std::uint32_t>(id));
  write_u32(os, static_cast<std::uint32_t>(split.adapt_ids.size()));
  for (int id : split.adapt_ids) write_u32(os, static_cast<std::uint32_t>(id));

  write_tuple_section(os, split.train, dim, dim);
  std::uint64_t n_adapt = 0, n_test = 0;
  for (const auto& [id, v] : split.adapt) n_adapt += v.size();
  for (const auto& [id, v] : split.test) n_test += v.size();
  write_u64(os, n_adapt);
  for (const auto& [id, v] : split.adapt)
    for (const auto& t : v) {
      write_u32(os, static_cast<std::uint32_t>(t.system_id));
      write_vec(os, t.x);
      write_vec(os, t.y);
    }
  write_u64(os, n_test);
  for (const auto& [id, v] : split.test)
    for (const auto& t : v) {
      write_u32(os, static_cast<std::uint32_t>(t.system_id));
      write_vec(os, t.x);
      write_vec(os, t.y);
    }
  if (!os) throw std::runtime_error("write failure on " + path);
}

DatasetSplit load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[8];
  read_raw(is, magic, 8);
  if (std::memcmp(magic, kDatasetMagic, 8) != 0)
    throw std::runtime_error(path + ": not a dataset file (bad magic)");
  std::uint32_t version = read_u32(is);
  if (version != 1) throw std::runtime_error(path + ": unsupported dataset version");

  DatasetSplit split;
  split.family = static_cast<SystemFamily>(read_u32(is));
  split.dt = read_f64(is);
  split.seed = read_u64(is);
  split.n_adapt_points = static_cast<int>(read_u32(is));
  int x_dim = static_cast<int>(read_u32(is));
  int y_dim = static_cast<int>(read_u32(is));

  std::uint32_t n_inst = read_u32(is);
  for (std::uint32_t i = 0; i < n_inst; ++i) {
    SystemInstance inst;
    inst.family = *split.family;
    inst.id = static_cast<int>(read_u32(is));
    std::uint32_t np = read_u32(is);
    inst.params = read_vec(is, np);
    split.instances.push_back(std::move(inst));
  }
  std::uint32_t n_train_ids = read_u32(is);
  for (std::uint32_t i = 0; i < n_train_ids; ++i)
    split.train_ids.push_back(static_cast<int>(read_u32(is)));
  std::uint32_t n_adapt_ids = read_u32(is);
  for (std::uint32_t i = 0; i < n_adapt_ids; ++i)
    split.adapt_ids.push_back(static_cast<int>(read_u32(is)));

  split.train = read_tuple_section(is, x_dim, y_dim);
  for (auto& t : read_tuple_section(is, x_dim, y_dim)) {
    int id = t.system_id;
    split.adapt[id].push_back(std::move(t));
  }
  for (auto& t : read_tuple_section(is, x_dim, y_dim)) {
    int id = t.system_id;
    split.test[id].push_back(std::move(t));
  }
  return split;
}

std::size_t dataset_tuple_count(const DatasetSplit& split) {
  std::size_t n = split.train.size();
  for (const auto& [id, v] : split.adapt) n += v.size();
  for (const auto& [id, v] : split.test) n += v.size();
  return n;
}

void export_dataset_csv(const DatasetSplit& split, std::ostream& os) {
  int dim = split.train.empty() ? 0 : static_cast<int>(split.train.front().x.size());
  for (const auto& [id, v] : split.adapt)
    if (!v.empty()) dim = static_cast<int>(v.front().x.size());
  os << "section,system_id";
  for (int k = 0; k < dim; ++k) os << ",x" << k;
  for (int k = 0; k < dim; ++k) os << ",y" << k;
  os << "\n";
  os.precision(17);
  auto row = [&](const char* section, const DataTuple& t) {
    os << section << "," << t.system_id;
    for (Eigen::Index k = 0; k < t.x.size(); ++k) os << "," << t.x(k);
    for (Eigen::Index k = 0; k < t.y.size(); ++k) os << "," << t.y(k);
    os << "\n";
  };
  for (const auto& t : split.train) row("train", t);
  for (const auto& [id, v] : split.adapt)
    for (const auto& t : v) row("adapt", t);
  for (const auto& [id, v] : split.test)
    for (const auto& t : v) row("test", t);
}

void save_model(const MetaModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_raw(os, kModelMagic, 8);
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(model.spec.state_dim));
  write_u32(os, static_cast<std::uint32_t>(model.spec.eta_dim));
  write_u32(os, static_cast<std::uint32_t>(model.spec.hidden_layers));
  write_u32(os, static_cast<std::uint32_t>(model.spec.hidden_width));
  write_u32(os, static_cast<std::uint32_t>(model.spec.output_dim));
  write_u32(os, 0);  // activation: tanh
  write_u64(os, static_cast<std::uint64_t>(model.theta.size()));
  write_vec(os, model.theta);
  write_u32(os, static_cast<std::uint32_t>(model.eta_table.size()));
  for (const auto& [id, eta] : model.eta_table) {
    write_u32(os, static_cast<std::uint32_t>(id));
    if (eta.size() != model.spec.eta_dim)
      throw std::invalid_argument("save_model: eta dimension mismatch");
    write_vec(os, eta);
  }
  if (!os) throw std::runtime_error("write failure on " + path);
}

MetaModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[8];
  read_raw(is, magic, 8);
  if (std::memcmp(magic, kModelMagic, 8) != 0)
    throw std::runtime_error(path + ": not a model file (bad magic)");
  std::uint32_t version = read_u32(is);
  if (version != 1) throw std::runtime_error(path + ": unsupported model version");

  MetaModel model;
  model.spec.state_dim = static_cast<int>(read_u32(is));
  model.spec.eta_dim = static_cast<int>(read_u32(is));
  model.spec.hidden_layers = static_cast<int>(read_u32(is));
  model.spec.hidden_width = static_cast<int>(read_u32(is));
  model.spec.output_dim = static_cast<int>(read_u32(is));
  std::uint32_t act = read_u32(is);
  if (act != 0) throw std::runtime_error(path + ": unknown activation id");
  model.spec.activation = Activation::Tanh;
  std::uint64_t theta_len = read_u64(is);
  model.theta = read_vec(is, static_cast<Eigen::Index>(theta_len));
  std::uint32_t n_eta = read_u32(is);
  for (std::uint32_t i = 0; i < n_eta; ++i) {
    int id = static_cast<int>(read_u32(is));
    model.eta_table[id] = read_vec(is, model.spec.eta_dim);
  }
  return model;
}

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r\n");
      if (b == std::string::npos) return std::string();
      auto e = s.find_last_not_of(" \t\r\n");
      return s.substr(b, e - b + 1);
    };
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
    cfg.entries_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse(in);
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

const std::string& KeyValueConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw std::out_of_range("config key not set: " + key);
  return it->second;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

void KeyValueConfig::require_known(const std::set<std::string>& allowed) const {
  for (const auto& [k, v] : entries_)
    if (!allowed.count(k)) throw std::runtime_error("unknown config key: " + k);
}

void KeyValueConfig::dump(std::ostream& os) const {
  for (const auto& [k, v] : entries_) os << k << " = " << v << "\n";
}

void write_adaptation_csv(std::ostream& os, std::span<const AdaptationResult> results,
                          const std::vector<SystemInstance>& instances) {
  int n_params = 0, n_eta = 0;
  for (const auto& r : results) n_eta = std::max<int>(n_eta, static_cast<int>(r.eta_star.size()));
  std::map<int, const SystemInstance*> by_id;
  for (const auto& inst : instances) {
    by_id[inst.id] = &inst;
    n_params = std::max<int>(n_params, static_cast<int>(inst.params.size()));
  }
  os << "system_id";
  for (int k = 0; k < n_params; ++k) os << ",param_" << k;
  for (int k = 0; k < n_eta; ++k) os << ",eta_" << k;
  os << ",adapt_loss,test_loss,test_infidelity\n";
  os.precision(17);
  for (const auto& r : results) {
    os << r.system_id;
    auto it = by_id.find(r.system_id);
    for (int k = 0; k < n_params; ++k) {
      os << ",";
      if (it != by_id.end() && k < it->second->params.size()) os << it->second->params(k);
    }
    for (int k = 0; k < n_eta; ++k) {
      os << ",";
      if (k < r.eta_star.size()) os << r.eta_star(k);
    }
    os << "," << r.adapt_loss << "," << r.test_loss << ",";
    if (r.test_infidelity) os << *r.test_infidelity;
    os << "\n";
  }
}

void write_benchmark_csv(std::ostream& os, std::span<const BenchmarkRow> rows) {
  os << "method,family,run,metric\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.method << "," << r.family << "," << r.run << "," << r.metric << "\n";
}

std::vector<BenchmarkRow> read_benchmark_csv(std::istream& in) {
  std::vector<BenchmarkRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != "method,family,run,metric")
    throw std::runtime_error("benchmark csv: unexpected header '" + line + "'");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    BenchmarkRow r;
    std::string run_s, metric_s;
    if (!std::getline(ss, r.method, ',') || !std::getline(ss, r.family, ',') ||
        !std::getline(ss, run_s, ',') || !std::getline(ss, metric_s))
      throw std::runtime_error("benchmark csv line " + std::to_string(line_no) + ": malformed");
    r.run = std::stoi(run_s);
    r.metric = std::stod(metric_s);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failure on " + path);
}

}  // namespace malgo
