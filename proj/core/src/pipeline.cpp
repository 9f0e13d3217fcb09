#include "malgo/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "malgo/metrics.hpp"
#include "malgo/svg.hpp"

namespace malgo {

namespace fs = std::filesystem;

namespace {

std::string prepare_out_dir(const std::string& out_dir) {
  fs::create_directories(out_dir);
  return out_dir;
}

void dump_resolved(const std::string& out_dir, const std::string& command,
                   const KeyValueConfig& cfg) {
  std::ostringstream ss;
  cfg.dump(ss);
  write_file(out_dir + "/" + command + "_resolved.cfg", ss.str());
}

std::string u64str(std::uint64_t v) { return std::to_string(v); }

std::string fstr(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

// Per-system adaptation seeds inside one benchmark cell.
AdaptConfig cell_adapt_config(bool dynamics, std::uint64_t cell_seed, int sys) {
  AdaptConfig cfg = dynamics ? AdaptConfig::dynamics_defaults()
                             : AdaptConfig::characteristics_defaults();
  cfg.seed = derive_seed(cell_seed, "adapt", static_cast<std::uint64_t>(sys));
  return cfg;
}

}  // namespace

ExperimentFamily ExperimentFamily::from_name(const std::string& name) {
  ExperimentFamily f;
  f.name = name;
  if (auto dyn = family_from_name(name)) {
    f.dynamics = dyn;
    return f;
  }
  if (name == "char-g") {
    f.surrogate = SurrogateKind::GFactor;
    return f;
  }
  if (name == "char-rabi") {
    f.surrogate = SurrogateKind::Rabi;
    return f;
  }
  throw std::invalid_argument(
      "unknown family '" + name + "' (expected closed|open|heisenberg|char-g|char-rabi)");
}

GenerateOutputs run_generate(const GenerateOptions& opt) {
  SplitSizes sizes = default_split_sizes(opt.family);
  int n_train = opt.n_train_sys > 0 ? opt.n_train_sys : sizes.n_train_sys;
  int n_adapt = opt.n_adapt_sys >= 0 ? opt.n_adapt_sys : sizes.n_adapt_sys;

  GenerateOutputs out;
  out.split = build_split(opt.family, n_train, n_adapt, opt.n_adapt_points, opt.dt, opt.seed,
                          {opt.n_traj, opt.n_steps});
  prepare_out_dir(opt.out_dir);
  out.dataset_path = opt.out_dir + "/dataset_" + family_name(opt.family) + ".bin";
  save_dataset(out.split, out.dataset_path);
  if (opt.csv_export) {
    out.csv_path = opt.out_dir + "/dataset_" + family_name(opt.family) + ".csv";
    std::ostringstream ss;
    export_dataset_csv(out.split, ss);
    write_file(out.csv_path, ss.str());
  }

  KeyValueConfig cfg;
  cfg.set("command", "generate");
  cfg.set("family", family_name(opt.family));
  cfg.set("n_train_sys", std::to_string(n_train));
  cfg.set("n_adapt_sys", std::to_string(n_adapt));
  cfg.set("n_adapt_points", std::to_string(opt.n_adapt_points));
  cfg.set("n_traj", std::to_string(opt.n_traj));
  cfg.set("n_steps", std::to_string(opt.n_steps));
  cfg.set("dt", fstr(opt.dt));
  cfg.set("seed", u64str(opt.seed));
  cfg.set("csv_export", opt.csv_export ? "true" : "false");
  cfg.set("out", opt.out_dir);
  dump_resolved(opt.out_dir, "generate", cfg);
  return out;
}

TrainOutputs run_train(const TrainOptions& opt) {
  DatasetSplit split = load_dataset(opt.data_path);
  SystemFamily family = *split.family;
  NetworkSpec spec = NetworkSpec::dynamics(family);

  TrainSchedule sched = TrainSchedule::dynamics_defaults(family);
  if (opt.total_epochs > 0) sched = sched.with_total_epochs(opt.total_epochs);
  if (opt.noise_until >= 0) sched.noise_until = opt.noise_until;
  if (opt.freeze_from > 0) sched.freeze_from = opt.freeze_from;
  if (opt.batch_size > 0) sched.batch_size = opt.batch_size;
  if (opt.s_theta > 0) sched.s_theta = opt.s_theta;
  if (opt.s_eta > 0) sched.s_eta = opt.s_eta;
  if (opt.lr_theta > 0) sched.lr_theta = opt.lr_theta;
  if (opt.lr_eta > 0) sched.lr_eta = opt.lr_eta;

  bool imode = opt.method == "imode";
  if (!imode && opt.method != "malgo")
    throw std::invalid_argument("train: method must be malgo or imode");
  if (imode) sched = sched.schedule_free();

  TrainOutputs out;
  out.schedule = sched;
  auto [model, log] = train(split.train, spec, sched, opt.seed);
  out.model = std::move(model);
  out.log = std::move(log);

  prepare_out_dir(opt.out_dir);
  out.model_path = opt.out_dir + "/model.bin";
  save_model(out.model, out.model_path);
  out.trainlog_path = opt.out_dir + "/trainlog.csv";
  std::ostringstream ss;
  out.log.to_csv(ss);
  write_file(out.trainlog_path, ss.str());

  KeyValueConfig cfg;
  cfg.set("command", "train");
  cfg.set("data", opt.data_path);
  cfg.set("method", opt.method);
  cfg.set("total_epochs", std::to_string(sched.total_epochs));
  cfg.set("noise_until", std::to_string(sched.noise_until));
  cfg.set("freeze_from", std::to_string(sched.freeze_from));
  cfg.set("s_theta", std::to_string(sched.s_theta));
  cfg.set("s_eta", std::to_string(sched.s_eta));
  cfg.set("lr_theta", fstr(sched.lr_theta));
  cfg.set("lr_eta", fstr(sched.lr_eta));
  cfg.set("batch_size", std::to_string(sched.batch_size));
  cfg.set("param_count", std::to_string(DenseNet(spec).param_count()));
  cfg.set("seed", u64str(opt.seed));
  cfg.set("out", opt.out_dir);
  dump_resolved(opt.out_dir, "train", cfg);
  return out;
}

AdaptOutputs run_adapt(const AdaptOptions& opt) {
  MetaModel model = load_model(opt.model_path);
  DatasetSplit split = load_dataset(opt.data_path);
  StateKind kind = state_kind(*split.family);

  AdaptConfig base = AdaptConfig::dynamics_defaults();
  if (opt.n_restarts > 0) base.n_restarts = opt.n_restarts;
  if (opt.max_epochs > 0) base.max_epochs = opt.max_epochs;

  AdaptOutputs out;
  out.results.resize(split.adapt_ids.size());
  parallel_for(split.adapt_ids.size(), opt.threads, [&](std::size_t i) {
    int sys = split.adapt_ids[i];
    AdaptConfig cfg = base;
    cfg.seed = derive_seed(opt.seed, "adapt", static_cast<std::uint64_t>(sys));
    out.results[i] = adapt_and_evaluate(model, split.adapt.at(sys), split.test.at(sys), kind, cfg);
  });

  prepare_out_dir(opt.out_dir);
  out.results_path = opt.out_dir + "/adaptation.csv";
  std::ostringstream ss;
  write_adaptation_csv(ss, out.results, split.instances);
  write_file(out.results_path, ss.str());

  MetaModel adapted;
  adapted.spec = model.spec;
  adapted.theta = model.theta;
  for (const auto& r : out.results) adapted.eta_table[r.system_id] = r.eta_star;
  out.adapted_model_path = opt.out_dir + "/adapted_model.bin";
  save_model(adapted, out.adapted_model_path);

  KeyValueConfig cfg;
  cfg.set("command", "adapt");
  cfg.set("model", opt.model_path);
  cfg.set("data", opt.data_path);
  cfg.set("n_restarts", std::to_string(base.n_restarts));
  cfg.set("max_epochs", std::to_string(base.max_epochs));
  cfg.set("seed", u64str(opt.seed));
  cfg.set("threads", std::to_string(opt.threads));
  cfg.set("out", opt.out_dir);
  dump_resolved(opt.out_dir, "adapt", cfg);
  return out;
}

EvalOutputs run_eval(const EvalOptions& opt) {
  MetaModel model = load_model(opt.model_path);
  DatasetSplit split = load_dataset(opt.data_path);
  StateKind kind = state_kind(*split.family);

  EvalOutputs out;
  for (const auto& [sys, eta] : model.eta_table) {
    auto it = split.test.find(sys);
    if (it == split.test.end()) continue;
    EvalResult ev = evaluate(model, eta, it->second, kind);
    AdaptationResult r;
    r.system_id = sys;
    r.eta_star = eta;
    r.adapt_loss = 0.0;
    r.test_loss = ev.mse;
    r.test_infidelity = ev.mean_infidelity;
    out.results.push_back(std::move(r));
  }
  if (out.results.empty())
    throw std::runtime_error("eval: model eta table shares no system with the dataset test split");

  prepare_out_dir(opt.out_dir);
  out.eval_path = opt.out_dir + "/eval.csv";
  std::ostringstream ss;
  ss << "system_id,test_loss,test_infidelity\n";
  ss.precision(17);
  for (const auto& r : out.results) {
    ss << r.system_id << "," << r.test_loss << ",";
    if (r.test_infidelity) ss << *r.test_infidelity;
    ss << "\n";
  }
  write_file(out.eval_path, ss.str());

  KeyValueConfig cfg;
  cfg.set("command", "eval");
  cfg.set("model", opt.model_path);
  cfg.set("data", opt.data_path);
  cfg.set("out", opt.out_dir);
  dump_resolved(opt.out_dir, "eval", cfg);
  return out;
}

namespace {

// One benchmark measurement: train (if the method needs it), adapt every
// adaptation system, average the test metric over systems.
double benchmark_dynamics_cell(SystemFamily family, const std::string& method, int total_epochs,
                               std::uint64_t master_seed, int run) {
  SplitSizes sizes = default_split_sizes(family);
  std::uint64_t data_seed = derive_seed(master_seed, "bench-data", static_cast<std::uint64_t>(run));
  DatasetSplit split =
      build_split(family, sizes.n_train_sys, sizes.n_adapt_sys, sizes.n_adapt_points, 0.1, data_seed);
  StateKind kind = state_kind(family);
  std::uint64_t cell_seed =
      derive_seed(master_seed, "bench-" + method, static_cast<std::uint64_t>(run));

  TrainSchedule sched = TrainSchedule::dynamics_defaults(family);
  if (total_epochs > 0) sched = sched.with_total_epochs(total_epochs);

  double acc = 0.0;
  int count = 0;
  if (method == "malgo" || method == "imode") {
    NetworkSpec spec = NetworkSpec::dynamics(family);
    MetaModel model;
    if (method == "malgo") {
      model = train(split.train, spec, sched, cell_seed).first;
    } else {
      model = train_imode(split.train, spec, sched, cell_seed).first;
    }
    for (int sys : split.adapt_ids) {
      double infid = 0.0;
      if (method == "malgo") {
        AdaptConfig cfg = cell_adapt_config(true, cell_seed, sys);
        infid = *adapt_and_evaluate(model, split.adapt.at(sys), split.test.at(sys), kind, cfg)
                     .test_infidelity;
      } else {
        SgdAdaptConfig cfg;
        cfg.seed = derive_seed(cell_seed, "adapt", static_cast<std::uint64_t>(sys));
        infid = *adapt_and_evaluate_sgd(model, split.adapt.at(sys), split.test.at(sys), kind, cfg)
                     .test_infidelity;
      }
      acc += infid;
      ++count;
    }
  } else if (method == "mlp") {
    Mlp net(MlpSpec::dynamics(family));
    for (int sys : split.adapt_ids) {
      ScratchConfig cfg;
      cfg.seed = derive_seed(cell_seed, "scratch", static_cast<std::uint64_t>(sys));
      Eigen::VectorXd params = train_scratch_mlp(net, split.adapt.at(sys), cfg);
      acc += *evaluate_mlp(net, params, split.test.at(sys), kind).mean_infidelity;
      ++count;
    }
  } else {
    throw std::invalid_argument("benchmark: unknown method " + method);
  }
  return acc / count;
}

double benchmark_char_cell(SurrogateKind kind, const std::string& method, int total_epochs,
                           double noise, std::uint64_t master_seed, int run) {
  // Fresh surrogate draw per run index, so repeated runs average over the
  // sampled function family rather than one fixed draw.
  SurrogateConfig scfg = SurrogateConfig::for_kind(kind);
  scfg.noise = noise;
  scfg.seed = derive_seed(master_seed, "surrogate", static_cast<std::uint64_t>(run));
  std::vector<CharRecord> records = generate_surrogate(scfg);
  auto [normed, stats] = normalize(records);

  std::uint64_t cell_seed =
      derive_seed(master_seed, "bench-" + method, static_cast<std::uint64_t>(run));
  DatasetSplit split = build_char_split(normed, 0.07, cell_seed);
  int sys = split.adapt_ids.front();

  TrainSchedule sched = TrainSchedule::characteristics_defaults();
  if (total_epochs > 0) sched = sched.with_total_epochs(total_epochs);

  if (method == "malgo" || method == "imode") {
    NetworkSpec spec = NetworkSpec::characteristics();
    if (method == "malgo") {
      MetaModel model = train(split.train, spec, sched, cell_seed).first;
      AdaptConfig cfg = cell_adapt_config(false, cell_seed, sys);
      return adapt_and_evaluate(model, split.adapt.at(sys), split.test.at(sys), std::nullopt, cfg)
          .test_loss;
    }
    MetaModel model = train_imode(split.train, spec, sched, cell_seed).first;
    SgdAdaptConfig cfg;
    cfg.seed = derive_seed(cell_seed, "adapt", static_cast<std::uint64_t>(sys));
    return adapt_and_evaluate_sgd(model, split.adapt.at(sys), split.test.at(sys), std::nullopt, cfg)
        .test_loss;
  }
  if (method == "mlp") {
    Mlp net(MlpSpec::characteristics());
    ScratchConfig cfg;
    cfg.seed = derive_seed(cell_seed, "scratch", static_cast<std::uint64_t>(sys));
    Eigen::VectorXd params = train_scratch_mlp(net, split.adapt.at(sys), cfg);
    return evaluate_mlp(net, params, split.test.at(sys), std::nullopt).mse;
  }
  throw std::invalid_argument("benchmark: unknown method " + method);
}

}  // namespace

BenchmarkOutputs run_benchmark(const BenchmarkOptions& opt) {
  if (opt.n_runs < 1) throw std::invalid_argument("benchmark: n_runs must be >= 1");
  const std::vector<std::string> methods = {"malgo", "imode", "mlp"};
  std::vector<BenchmarkRow> rows(methods.size() * static_cast<std::size_t>(opt.n_runs));

  parallel_for(rows.size(), opt.threads, [&](std::size_t cell) {
    std::size_t mi = cell / static_cast<std::size_t>(opt.n_runs);
    int run = static_cast<int>(cell % static_cast<std::size_t>(opt.n_runs));
    double metric = opt.family.is_dynamics()
                        ? benchmark_dynamics_cell(*opt.family.dynamics, methods[mi],
                                                  opt.total_epochs, opt.seed, run)
                        : benchmark_char_cell(*opt.family.surrogate, methods[mi],
                                              opt.total_epochs, opt.surrogate_noise, opt.seed,
                                              run);
    rows[cell] = {methods[mi], opt.family.name, run, metric};
  });

  BenchmarkOutputs out;
  out.rows = std::move(rows);
  prepare_out_dir(opt.out_dir);
  out.csv_path = opt.out_dir + "/benchmark_" + opt.family.name + ".csv";
  {
    std::ostringstream ss;
    write_benchmark_csv(ss, out.rows);
    write_file(out.csv_path, ss.str());
  }
  out.summary_path = opt.out_dir + "/benchmark_" + opt.family.name + "_summary.csv";
  {
    std::ostringstream ss;
    ss << "method,family,n_runs,log10_mean,log10_std\n";
    ss.precision(17);
    for (const auto& m : methods) {
      std::vector<double> vals;
      for (const auto& r : out.rows)
        if (r.method == m) vals.push_back(r.metric);
      LogAggregate agg = aggregate_log10(vals);
      ss << m << "," << opt.family.name << "," << vals.size() << "," << agg.log_mean << ","
         << agg.log_std << "\n";
    }
    write_file(out.summary_path, ss.str());
  }

  KeyValueConfig cfg;
  cfg.set("command", "benchmark");
  cfg.set("family", opt.family.name);
  cfg.set("n_runs", std::to_string(opt.n_runs));
  cfg.set("total_epochs", std::to_string(opt.total_epochs));
  cfg.set("surrogate_noise", fstr(opt.surrogate_noise));
  cfg.set("seed", u64str(opt.seed));
  cfg.set("threads", std::to_string(opt.threads));
  cfg.set("out", opt.out_dir);
  dump_resolved(opt.out_dir, "benchmark", cfg);
  return out;
}

AblateOutputs run_ablate(const AblateOptions& opt) {
  if (opt.family.is_dynamics() && opt.data_csv.empty())
    throw std::invalid_argument("ablate: family must be char-g or char-rabi");
  std::vector<CharRecord> records;
  if (!opt.data_csv.empty()) {
    records = ingest_char_csv_file(opt.data_csv);
  } else {
    SurrogateConfig scfg = SurrogateConfig::for_kind(*opt.family.surrogate);
    scfg.noise = opt.surrogate_noise;
    scfg.seed = derive_seed(opt.seed, "surrogate");
    records = generate_surrogate(scfg);
  }

  TrainSchedule sched = TrainSchedule::characteristics_defaults();
  if (opt.total_epochs > 0) sched = sched.with_total_epochs(opt.total_epochs);

  AblateOutputs out;
  out.rows = run_ablation(records, opt.fractions, opt.n_seeds, sched,
                          AdaptConfig::characteristics_defaults(), opt.seed, opt.threads);

  prepare_out_dir(opt.out_dir);
  out.csv_path = opt.out_dir + "/ablation_" + opt.family.name + ".csv";
  {
    std::ostringstream ss;
    ss << "fraction,seed,test_loss\n";
    ss.precision(17);
    for (const auto& r : out.rows) ss << r.fraction << "," << r.seed << "," << r.test_loss << "\n";
    write_file(out.csv_path, ss.str());
  }
  out.summary_path = opt.out_dir + "/ablation_" + opt.family.name + "_summary.csv";
  {
    std::ostringstream ss;
    ss << "fraction,n_seeds,log10_mean,log10_std\n";
    ss.precision(17);
    for (double f : opt.fractions) {
      std::vector<double> vals;
      for (const auto& r : out.rows)
        if (r.fraction == f) vals.push_back(r.test_loss);
      LogAggregate agg = aggregate_log10(vals);
      ss << f << "," << vals.size() << "," << agg.log_mean << "," << agg.log_std << "\n";
    }
    write_file(out.summary_path, ss.str());
  }

  KeyValueConfig cfg;
  cfg.set("command", "ablate");
  cfg.set("family", opt.family.name);
  cfg.set("data", opt.data_csv);
  {
    std::ostringstream fss;
    fss.precision(17);
    for (std::size_t i = 0; i < opt.fractions.size(); ++i) {
      if (i) fss << " ";
      fss << opt.fractions[i];
    }
    cfg.set("fractions", fss.str());
  }
  cfg.set("n_seeds", std::to_string(opt.n_seeds));
  cfg.set("total_epochs", std::to_string(opt.total_epochs));
  cfg.set("surrogate_noise", fstr(opt.surrogate_noise));
  cfg.set("seed", u64str(opt.seed));
  cfg.set("threads", std::to_string(opt.threads));
  cfg.set("out", opt.out_dir);
  dump_resolved(opt.out_dir, "ablate", cfg);
  return out;
}

SurrogateOutputs run_surrogate(const SurrogateOptions& opt) {
  if (opt.family.is_dynamics())
    throw std::invalid_argument("surrogate: family must be char-g or char-rabi");
  SurrogateConfig scfg = SurrogateConfig::for_kind(*opt.family.surrogate);
  scfg.noise = opt.noise;
  scfg.seed = derive_seed(opt.seed, "surrogate");

  SurrogateOutputs out;
  out.records = generate_surrogate(scfg);
  prepare_out_dir(opt.out_dir);
  out.csv_path = opt.out_dir + "/surrogate_" + opt.family.name + ".csv";
  std::ostringstream ss;
  write_char_csv(ss, out.records);
  write_file(out.csv_path, ss.str());

  KeyValueConfig cfg;
  cfg.set("command", "surrogate");
  cfg.set("family", opt.family.name);
  cfg.set("noise", fstr(opt.noise));
  cfg.set("seed", u64str(opt.seed));
  cfg.set("out", opt.out_dir);
  dump_resolved(opt.out_dir, "surrogate", cfg);
  return out;
}

void run_plot(const PlotOptions& opt) {
  render_plot(opt.kind, opt.csv_path, opt.svg_path);
}

}  // namespace malgo
