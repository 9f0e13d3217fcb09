#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "malgo/baselines.hpp"
#include "malgo/characteristics.hpp"
#include "malgo/io.hpp"

namespace malgo {

// --family values span the dynamics families and the two surrogate
// characteristics experiments.
struct ExperimentFamily {
  std::optional<SystemFamily> dynamics;
  std::optional<SurrogateKind> surrogate;
  std::string name;

  bool is_dynamics() const { return dynamics.has_value(); }
  static ExperimentFamily from_name(const std::string& name);
};

struct GenerateOptions {
  SystemFamily family = SystemFamily::ClosedTLS;
  int n_train_sys = -1;  // -1: family default
  int n_adapt_sys = -1;
  int n_adapt_points = 3;
  int n_traj = 5;
  int n_steps = 10;
  double dt = 0.1;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool csv_export = false;
};

struct GenerateOutputs {
  std::string dataset_path;
  std::string csv_path;  // empty unless csv_export
  DatasetSplit split;
};

GenerateOutputs run_generate(const GenerateOptions& opt);

struct TrainOptions {
  std::string data_path;
  std::string method = "malgo";  // "malgo" | "imode"
  int total_epochs = -1;         // -1: defaults (250)
  int noise_until = -1;          // defaults 20 (malgo)
  int freeze_from = -1;          // defaults 201 (malgo)
  int batch_size = -1;           // -1: family default
  int s_theta = -1;
  int s_eta = -1;
  double lr_theta = -1;
  double lr_eta = -1;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
};

struct TrainOutputs {
  std::string model_path;
  std::string trainlog_path;
  MetaModel model;
  TrainLog log;
  TrainSchedule schedule;
};

TrainOutputs run_train(const TrainOptions& opt);

struct AdaptOptions {
  std::string model_path;
  std::string data_path;
  int n_restarts = -1;  // -1: defaults (5)
  int max_epochs = -1;  // -1: defaults (10)
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";
};

struct AdaptOutputs {
  std::string results_path;
  std::string adapted_model_path;
  std::vector<AdaptationResult> results;
};

AdaptOutputs run_adapt(const AdaptOptions& opt);

struct EvalOptions {
  std::string model_path;  // adapted model
  std::string data_path;
  std::string out_dir = "out";
};

struct EvalOutputs {
  std::string eval_path;
  std::vector<AdaptationResult> results;  // eta from model, metrics recomputed
};

EvalOutputs run_eval(const EvalOptions& opt);

struct BenchmarkOptions {
  ExperimentFamily family = ExperimentFamily::from_name("closed");
  int n_runs = 10;
  int total_epochs = -1;  // -1: defaults
  double surrogate_noise = 0.05;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";
};

struct BenchmarkOutputs {
  std::string csv_path;
  std::string summary_path;
  std::vector<BenchmarkRow> rows;
};

BenchmarkOutputs run_benchmark(const BenchmarkOptions& opt);

struct AblateOptions {
  ExperimentFamily family = ExperimentFamily::from_name("char-g");
  std::string data_csv;  // when set, real data instead of the surrogate
  std::vector<double> fractions = {0.05, 0.1, 0.2, 0.4};
  int n_seeds = 5;
  int total_epochs = -1;
  double surrogate_noise = 0.05;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";
};

struct AblateOutputs {
  std::string csv_path;
  std::string summary_path;
  std::vector<AblationRow> rows;
};

AblateOutputs run_ablate(const AblateOptions& opt);

struct SurrogateOptions {
  ExperimentFamily family = ExperimentFamily::from_name("char-g");
  double noise = 0.05;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
};

struct SurrogateOutputs {
  std::string csv_path;
  std::vector<CharRecord> records;
};

SurrogateOutputs run_surrogate(const SurrogateOptions& opt);

struct PlotOptions {
  std::string kind;  // etatraj | benchmark | ablation
  std::string csv_path;
  std::string svg_path;
};

void run_plot(const PlotOptions& opt);

}  // namespace malgo
