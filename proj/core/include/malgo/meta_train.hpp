#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "malgo/densenet.hpp"
#include "malgo/systems.hpp"

namespace malgo {

enum class TrainPhase { Noise, Update, Freeze };

std::string phase_name(TrainPhase p);

// Three-phase schedule: epochs <= noise_until resample every eta before each
// theta step; epochs in (noise_until, freeze_from) alternate s_theta theta
// steps with s_eta steps per eta; epochs >= freeze_from keep eta constant.
struct TrainSchedule {
  int total_epochs = 250;
  int noise_until = 20;
  int freeze_from = 201;
  int s_theta = 1;
  int s_eta = 10;
  double lr_theta = 0.01;
  double lr_eta = 0.003;
  int batch_size = 500;

  static TrainSchedule dynamics_defaults(SystemFamily f);
  static TrainSchedule characteristics_defaults();

  // Schedule-free configuration: eta optimized from epoch 1, never frozen.
  TrainSchedule schedule_free() const;

  // Same schedule compressed or stretched to a new epoch count, phase
  // boundaries scaled proportionally (rounded to the nearest epoch).
  TrainSchedule with_total_epochs(int total) const;

  TrainPhase phase(int epoch) const;  // 1-based epoch index
  void validate() const;
};

struct MetaModel {
  NetworkSpec spec;
  Eigen::VectorXd theta;
  std::map<int, Eigen::VectorXd> eta_table;

  Eigen::VectorXd eta_centroid() const;
};

struct TrainLogEntry {
  int epoch = 0;
  TrainPhase phase = TrainPhase::Noise;
  double loss = 0.0;
  std::map<int, Eigen::VectorXd> eta;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  void to_csv(std::ostream& os) const;
};

// Test-only observation points inside the training loop.
struct TrainHooks {
  // after the s_theta steps of one batch: (epoch, batch, theta)
  std::function<void(int, int, const Eigen::VectorXd&)> after_theta_steps;
  // after the eta block of one batch: (epoch, batch, theta, eta_table)
  std::function<void(int, int, const Eigen::VectorXd&, const std::map<int, Eigen::VectorXd>&)>
      after_eta_steps;
  // observed batch gradient of the first theta step: (epoch, batch, grad)
  std::function<void(int, int, const Eigen::VectorXd&)> on_theta_grad;
};

// Bilevel training loop over tuples from multiple systems. Deterministic in
// the seed. Throws on non-finite loss with epoch/batch diagnostics.
std::pair<MetaModel, TrainLog> train(const std::vector<DataTuple>& train_tuples,
                                     const NetworkSpec& spec, const TrainSchedule& schedule,
                                     std::uint64_t seed, const TrainHooks* hooks = nullptr);

// Spearman rank correlation between the learned 1-D eta and the true 1-D
// system parameter over training systems; refuses higher dimensions.
double eta_correlation(const MetaModel& model, const std::vector<SystemInstance>& instances);

}  // namespace malgo
