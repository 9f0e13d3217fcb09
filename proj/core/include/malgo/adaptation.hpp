#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "malgo/meta_train.hpp"
#include "malgo/optim.hpp"

namespace malgo {

struct AdaptConfig {
  int n_restarts = 5;
  // An adaptation epoch is one LBFGS optimizer step in the usual library
  // sense: a bounded inner loop of line-searched quasi-Newton iterations.
  int max_epochs = 10;
  int lbfgs_iters_per_epoch = 20;
  // Restart 0 starts at the centroid of the trained eta table; remaining
  // starts are standard normal. Extra seed points are injected after the
  // centroid (used to warm-start with a known eta).
  bool seed_centroid = true;
  std::vector<Eigen::VectorXd> extra_seeds;
  LbfgsConfig lbfgs;
  std::uint64_t seed = 0;

  int max_iterations() const { return max_epochs * lbfgs_iters_per_epoch; }

  static AdaptConfig dynamics_defaults();         // 5 restarts x 10 epochs
  static AdaptConfig characteristics_defaults();  // 20 restarts x 2 epochs
};

struct AdaptationResult {
  int system_id = 0;
  Eigen::VectorXd eta_star;
  double adapt_loss = 0.0;
  double test_loss = 0.0;
  std::optional<double> test_infidelity;  // dynamics families only
  std::vector<double> restart_losses;
};

struct EvalResult {
  double mse = 0.0;
  std::optional<double> mean_infidelity;
};

// Minimize the adaptation objective (mean squared error over the adaptation
// tuples, theta frozen) with restarted LBFGS.
AdaptationResult adapt_system(const MetaModel& model, std::span<const DataTuple> adapt_tuples,
                              const AdaptConfig& cfg);

// Mean element-wise MSE and, for quantum states, mean infidelity over a
// test set.
EvalResult evaluate(const MetaModel& model, const Eigen::VectorXd& eta,
                    std::span<const DataTuple> test_tuples, std::optional<StateKind> kind);

// adapt_system followed by evaluate on the held-out tuples.
AdaptationResult adapt_and_evaluate(const MetaModel& model, std::span<const DataTuple> adapt_tuples,
                                    std::span<const DataTuple> test_tuples,
                                    std::optional<StateKind> kind, const AdaptConfig& cfg);

}  // namespace malgo
