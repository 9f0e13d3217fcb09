#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "malgo/util.hpp"

namespace malgo {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. State is single-owner.
class Adam {
 public:
  Adam(Eigen::Index dim, AdamConfig cfg);

  // In-place update; throws on shape mismatch or non-finite gradient.
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  void reset();

  const Eigen::VectorXd& m() const { return m_; }
  const Eigen::VectorXd& v() const { return v_; }
  long t() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

void sgd_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

// Objective fills the gradient and returns the value.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LbfgsConfig {
  int memory = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_evals = 25;
  double grad_tol = 1e-12;
};

struct LbfgsDiagnostics {
  int iterations = 0;
  int func_evals = 0;
  int line_search_failures = 0;  // fell back to backtracking steepest descent
  int skipped_pairs = 0;         // curvature condition s'y > 0 violated
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double f = 0.0;
  LbfgsDiagnostics diag;
};

// Limited-memory BFGS with a strong-Wolfe line search; returns the best
// iterate seen. Throws std::domain_error when the objective is non-finite at
// the start point.
MinimizeResult lbfgs_minimize(const Objective& obj, const Eigen::VectorXd& x0, int max_iters,
                              const LbfgsConfig& cfg = {});

struct RestartResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int best_index = -1;
  std::vector<double> restart_losses;  // final loss per restart (inf if diverged)
};

// Runs lbfgs_minimize from n_restarts sampled starts and keeps the minimum;
// ties break toward the lowest restart index. sampler(r, rng) produces the
// start point of restart r from a per-restart child generator.
RestartResult restarted_minimize(const Objective& obj,
                                 const std::function<Eigen::VectorXd(int, Rng&)>& sampler,
                                 int n_restarts, int max_iters, std::uint64_t seed,
                                 const LbfgsConfig& cfg = {});

}  // namespace malgo
