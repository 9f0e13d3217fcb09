#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "malgo/quantum.hpp"
#include "malgo/util.hpp"

namespace malgo {

enum class SystemFamily { ClosedTLS, OpenTLS, Heisenberg2 };

std::string family_name(SystemFamily f);
std::optional<SystemFamily> family_from_name(const std::string& name);

// Vectorized state length per family: 4 (ket in C^2), 8 (2x2 rho), 8 (ket in C^4).
int state_dim(SystemFamily f);
// True Hamiltonian parameter count: 1 (delta), 2 (delta, gamma), 3 (J, c1, c2).
int param_dim(SystemFamily f);
StateKind state_kind(SystemFamily f);

struct SystemInstance {
  SystemFamily family;
  Eigen::VectorXd params;
  int id = 0;
};

void validate_instance(const SystemInstance& s);

struct DataTuple {
  int system_id = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

// Train tuples cover the training systems; adaptation and test tuples cover
// the adaptation systems and are disjoint per system.
struct DatasetSplit {
  std::optional<SystemFamily> family;  // empty for characteristics data
  double dt = 0.0;
  std::uint64_t seed = 0;
  int n_adapt_points = 0;
  std::vector<SystemInstance> instances;  // train instances first, then adapt
  std::vector<int> train_ids;
  std::vector<int> adapt_ids;
  std::vector<DataTuple> train;
  std::map<int, std::vector<DataTuple>> adapt;
  std::map<int, std::vector<DataTuple>> test;
};

// Haar-random pure state (complex Gaussian vector, normalized).
QuantumState haar_ket(int dim, Rng& rng);

// Parameter priors: delta and Heisenberg parameters uniform on [0,1),
// gamma exponential with mean 0.2.
std::vector<SystemInstance> sample_instances(SystemFamily f, int n, std::uint64_t seed);

// One trajectory = a Haar-random initial state propagated n_steps times by dt;
// each step contributes one (vec(state_k), vec(state_{k+1})) tuple.
std::vector<DataTuple> generate_trajectories(const SystemInstance& instance, int n_traj,
                                             int n_steps, double dt, std::uint64_t seed);

struct TrajectoryProtocol {
  int n_traj = 5;
  int n_steps = 10;
};

struct SplitSizes {
  int n_train_sys;
  int n_adapt_sys;
  int n_adapt_points = 3;
};

// 15/35 closed, 100/50 open, 300/50 Heisenberg; 3 adaptation points each.
SplitSizes default_split_sizes(SystemFamily f);
int default_batch_size(SystemFamily f);  // 500 / 1000 / 3000

DatasetSplit build_split(SystemFamily f, int n_train_sys, int n_adapt_sys, int n_adapt_points,
                         double dt, std::uint64_t seed, TrajectoryProtocol proto = {});

}  // namespace malgo
