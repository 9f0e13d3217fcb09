#include "malgo/systems.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace malgo {

std::string family_name(SystemFamily f) {
  switch (f) {
    case SystemFamily::ClosedTLS: return "closed";
    case SystemFamily::OpenTLS: return "open";
    case SystemFamily::Heisenberg2: return "heisenberg";
  }
  throw std::logic_error("family_name: unknown family");
}

std::optional<SystemFamily> family_from_name(const std::string& name) {
  if (name == "closed") return SystemFamily::ClosedTLS;
  if (name == "open") return SystemFamily::OpenTLS;
  if (name == "heisenberg") return SystemFamily::Heisenberg2;
  return std::nullopt;
}

int state_dim(SystemFamily f) {
  switch (f) {
    case SystemFamily::ClosedTLS: return 4;
    case SystemFamily::OpenTLS: return 8;
    case SystemFamily::Heisenberg2: return 8;
  }
  throw std::logic_error("state_dim: unknown family");
}

int param_dim(SystemFamily f) {
  switch (f) {
    case SystemFamily::ClosedTLS: return 1;
    case SystemFamily::OpenTLS: return 2;
    case SystemFamily::Heisenberg2: return 3;
  }
  throw std::logic_error("param_dim: unknown family");
}

StateKind state_kind(SystemFamily f) {
  return f == SystemFamily::OpenTLS ? StateKind::Rho : StateKind::Ket;
}

void validate_instance(const SystemInstance& s) {
  if (s.params.size() != param_dim(s.family))
    throw std::invalid_argument("SystemInstance: parameter count does not match family");
  switch (s.family) {
    case SystemFamily::ClosedTLS:
      if (s.params(0) < 0.0 || s.params(0) >= 1.0)
        throw std::invalid_argument("SystemInstance: delta must be in [0,1)");
      break;
    case SystemFamily::OpenTLS:
      if (s.params(0) < 0.0 || s.params(0) >= 1.0)
        throw std::invalid_argument("SystemInstance: delta must be in [0,1)");
      if (s.params(1) < 0.0) throw std::invalid_argument("SystemInstance: gamma must be >= 0");
      break;
    case SystemFamily::Heisenberg2:
      for (int k = 0; k < 3; ++k)
        if (s.params(k) < 0.0 || s.params(k) >= 1.0)
          throw std::invalid_argument("SystemInstance: Heisenberg parameters must be in [0,1)");
      break;
  }
}

QuantumState haar_ket(int dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXcd v(dim);
  for (int i = 0; i < dim; ++i) {
    double re = normal(rng);
    double im = normal(rng);
    v(i) = Complex(re, im);
  }
  return QuantumState::normalized(v);
}

std::vector<SystemInstance> sample_instances(SystemFamily f, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_instances: n must be >= 1");
  Rng rng = make_rng(derive_seed(seed, "instances"));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0 / 0.2);
  std::vector<SystemInstance> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SystemInstance s;
    s.family = f;
    s.id = i;
    s.params.resize(param_dim(f));
    switch (f) {
      case SystemFamily::ClosedTLS:
        s.params(0) = uni(rng);
        break;
      case SystemFamily::OpenTLS:
        s.params(0) = uni(rng);
        s.params(1) = expo(rng);
        break;
      case SystemFamily::Heisenberg2:
        for (int k = 0; k < 3; ++k) s.params(k) = uni(rng);
        break;
    }
    validate_instance(s);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<DataTuple> generate_trajectories(const SystemInstance& instance, int n_traj,
                                             int n_steps, double dt, std::uint64_t seed) {
  if (n_traj < 1 || n_steps < 1)
    throw std::invalid_argument("generate_trajectories: counts must be >= 1");
  validate_instance(instance);
  Rng rng = make_rng(derive_seed(seed, "traj", static_cast<std::uint64_t>(instance.id)));
  std::vector<DataTuple> out;
  out.reserve(static_cast<std::size_t>(n_traj) * n_steps);

  switch (instance.family) {
    case SystemFamily::ClosedTLS:
    case SystemFamily::Heisenberg2: {
      int d = instance.family == SystemFamily::ClosedTLS ? 2 : 4;
      ComplexMatrix h = instance.family == SystemFamily::ClosedTLS
                            ? tls_hamiltonian(instance.params(0))
                            : heisenberg_hamiltonian(instance.params(0), instance.params(1),
                                                     instance.params(2));
      ComplexMatrix u = expm_hermitian(h, dt);
      for (int t = 0; t < n_traj; ++t) {
        QuantumState psi = haar_ket(d, rng);
        for (int k = 0; k < n_steps; ++k) {
          QuantumState next(u.m * psi.amplitudes());
          out.push_back({instance.id, vectorize(psi), vectorize(next)});
          psi = std::move(next);
        }
      }
      break;
    }
    case SystemFamily::OpenTLS: {
      // One superoperator exponential per instance, reused across steps.
      Eigen::Matrix4cd prop = Eigen::Matrix4cd(
          (lindblad_superoperator(instance.params(0), instance.params(1)).m * dt).exp());
      for (int t = 0; t < n_traj; ++t) {
        DensityMatrix rho = DensityMatrix::from_ket(haar_ket(2, rng));
        for (int k = 0; k < n_steps; ++k) {
          Eigen::Vector4cd v;
          v << rho.matrix()(0, 0), rho.matrix()(0, 1), rho.matrix()(1, 0), rho.matrix()(1, 1);
          Eigen::Vector4cd w = prop * v;
          Eigen::Matrix2cd next_m;
          next_m << w(0), w(1), w(2), w(3);
          next_m = 0.5 * (next_m + next_m.adjoint()).eval();
          DensityMatrix next(next_m);
          out.push_back({instance.id, vectorize(rho), vectorize(next)});
          rho = next;
        }
      }
      break;
    }
  }
  return out;
}

SplitSizes default_split_sizes(SystemFamily f) {
  switch (f) {
    case SystemFamily::ClosedTLS: return {15, 35, 3};
    case SystemFamily::OpenTLS: return {100, 50, 3};
    case SystemFamily::Heisenberg2: return {300, 50, 3};
  }
  throw std::logic_error("default_split_sizes: unknown family");
}

int default_batch_size(SystemFamily f) {
  switch (f) {
    case SystemFamily::ClosedTLS: return 500;
    case SystemFamily::OpenTLS: return 1000;
    case SystemFamily::Heisenberg2: return 3000;
  }
  throw std::logic_error("default_batch_size: unknown family");
}

DatasetSplit build_split(SystemFamily f, int n_train_sys, int n_adapt_sys, int n_adapt_points,
                         double dt, std::uint64_t seed, TrajectoryProtocol proto) {
  int tuples_per_system = proto.n_traj * proto.n_steps;
  if (n_adapt_points >= tuples_per_system)
    throw std::invalid_argument("build_split: n_adapt_points must be < tuples per system");
  if (n_train_sys < 1 || n_adapt_sys < 0)
    throw std::invalid_argument("build_split: invalid system counts");

  DatasetSplit split;
  split.family = f;
  split.dt = dt;
  split.seed = seed;
  split.n_adapt_points = n_adapt_points;
  split.instances = sample_instances(f, n_train_sys + n_adapt_sys, seed);

  for (int i = 0; i < n_train_sys; ++i) split.train_ids.push_back(split.instances[i].id);
  for (int i = n_train_sys; i < n_train_sys + n_adapt_sys; ++i)
    split.adapt_ids.push_back(split.instances[i].id);

  for (int id : split.train_ids) {
    auto tuples =
        generate_trajectories(split.instances[id], proto.n_traj, proto.n_steps, dt, seed);
    split.train.insert(split.train.end(), tuples.begin(), tuples.end());
  }
  for (int id : split.adapt_ids) {
    auto tuples =
        generate_trajectories(split.instances[id], proto.n_traj, proto.n_steps, dt, seed);
    // Uniform random adaptation subset, per-system child seed.
    std::vector<int> idx(tuples.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_rng(derive_seed(seed, "adapt-subset", static_cast<std::uint64_t>(id)));
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<DataTuple>&adapt = split.adapt[id], &test = split.test[id];
    std::vector<char> is_adapt(tuples.size(), 0);
    for (int k = 0; k < n_adapt_points; ++k) is_adapt[idx[k]] = 1;
    for (std::size_t k = 0; k < tuples.size(); ++k)
      (is_adapt[k] ? adapt : test).push_back(tuples[k]);
  }
  return split;
}

}  // namespace malgo
