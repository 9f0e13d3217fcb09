#include <benchmark/benchmark.h>

#include "malgo/adaptation.hpp"
#include "malgo/densenet.hpp"
#include "malgo/optim.hpp"
#include "malgo/quantum.hpp"
#include "malgo/systems.hpp"

using namespace malgo;

static void BM_ExpmHermitian4(benchmark::State& state) {
  ComplexMatrix h = heisenberg_hamiltonian(0.3, 0.6, 0.1);
  double t = 0.1;
  for (auto _ : state) {
    ComplexMatrix u = expm_hermitian(h, t);
    benchmark::DoNotOptimize(u.m.data());
    t += 1e-9;  // defeat caching of the t == 0 shortcut
  }
}
BENCHMARK(BM_ExpmHermitian4);

static void BM_LindbladStep(benchmark::State& state) {
  Rng rng = make_rng(5);
  DensityMatrix rho = DensityMatrix::from_ket(haar_ket(2, rng));
  for (auto _ : state) {
    DensityMatrix out = propagate_lindblad(rho, 0.4, 0.2, 0.1);
    benchmark::DoNotOptimize(out.matrix().data());
  }
}
BENCHMARK(BM_LindbladStep);

static void BM_DenseNetForwardBatch(benchmark::State& state) {
  NetworkSpec spec = NetworkSpec::dynamics(SystemFamily::ClosedTLS);
  DenseNet net(spec);
  Eigen::VectorXd theta = net.init_params(1);
  const Eigen::Index b = state.range(0);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(spec.state_dim, b);
  Eigen::MatrixXd eta = Eigen::MatrixXd::Random(spec.eta_dim, b);
  DenseNet::Workspace ws;
  for (auto _ : state) {
    const Eigen::MatrixXd& out = net.forward_batch(theta, x, eta, ws);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_DenseNetForwardBatch)->Arg(1)->Arg(64)->Arg(500);

static void BM_DenseNetBackwardBatch(benchmark::State& state) {
  NetworkSpec spec = NetworkSpec::dynamics(SystemFamily::ClosedTLS);
  DenseNet net(spec);
  Eigen::VectorXd theta = net.init_params(1);
  const Eigen::Index b = state.range(0);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(spec.state_dim, b);
  Eigen::MatrixXd eta = Eigen::MatrixXd::Random(spec.eta_dim, b);
  Eigen::MatrixXd up = Eigen::MatrixXd::Random(spec.output_dim, b);
  DenseNet::Workspace ws;
  net.forward_batch(theta, x, eta, ws);
  Eigen::VectorXd d_theta(net.param_count());
  Eigen::MatrixXd d_eta;
  for (auto _ : state) {
    d_theta.setZero();
    net.backward_batch(theta, ws, up, &d_theta, &d_eta);
    benchmark::DoNotOptimize(d_theta.data());
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_DenseNetBackwardBatch)->Arg(64)->Arg(500);

static void BM_LbfgsRosenbrock(benchmark::State& state) {
  Objective rosen = [](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
    double a = 1.0 - v(0);
    double b = v(1) - v(0) * v(0);
    grad.resize(2);
    grad(0) = -2.0 * a - 400.0 * v(0) * b;
    grad(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  for (auto _ : state) {
    MinimizeResult res = lbfgs_minimize(rosen, x0, 100);
    benchmark::DoNotOptimize(res.f);
  }
}
BENCHMARK(BM_LbfgsRosenbrock);

BENCHMARK_MAIN();
