#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "malgo/adaptation.hpp"

using namespace malgo;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Network whose output is affine in (x, eta): all hidden weights zero, so the
// output layer sees concat(x, eta, tanh(0)...)= (x, eta, 0...).
MetaModel linear_model(std::mt19937_64& rng, int state_dim, int eta_dim, int out_dim) {
  NetworkSpec spec;
  spec.state_dim = state_dim;
  spec.eta_dim = eta_dim;
  spec.hidden_layers = 2;
  spec.hidden_width = 5;
  spec.output_dim = out_dim;
  DenseNet net(spec);
  VectorXd theta = VectorXd::Zero(net.param_count());
  const auto& out = net.layers().back();
  std::normal_distribution<double> n(0.0, 0.7);
  for (int c = 0; c < state_dim + eta_dim; ++c)
    for (int r = 0; r < out_dim; ++r) theta(out.w_offset + c * out.out + r) = n(rng);
  for (int r = 0; r < out_dim; ++r) theta(out.b_offset + r) = n(rng);
  MetaModel model;
  model.spec = spec;
  model.theta = std::move(theta);
  model.eta_table[0] = VectorXd::Zero(eta_dim);
  return model;
}

// Extracts the affine map f(x, eta) = A x + B eta + c of a linear_model.
void affine_parts(const MetaModel& model, MatrixXd& a, MatrixXd& b, VectorXd& c) {
  DenseNet net(model.spec);
  int sd = model.spec.state_dim, ed = model.spec.eta_dim, od = model.spec.output_dim;
  c = net.forward(model.theta, VectorXd::Zero(sd), VectorXd::Zero(ed));
  a.resize(od, sd);
  b.resize(od, ed);
  for (int k = 0; k < sd; ++k)
    a.col(k) = net.forward(model.theta, VectorXd::Unit(sd, k), VectorXd::Zero(ed)) - c;
  for (int k = 0; k < ed; ++k)
    b.col(k) = net.forward(model.theta, VectorXd::Zero(sd), VectorXd::Unit(ed, k)) - c;
}

}  // namespace

TEST_CASE("adaptation of a linear-in-eta model matches the normal equations") {
  std::mt19937_64 rng(71);
  MetaModel model = linear_model(rng, 3, 2, 4);
  MatrixXd a, b;
  VectorXd c;
  affine_parts(model, a, b, c);

  std::vector<DataTuple> tuples;
  VectorXd eta_true(2);
  eta_true << 0.8, -0.3;
  for (int k = 0; k < 3; ++k) {
    VectorXd x = testutil::random_vector(rng, 3);
    tuples.push_back({7, x, a * x + b * eta_true + c});
  }

  // closed form: minimize sum_k ||B eta - r_k||^2 with r_k = y_k - A x_k - c
  VectorXd rbar = VectorXd::Zero(4);
  for (const auto& t : tuples) rbar += t.y - a * t.x - c;
  rbar /= 3.0;
  VectorXd eta_ls = (b.transpose() * b).ldlt().solve(b.transpose() * rbar);

  AdaptConfig cfg = AdaptConfig::dynamics_defaults();
  cfg.seed = 5;
  AdaptationResult res = adapt_system(model, tuples, cfg);
  CHECK((res.eta_star - eta_ls).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((res.eta_star - eta_true).cwiseAbs().maxCoeff() < 1e-6);  // consistent data
  CHECK(res.adapt_loss < 1e-12);
  CHECK(res.system_id == 7);
}

TEST_CASE("theta is bit-identical before and after adaptation") {
  std::mt19937_64 rng(73);
  MetaModel model = linear_model(rng, 3, 2, 4);
  VectorXd theta_before = model.theta;
  std::vector<DataTuple> tuples;
  for (int k = 0; k < 3; ++k)
    tuples.push_back({0, testutil::random_vector(rng, 3), testutil::random_vector(rng, 4)});
  AdaptConfig cfg;
  cfg.seed = 2;
  adapt_system(model, tuples, cfg);
  CHECK(model.theta == theta_before);
}

TEST_CASE("reported adapt_loss is the minimum over restart diagnostics") {
  std::mt19937_64 rng(79);
  MetaModel model = linear_model(rng, 2, 1, 2);
  std::vector<DataTuple> tuples;
  for (int k = 0; k < 3; ++k)
    tuples.push_back({0, testutil::random_vector(rng, 2), testutil::random_vector(rng, 2)});
  AdaptConfig cfg;
  cfg.n_restarts = 6;
  cfg.seed = 3;
  AdaptationResult res = adapt_system(model, tuples, cfg);
  CHECK(res.restart_losses.size() == 6);
  CHECK(res.adapt_loss == *std::min_element(res.restart_losses.begin(),
                                            res.restart_losses.end()));
}

TEST_CASE("injecting a known eta as a restart seed never hurts") {
  std::mt19937_64 rng(83);
  MetaModel model = linear_model(rng, 3, 2, 4);
  MatrixXd a, b;
  VectorXd c;
  affine_parts(model, a, b, c);
  VectorXd eta_known(2);
  eta_known << -0.4, 0.9;
  std::vector<DataTuple> tuples;
  for (int k = 0; k < 3; ++k) {
    VectorXd x = testutil::random_vector(rng, 3);
    tuples.push_back({1, x, a * x + b * eta_known + c});
  }
  DenseNet net(model.spec);
  double known_loss = net.mse_loss(model.theta, eta_known, tuples);

  AdaptConfig cfg;
  cfg.extra_seeds = {eta_known};
  cfg.seed = 4;
  AdaptationResult res = adapt_system(model, tuples, cfg);
  CHECK(res.adapt_loss <= known_loss + 1e-6);
}

TEST_CASE("adapt_system validates its inputs") {
  std::mt19937_64 rng(89);
  MetaModel model = linear_model(rng, 2, 1, 2);
  CHECK_THROWS_AS(adapt_system(model, {}, AdaptConfig{}), std::invalid_argument);
  std::vector<DataTuple> mixed = {{0, VectorXd::Zero(2), VectorXd::Zero(2)},
                                  {1, VectorXd::Zero(2), VectorXd::Zero(2)}};
  CHECK_THROWS_AS(adapt_system(model, mixed, AdaptConfig{}), std::invalid_argument);
}

TEST_CASE("evaluate on a perfect predictor returns zero loss and infidelity") {
  NetworkSpec spec;
  spec.state_dim = 4;
  spec.eta_dim = 1;
  spec.hidden_layers = 1;
  spec.hidden_width = 3;
  spec.output_dim = 4;
  DenseNet net(spec);
  VectorXd theta = VectorXd::Zero(net.param_count());
  const auto& out = net.layers().back();
  for (int r = 0; r < 4; ++r) theta(out.w_offset + r * out.out + r) = 1.0;  // f(x) = x
  MetaModel model{spec, theta, {{0, VectorXd::Zero(1)}}};

  std::mt19937_64 rng(97);
  std::vector<DataTuple> tuples;
  for (int k = 0; k < 5; ++k) {
    QuantumState psi = haar_ket(2, rng);
    Eigen::VectorXd v = vectorize(psi);
    tuples.push_back({0, v, v});  // y = x and the net is the identity on x
  }
  EvalResult ev = evaluate(model, VectorXd::Zero(1), tuples, StateKind::Ket);
  CHECK(ev.mse == 0.0);
  REQUIRE(ev.mean_infidelity.has_value());
  CHECK(*ev.mean_infidelity < 1e-12);
}

TEST_CASE("evaluate flags orthogonal predictions with infidelity one") {
  NetworkSpec spec;
  spec.state_dim = 4;
  spec.eta_dim = 1;
  spec.hidden_layers = 1;
  spec.hidden_width = 3;
  spec.output_dim = 4;
  DenseNet net(spec);
  VectorXd theta = VectorXd::Zero(net.param_count());
  theta(net.layers().back().b_offset + 1) = 1.0;  // constant output = vec(|1>)
  MetaModel model{spec, theta, {{0, VectorXd::Zero(1)}}};

  Eigen::VectorXd zero_ket(4);
  zero_ket << 1, 0, 0, 0;
  std::vector<DataTuple> tuples = {{0, zero_ket, zero_ket}};
  EvalResult ev = evaluate(model, VectorXd::Zero(1), tuples, StateKind::Ket);
  CHECK(*ev.mean_infidelity == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evaluate means equal the arithmetic mean of per-tuple values") {
  std::mt19937_64 rng(101);
  MetaModel model = linear_model(rng, 4, 1, 4);
  model.eta_table[0] = VectorXd::Zero(1);
  std::vector<DataTuple> tuples;
  for (int k = 0; k < 6; ++k) {
    QuantumState psi = haar_ket(2, rng);
    QuantumState phi = haar_ket(2, rng);
    tuples.push_back({0, vectorize(psi), vectorize(phi)});
  }
  VectorXd eta = VectorXd::Zero(1);
  EvalResult all = evaluate(model, eta, tuples, StateKind::Ket);
  double mse_acc = 0, inf_acc = 0;
  for (const auto& t : tuples) {
    std::vector<DataTuple> one = {t};
    EvalResult e = evaluate(model, eta, one, StateKind::Ket);
    mse_acc += e.mse;
    inf_acc += *e.mean_infidelity;
  }
  CHECK(all.mse == doctest::Approx(mse_acc / 6.0).epsilon(1e-12));
  CHECK(*all.mean_infidelity == doctest::Approx(inf_acc / 6.0).epsilon(1e-12));
  CHECK_THROWS_AS(evaluate(model, eta, {}, StateKind::Ket), std::invalid_argument);
}

TEST_CASE("more adaptation data does not systematically hurt") {
  // Train one small closed-TLS model, then adapt held-out systems on 3- and
  // 10-point subsets over several subset seeds; the 10-point mean test loss
  // must not exceed the 3-point mean.
  DatasetSplit split = build_split(SystemFamily::ClosedTLS, 8, 5, 3, 0.1, 404);
  NetworkSpec spec = NetworkSpec::dynamics(SystemFamily::ClosedTLS);
  TrainSchedule sched = TrainSchedule::dynamics_defaults(SystemFamily::ClosedTLS);
  sched.total_epochs = 80;
  sched.noise_until = 10;
  sched.freeze_from = 65;
  auto [model, log] = train(split.train, spec, sched, 404);

  double mean3 = 0, mean10 = 0;
  int count = 0;
  for (int sys : split.adapt_ids) {
    std::vector<DataTuple> all = split.adapt.at(sys);
    for (const auto& t : split.test.at(sys)) all.push_back(t);
    for (std::uint64_t subset_seed = 0; subset_seed < 5; ++subset_seed) {
      Rng rng = make_rng(derive_seed(505, "subset", subset_seed * 100 + sys));
      std::vector<int> idx(all.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      for (int n_adapt : {3, 10}) {
        std::vector<DataTuple> adapt, test;
        for (std::size_t i = 0; i < all.size(); ++i)
          (static_cast<int>(i) < n_adapt ? adapt : test)
              .push_back(all[static_cast<std::size_t>(idx[i])]);
        AdaptConfig cfg;
        cfg.seed = derive_seed(506, "adapt", subset_seed * 100 + sys);
        AdaptationResult res = adapt_and_evaluate(model, adapt, test, std::nullopt, cfg);
        (n_adapt == 3 ? mean3 : mean10) += res.test_loss;
      }
      ++count;
    }
  }
  mean3 /= count;
  mean10 /= count;
  CHECK(mean10 <= mean3);
}

TEST_CASE("adapt_and_evaluate fills the test metrics") {
  std::mt19937_64 rng(103);
  MetaModel model = linear_model(rng, 4, 1, 4);
  MatrixXd a, b;
  VectorXd c;
  affine_parts(model, a, b, c);
  VectorXd eta_true = VectorXd::Constant(1, 0.6);
  auto make = [&](int n) {
    std::vector<DataTuple> v;
    for (int k = 0; k < n; ++k) {
      VectorXd x = vectorize(haar_ket(2, rng));
      v.push_back({2, x, a * x + b * eta_true + c});
    }
    return v;
  };
  auto adapt_tuples = make(3);
  auto test_tuples = make(10);
  AdaptConfig cfg;
  cfg.seed = 8;
  AdaptationResult res = adapt_and_evaluate(model, adapt_tuples, test_tuples, std::nullopt, cfg);
  CHECK(res.test_loss < 1e-10);
  CHECK_FALSE(res.test_infidelity.has_value());
  AdaptationResult res2 = adapt_and_evaluate(model, adapt_tuples, test_tuples, StateKind::Ket, cfg);
  CHECK(res2.test_infidelity.has_value());
}
