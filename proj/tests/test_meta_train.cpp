#include <doctest.h>

#include <limits>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "malgo/meta_train.hpp"
#include "malgo/optim.hpp"

using namespace malgo;

namespace {

NetworkSpec small_spec(int eta_dim = 1) {
  NetworkSpec s;
  s.state_dim = 4;
  s.eta_dim = eta_dim;
  s.hidden_layers = 2;
  s.hidden_width = 8;
  s.output_dim = 4;
  return s;
}

TrainSchedule small_schedule() {
  TrainSchedule s;
  s.total_epochs = 12;
  s.noise_until = 3;
  s.freeze_from = 9;
  s.s_theta = 1;
  s.s_eta = 4;
  s.batch_size = 16;
  return s;
}

std::vector<DataTuple> small_data(int n_sys = 3, std::uint64_t seed = 600) {
  DatasetSplit split = build_split(SystemFamily::ClosedTLS, n_sys, 1, 3, 0.1, seed, {2, 5});
  return split.train;
}

}  // namespace

TEST_CASE("schedule phases follow the three-phase boundaries") {
  TrainSchedule s = small_schedule();
  s.validate();
  CHECK(s.phase(1) == TrainPhase::Noise);
  CHECK(s.phase(3) == TrainPhase::Noise);
  CHECK(s.phase(4) == TrainPhase::Update);
  CHECK(s.phase(8) == TrainPhase::Update);
  CHECK(s.phase(9) == TrainPhase::Freeze);
  CHECK(s.phase(12) == TrainPhase::Freeze);

  TrainSchedule defaults = TrainSchedule::dynamics_defaults(SystemFamily::ClosedTLS);
  CHECK(defaults.total_epochs == 250);
  CHECK(defaults.noise_until == 20);
  CHECK(defaults.freeze_from == 201);
  CHECK(defaults.s_theta == 1);
  CHECK(defaults.s_eta == 10);
  CHECK(defaults.lr_theta == 0.01);
  CHECK(defaults.lr_eta == 0.003);
  CHECK(defaults.batch_size == 500);
  CHECK(TrainSchedule::dynamics_defaults(SystemFamily::OpenTLS).batch_size == 1000);
  CHECK(TrainSchedule::dynamics_defaults(SystemFamily::Heisenberg2).batch_size == 3000);
  CHECK(TrainSchedule::characteristics_defaults().batch_size == 200);

  TrainSchedule imode = defaults.schedule_free();
  imode.validate();
  CHECK(imode.noise_until == 0);
  CHECK(imode.freeze_from == 251);
  CHECK(imode.phase(1) == TrainPhase::Update);
  CHECK(imode.phase(250) == TrainPhase::Update);

  TrainSchedule bad = defaults;
  bad.noise_until = 240;
  bad.freeze_from = 200;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  // proportional rescaling of the phase boundaries
  TrainSchedule half = defaults.with_total_epochs(125);
  half.validate();
  CHECK(half.total_epochs == 125);
  CHECK(half.noise_until == 10);
  CHECK(half.freeze_from == 101);  // round(201 * 125 / 250)
  TrainSchedule tiny = defaults.with_total_epochs(12);
  tiny.validate();
  CHECK(tiny.noise_until == 1);
  CHECK(tiny.freeze_from == 10);
  TrainSchedule one = defaults.with_total_epochs(1);
  one.validate();
}

TEST_CASE("training is deterministic in the seed") {
  auto tuples = small_data();
  auto [m1, l1] = train(tuples, small_spec(), small_schedule(), 42);
  auto [m2, l2] = train(tuples, small_spec(), small_schedule(), 42);
  CHECK(m1.theta == m2.theta);
  REQUIRE(l1.entries.size() == l2.entries.size());
  for (std::size_t e = 0; e < l1.entries.size(); ++e) {
    CHECK(l1.entries[e].loss == l2.entries[e].loss);
    for (const auto& [id, eta] : l1.entries[e].eta) CHECK(eta == l2.entries[e].eta.at(id));
  }
  auto [m3, l3] = train(tuples, small_spec(), small_schedule(), 43);
  CHECK(m1.theta != m3.theta);
}

TEST_CASE("eta is resampled during noise, optimized during update, frozen afterwards") {
  auto tuples = small_data();
  auto [model, log] = train(tuples, small_spec(), small_schedule(), 7);
  REQUIRE(log.entries.size() == 12);

  // noise phase: consecutive snapshots differ (fresh standard normals)
  for (int e = 1; e < 3; ++e) {
    bool changed = false;
    for (const auto& [id, eta] : log.entries[e].eta)
      changed |= (eta != log.entries[e - 1].eta.at(id));
    CHECK(changed);
  }
  // update phase: eta evolves
  bool update_changed = false;
  for (const auto& [id, eta] : log.entries[7].eta)
    update_changed |= (eta != log.entries[3].eta.at(id));
  CHECK(update_changed);
  // freeze phase: bit-constant from freeze_from on, equal to the last update epoch
  for (std::size_t e = 8; e < 12; ++e)
    for (const auto& [id, eta] : log.entries[e].eta) CHECK(eta == log.entries[7].eta.at(id));
  // phases recorded
  CHECK(log.entries[0].phase == TrainPhase::Noise);
  CHECK(log.entries[5].phase == TrainPhase::Update);
  CHECK(log.entries[11].phase == TrainPhase::Freeze);
  // model eta table equals the frozen snapshot
  for (const auto& [id, eta] : model.eta_table) CHECK(eta == log.entries[11].eta.at(id));
}

TEST_CASE("a single system with no context reduces to supervised regression") {
  DatasetSplit split = build_split(SystemFamily::ClosedTLS, 1, 1, 3, 0.1, 55, {3, 10});
  TrainSchedule sched = small_schedule();
  sched.total_epochs = 40;
  sched.noise_until = 0;
  sched.freeze_from = 1;  // eta (empty) frozen from the start
  auto [model, log] = train(split.train, small_spec(0), sched, 3);
  CHECK(log.entries.front().loss > log.entries.back().loss);
  CHECK(log.entries.back().loss < 0.5 * log.entries.front().loss);
}

TEST_CASE("theta is untouched by the eta block and eta is untouched by theta steps") {
  auto tuples = small_data();
  Eigen::VectorXd theta_at_theta_step;
  std::map<int, Eigen::VectorXd> eta_before;
  bool checked = false;
  TrainHooks hooks;
  hooks.after_theta_steps = [&](int, int, const Eigen::VectorXd& theta) {
    theta_at_theta_step = theta;
  };
  hooks.after_eta_steps = [&](int epoch, int, const Eigen::VectorXd& theta,
                              const std::map<int, Eigen::VectorXd>& eta) {
    if (epoch > 3 && epoch < 9) {  // update phase
      CHECK(theta == theta_at_theta_step);
      checked = true;
    }
    eta_before = eta;
  };
  train(tuples, small_spec(), small_schedule(), 21, &hooks);
  CHECK(checked);
}

TEST_CASE("the first theta update is Adam applied to the full-batch gradient") {
  auto tuples = small_data(2, 123);
  NetworkSpec spec = small_spec();
  TrainSchedule sched = small_schedule();
  sched.batch_size = static_cast<int>(tuples.size());  // single batch per epoch
  sched.total_epochs = 1;
  sched.noise_until = 0;  // update from epoch 1
  sched.freeze_from = 2;
  const std::uint64_t seed = 99;

  Eigen::VectorXd captured_grad;
  Eigen::VectorXd captured_theta;
  TrainHooks hooks;
  hooks.on_theta_grad = [&](int epoch, int batch, const Eigen::VectorXd& g) {
    if (epoch == 1 && batch == 0) captured_grad = g;
  };
  hooks.after_theta_steps = [&](int epoch, int batch, const Eigen::VectorXd& theta) {
    if (epoch == 1 && batch == 0) captured_theta = theta;
  };
  train(tuples, spec, sched, seed, &hooks);

  // Reproduce theta_0 and the initial eta table the trainer derives.
  DenseNet net(spec);
  Eigen::VectorXd theta0 = net.init_params(derive_seed(seed, "theta"));
  Rng eta_rng = make_rng(derive_seed(seed, "eta-init"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::map<int, Eigen::VectorXd> eta_table;
  std::set<int> ids;
  for (const auto& t : tuples) ids.insert(t.system_id);
  for (int id : ids) {
    Eigen::VectorXd eta(spec.eta_dim);
    for (Eigen::Index k = 0; k < eta.size(); ++k) eta(k) = normal(eta_rng);
    eta_table[id] = eta;
  }

  // Independent full-batch gradient: tuple-count-weighted mean of per-system
  // mse gradients.
  Eigen::VectorXd expected_grad = Eigen::VectorXd::Zero(net.param_count());
  double total = static_cast<double>(tuples.size());
  for (int id : ids) {
    std::vector<DataTuple> sys_tuples;
    for (const auto& t : tuples)
      if (t.system_id == id) sys_tuples.push_back(t);
    auto [loss, g] = net.mse_loss_and_grads(theta0, eta_table[id], sys_tuples);
    expected_grad += (static_cast<double>(sys_tuples.size()) / total) * g.d_theta;
  }
  REQUIRE(captured_grad.size() == expected_grad.size());
  CHECK((captured_grad - expected_grad).cwiseAbs().maxCoeff() < 1e-12);

  // And the captured theta equals Adam applied to that gradient.
  Adam adam(net.param_count(), AdamConfig{sched.lr_theta, 0.9, 0.999, 1e-8});
  Eigen::VectorXd theta_expected = theta0;
  adam.step(theta_expected, captured_grad);
  CHECK(theta_expected == captured_theta);
}

TEST_CASE("training aborts on non-finite data with diagnostics") {
  auto tuples = small_data();
  tuples[0].y(0) = std::numeric_limits<double>::quiet_NaN();
  TrainSchedule sched = small_schedule();
  sched.batch_size = 64;
  try {
    train(tuples, small_spec(), sched, 5);
    FAIL("expected std::runtime_error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("empty training sets are rejected") {
  CHECK_THROWS_AS(train({}, small_spec(), small_schedule(), 1), std::invalid_argument);
}

TEST_CASE("eta_correlation on constructed tables") {
  std::vector<SystemInstance> instances;
  MetaModel model;
  model.spec = small_spec();
  for (int i = 0; i < 8; ++i) {
    double delta = 0.1 * (i + 1);
    instances.push_back({SystemFamily::ClosedTLS, Eigen::VectorXd::Constant(1, delta), i});
    model.eta_table[i] = Eigen::VectorXd::Constant(1, delta);  // eta = delta
  }
  CHECK(eta_correlation(model, instances) == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 8; ++i)
    model.eta_table[i] = Eigen::VectorXd::Constant(1, -2.0 * instances[i].params(0) + 5.0);
  CHECK(eta_correlation(model, instances) == doctest::Approx(-1.0).epsilon(1e-12));

  MetaModel wide = model;
  wide.spec.eta_dim = 2;
  for (int i = 0; i < 8; ++i) wide.eta_table[i] = Eigen::Vector2d(0.1, 0.2);
  CHECK_THROWS_AS(eta_correlation(wide, instances), std::invalid_argument);
}

TEST_CASE("train log serializes one CSV row per epoch") {
  auto tuples = small_data();
  auto [model, log] = train(tuples, small_spec(), small_schedule(), 11);
  std::ostringstream ss;
  log.to_csv(ss);
  std::string csv = ss.str();
  int lines = 0;
  for (char c : csv) lines += (c == '\n');
  CHECK(lines == 13);  // header + 12 epochs
  CHECK(csv.rfind("epoch,phase,loss", 0) == 0);
  CHECK(csv.find("noise") != std::string::npos);
  CHECK(csv.find("update") != std::string::npos);
  CHECK(csv.find("freeze") != std::string::npos);
}
