#include "malgo/adaptation.hpp"

#include <stdexcept>

namespace malgo {

using Eigen::VectorXd;

AdaptConfig AdaptConfig::dynamics_defaults() { return AdaptConfig{}; }

AdaptConfig AdaptConfig::characteristics_defaults() {
  AdaptConfig cfg;
  cfg.n_restarts = 20;
  cfg.max_epochs = 2;
  return cfg;
}

AdaptationResult adapt_system(const MetaModel& model, std::span<const DataTuple> adapt_tuples,
                              const AdaptConfig& cfg) {
  if (adapt_tuples.empty()) throw std::invalid_argument("adapt_system: empty adaptation set");
  int sys = adapt_tuples.front().system_id;
  for (const auto& t : adapt_tuples)
    if (t.system_id != sys)
      throw std::invalid_argument("adapt_system: tuples from more than one system");

  DenseNet net(model.spec);
  Objective obj = [&](const VectorXd& eta, VectorXd& grad) {
    auto [loss, g] = net.mse_loss_and_eta_grad(model.theta, eta, adapt_tuples);
    grad = std::move(g);
    return loss;
  };

  std::vector<VectorXd> fixed_starts;
  if (cfg.seed_centroid && !model.eta_table.empty()) fixed_starts.push_back(model.eta_centroid());
  for (const auto& s : cfg.extra_seeds) fixed_starts.push_back(s);

  int n_restarts = std::max(cfg.n_restarts, static_cast<int>(fixed_starts.size()));
  auto sampler = [&](int r, Rng& rng) -> VectorXd {
    if (r < static_cast<int>(fixed_starts.size())) return fixed_starts[static_cast<std::size_t>(r)];
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd x(model.spec.eta_dim);
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = normal(rng);
    return x;
  };

  RestartResult best = restarted_minimize(obj, sampler, n_restarts, cfg.max_iterations(),
                                          cfg.seed, cfg.lbfgs);
  AdaptationResult res;
  res.system_id = sys;
  res.eta_star = std::move(best.x);
  res.adapt_loss = best.f;
  res.restart_losses = std::move(best.restart_losses);
  return res;
}

EvalResult evaluate(const MetaModel& model, const VectorXd& eta,
                    std::span<const DataTuple> test_tuples, std::optional<StateKind> kind) {
  if (test_tuples.empty()) throw std::invalid_argument("evaluate: empty test set");
  DenseNet net(model.spec);
  EvalResult res;
  res.mse = net.mse_loss(model.theta, eta, test_tuples);
  if (kind) {
    double acc = 0.0;
    for (const auto& t : test_tuples) {
      VectorXd pred = net.forward(model.theta, t.x, eta);
      acc += infidelity(pred, t.y, *kind);
    }
    res.mean_infidelity = acc / static_cast<double>(test_tuples.size());
  }
  return res;
}

AdaptationResult adapt_and_evaluate(const MetaModel& model, std::span<const DataTuple> adapt_tuples,
                                    std::span<const DataTuple> test_tuples,
                                    std::optional<StateKind> kind, const AdaptConfig& cfg) {
  AdaptationResult res = adapt_system(model, adapt_tuples, cfg);
  EvalResult ev = evaluate(model, res.eta_star, test_tuples, kind);
  res.test_loss = ev.mse;
  res.test_infidelity = ev.mean_infidelity;
  return res;
}

}  // namespace malgo
