#include "malgo/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "malgo/optim.hpp"

namespace malgo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::pair<MetaModel, TrainLog> train_imode(const std::vector<DataTuple>& train_tuples,
                                           const NetworkSpec& spec, const TrainSchedule& base,
                                           std::uint64_t seed) {
  return train(train_tuples, spec, base.schedule_free(), seed);
}

AdaptationResult adapt_system_sgd(const MetaModel& model, std::span<const DataTuple> adapt_tuples,
                                  const SgdAdaptConfig& cfg) {
  if (adapt_tuples.empty()) throw std::invalid_argument("adapt_system_sgd: empty adaptation set");
  int sys = adapt_tuples.front().system_id;
  for (const auto& t : adapt_tuples)
    if (t.system_id != sys)
      throw std::invalid_argument("adapt_system_sgd: tuples from more than one system");

  DenseNet net(model.spec);
  VectorXd eta;
  if (cfg.start_centroid && !model.eta_table.empty()) {
    eta = model.eta_centroid();
  } else {
    Rng rng = make_rng(derive_seed(cfg.seed, "sgd-adapt-init", static_cast<std::uint64_t>(sys)));
    std::normal_distribution<double> normal(0.0, 1.0);
    eta.resize(model.spec.eta_dim);
    for (Eigen::Index k = 0; k < eta.size(); ++k) eta(k) = normal(rng);
  }

  double loss = 0.0;
  for (int s = 0; s < cfg.steps; ++s) {
    auto [l, g] = net.mse_loss_and_eta_grad(model.theta, eta, adapt_tuples);
    loss = l;
    if (!std::isfinite(l)) throw std::runtime_error("adapt_system_sgd: non-finite loss");
    sgd_step(eta, g, cfg.lr);
  }
  loss = net.mse_loss(model.theta, eta, adapt_tuples);

  AdaptationResult res;
  res.system_id = sys;
  res.eta_star = std::move(eta);
  res.adapt_loss = loss;
  res.restart_losses = {loss};
  return res;
}

AdaptationResult adapt_and_evaluate_sgd(const MetaModel& model,
                                        std::span<const DataTuple> adapt_tuples,
                                        std::span<const DataTuple> test_tuples,
                                        std::optional<StateKind> kind, const SgdAdaptConfig& cfg) {
  AdaptationResult res = adapt_system_sgd(model, adapt_tuples, cfg);
  EvalResult ev = evaluate(model, res.eta_star, test_tuples, kind);
  res.test_loss = ev.mse;
  res.test_infidelity = ev.mean_infidelity;
  return res;
}

MlpSpec MlpSpec::dynamics(SystemFamily f) {
  MlpSpec s;
  s.input_dim = state_dim(f);
  s.hidden_layers = 7;
  s.hidden_width = 50;
  s.output_dim = state_dim(f);
  return s;
}

MlpSpec MlpSpec::characteristics() {
  MlpSpec s;
  s.input_dim = 3;
  s.hidden_layers = 6;
  s.hidden_width = 28;
  s.output_dim = 1;
  return s;
}

Mlp::Mlp(MlpSpec spec) : spec_(spec) {
  if (spec_.input_dim < 1 || spec_.hidden_layers < 1 || spec_.hidden_width < 1 ||
      spec_.output_dim < 1)
    throw std::invalid_argument("Mlp: invalid spec");
  int offset = 0;
  int in = spec_.input_dim;
  for (int l = 0; l < spec_.hidden_layers; ++l) {
    Shape s{in, spec_.hidden_width, offset, offset + in * spec_.hidden_width};
    offset = s.b_offset + s.out;
    layers_.push_back(s);
    in = spec_.hidden_width;
  }
  Shape out{in, spec_.output_dim, offset, offset + in * spec_.output_dim};
  offset = out.b_offset + out.out;
  layers_.push_back(out);
  param_count_ = offset;
}

VectorXd Mlp::init_params(std::uint64_t seed) const {
  Rng rng = make_rng(derive_seed(seed, "mlp-init"));
  VectorXd p = VectorXd::Zero(param_count_);
  for (const auto& l : layers_) {
    double g = std::sqrt(6.0 / (l.in + l.out));
    std::uniform_real_distribution<double> uni(-g, g);
    for (int k = 0; k < l.in * l.out; ++k) p(l.w_offset + k) = uni(rng);
  }
  return p;
}

MatrixXd Mlp::forward(const VectorXd& params, const MatrixXd& x) const {
  if (params.size() != param_count_) throw std::invalid_argument("Mlp: wrong parameter length");
  if (x.rows() != spec_.input_dim) throw std::invalid_argument("Mlp: input dimension mismatch");
  MatrixXd h = x;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    const Shape& s = layers_[l];
    Eigen::Map<const MatrixXd> w(params.data() + s.w_offset, s.out, s.in);
    Eigen::Map<const VectorXd> b(params.data() + s.b_offset, s.out);
    h = ((w * h).colwise() + b).array().tanh();
  }
  const Shape& s = layers_.back();
  Eigen::Map<const MatrixXd> w(params.data() + s.w_offset, s.out, s.in);
  Eigen::Map<const VectorXd> b(params.data() + s.b_offset, s.out);
  return (w * h).colwise() + b;
}

std::pair<double, VectorXd> Mlp::mse_loss_and_grad(const VectorXd& params, const MatrixXd& x,
                                                   const MatrixXd& y) const {
  if (params.size() != param_count_) throw std::invalid_argument("Mlp: wrong parameter length");
  std::vector<MatrixXd> acts;  // activations per layer, acts[0] = x
  acts.reserve(layers_.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    const Shape& s = layers_[l];
    Eigen::Map<const MatrixXd> w(params.data() + s.w_offset, s.out, s.in);
    Eigen::Map<const VectorXd> b(params.data() + s.b_offset, s.out);
    acts.push_back(((w * acts.back()).colwise() + b).array().tanh());
  }
  const Shape& so = layers_.back();
  Eigen::Map<const MatrixXd> wo(params.data() + so.w_offset, so.out, so.in);
  Eigen::Map<const VectorXd> bo(params.data() + so.b_offset, so.out);
  MatrixXd pred = (wo * acts.back()).colwise() + bo;

  double norm = 1.0 / (static_cast<double>(x.cols()) * spec_.output_dim);
  MatrixXd delta = pred - y;
  double loss = delta.squaredNorm() * norm;
  delta *= 2.0 * norm;

  VectorXd grad = VectorXd::Zero(param_count_);
  Eigen::Map<MatrixXd>(grad.data() + so.w_offset, so.out, so.in) = delta * acts.back().transpose();
  Eigen::Map<VectorXd>(grad.data() + so.b_offset, so.out) = delta.rowwise().sum();
  MatrixXd back = wo.transpose() * delta;
  for (int l = static_cast<int>(layers_.size()) - 2; l >= 0; --l) {
    const Shape& s = layers_[static_cast<std::size_t>(l)];
    Eigen::Map<const MatrixXd> w(params.data() + s.w_offset, s.out, s.in);
    MatrixXd dz = back.array() * (1.0 - acts[static_cast<std::size_t>(l) + 1].array().square());
    Eigen::Map<MatrixXd>(grad.data() + s.w_offset, s.out, s.in) =
        dz * acts[static_cast<std::size_t>(l)].transpose();
    Eigen::Map<VectorXd>(grad.data() + s.b_offset, s.out) = dz.rowwise().sum();
    if (l > 0) back = w.transpose() * dz;
  }
  return {loss, std::move(grad)};
}

VectorXd train_scratch_mlp(const Mlp& net, std::span<const DataTuple> adapt_tuples,
                           const ScratchConfig& cfg) {
  if (adapt_tuples.empty()) throw std::invalid_argument("train_scratch_mlp: empty adaptation set");
  MatrixXd x(net.spec().input_dim, static_cast<Eigen::Index>(adapt_tuples.size()));
  MatrixXd y(net.spec().output_dim, static_cast<Eigen::Index>(adapt_tuples.size()));
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    x.col(i) = adapt_tuples[static_cast<std::size_t>(i)].x;
    y.col(i) = adapt_tuples[static_cast<std::size_t>(i)].y;
  }
  VectorXd params = net.init_params(cfg.seed);
  Adam adam(params.size(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  for (int s = 0; s < cfg.steps; ++s) {
    auto [loss, grad] = net.mse_loss_and_grad(params, x, y);
    if (!std::isfinite(loss)) throw std::runtime_error("train_scratch_mlp: non-finite loss");
    adam.step(params, grad);
  }
  return params;
}

EvalResult evaluate_mlp(const Mlp& net, const VectorXd& params,
                        std::span<const DataTuple> test_tuples, std::optional<StateKind> kind) {
  if (test_tuples.empty()) throw std::invalid_argument("evaluate_mlp: empty test set");
  MatrixXd x(net.spec().input_dim, static_cast<Eigen::Index>(test_tuples.size()));
  MatrixXd y(net.spec().output_dim, static_cast<Eigen::Index>(test_tuples.size()));
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    x.col(i) = test_tuples[static_cast<std::size_t>(i)].x;
    y.col(i) = test_tuples[static_cast<std::size_t>(i)].y;
  }
  MatrixXd pred = net.forward(params, x);
  EvalResult res;
  res.mse = (pred - y).squaredNorm() /
            (static_cast<double>(x.cols()) * static_cast<double>(net.spec().output_dim));
  if (kind) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      acc += infidelity(pred.col(i), y.col(i), *kind);
    res.mean_infidelity = acc / static_cast<double>(x.cols());
  }
  return res;
}

}  // namespace malgo
