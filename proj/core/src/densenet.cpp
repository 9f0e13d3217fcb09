#include "malgo/densenet.hpp"

#include <cmath>
#include <stdexcept>

namespace malgo {

namespace {
using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Map<const MatrixXd> weight_view(const VectorXd& theta, const DenseNet::LayerShape& l) {
  return {theta.data() + l.w_offset, l.out, l.in};
}

Map<const VectorXd> bias_view(const VectorXd& theta, const DenseNet::LayerShape& l) {
  return {theta.data() + l.b_offset, l.out};
}

}  // namespace

NetworkSpec NetworkSpec::dynamics(SystemFamily f) {
  NetworkSpec s;
  s.state_dim = malgo::state_dim(f);
  s.eta_dim = param_dim(f);
  s.hidden_layers = 7;
  s.hidden_width = 25;
  s.output_dim = s.state_dim;
  return s;
}

NetworkSpec NetworkSpec::characteristics() {
  NetworkSpec s;
  s.state_dim = 3;
  s.eta_dim = 7;
  s.hidden_layers = 6;
  s.hidden_width = 15;
  s.output_dim = 1;
  return s;
}

DenseNet::DenseNet(NetworkSpec spec) : spec_(spec) {
  if (spec_.state_dim < 1 || spec_.eta_dim < 0 || spec_.hidden_layers < 1 ||
      spec_.hidden_width < 1 || spec_.output_dim < 1)
    throw std::invalid_argument("DenseNet: invalid NetworkSpec");
  int offset = 0;
  int in = spec_.input_dim();
  for (int l = 0; l < spec_.hidden_layers; ++l) {
    LayerShape s{in, spec_.hidden_width, offset, offset + in * spec_.hidden_width};
    offset = s.b_offset + s.out;
    layers_.push_back(s);
    in += spec_.hidden_width;
  }
  LayerShape out{in, spec_.output_dim, offset, offset + in * spec_.output_dim};
  offset = out.b_offset + out.out;
  layers_.push_back(out);
  param_count_ = offset;
  concat_dim_ = in;
}

Eigen::VectorXd DenseNet::init_params(std::uint64_t seed) const {
  Rng rng = make_rng(derive_seed(seed, "theta-init"));
  VectorXd theta = VectorXd::Zero(param_count_);
  for (const auto& l : layers_) {
    double g = std::sqrt(6.0 / (l.in + l.out));
    std::uniform_real_distribution<double> uni(-g, g);
    for (int k = 0; k < l.in * l.out; ++k) theta(l.w_offset + k) = uni(rng);
    // biases stay zero
  }
  return theta;
}

void DenseNet::check_theta(const VectorXd& theta) const {
  if (theta.size() != param_count_)
    throw std::invalid_argument("DenseNet: parameter vector has wrong length");
}

const Eigen::MatrixXd& DenseNet::forward_batch(const VectorXd& theta, const MatrixXd& x,
                                               const MatrixXd& eta, Workspace& ws) const {
  check_theta(theta);
  if (x.rows() != spec_.state_dim || eta.rows() != spec_.eta_dim || x.cols() != eta.cols())
    throw std::invalid_argument("DenseNet::forward: input dimension mismatch");
  const Eigen::Index b = x.cols();
  ws.acts.resize(concat_dim_, b);
  ws.acts.topRows(spec_.state_dim) = x;
  ws.acts.middleRows(spec_.state_dim, spec_.eta_dim) = eta;
  int off = spec_.input_dim();
  for (int l = 0; l < spec_.hidden_layers; ++l) {
    const auto& shape = layers_[l];
    ws.acts.middleRows(off, shape.out) =
        ((weight_view(theta, shape) * ws.acts.topRows(off)).colwise() + bias_view(theta, shape))
            .array()
            .tanh();
    off += shape.out;
  }
  const auto& out = layers_.back();
  ws.output = (weight_view(theta, out) * ws.acts).colwise() + bias_view(theta, out);
  return ws.output;
}

void DenseNet::backward_batch(const VectorXd& theta, const Workspace& ws,
                              const MatrixXd& upstream, VectorXd* d_theta,
                              MatrixXd* d_eta) const {
  check_theta(theta);
  if (upstream.rows() != spec_.output_dim || upstream.cols() != ws.acts.cols())
    throw std::invalid_argument("DenseNet::backward: upstream dimension mismatch");
  const auto& out = layers_.back();
  MatrixXd d_acts = weight_view(theta, out).transpose() * upstream;
  if (d_theta) {
    if (d_theta->size() != param_count_) d_theta->setZero(param_count_);
    Map<MatrixXd>(d_theta->data() + out.w_offset, out.out, out.in) +=
        upstream * ws.acts.transpose();
    Map<VectorXd>(d_theta->data() + out.b_offset, out.out) += upstream.rowwise().sum();
  }
  for (int l = spec_.hidden_layers - 1; l >= 0; --l) {
    const auto& shape = layers_[l];
    int off = shape.in;  // rows above this layer's output block
    MatrixXd dz = d_acts.middleRows(off, shape.out).array() *
                  (1.0 - ws.acts.middleRows(off, shape.out).array().square());
    if (d_theta) {
      Map<MatrixXd>(d_theta->data() + shape.w_offset, shape.out, shape.in) +=
          dz * ws.acts.topRows(off).transpose();
      Map<VectorXd>(d_theta->data() + shape.b_offset, shape.out) += dz.rowwise().sum();
    }
    d_acts.topRows(off).noalias() += weight_view(theta, shape).transpose() * dz;
  }
  if (d_eta) *d_eta = d_acts.middleRows(spec_.state_dim, spec_.eta_dim);
}

Eigen::VectorXd DenseNet::forward(const VectorXd& theta, const VectorXd& x,
                                  const VectorXd& eta) const {
  Workspace ws;
  return forward_batch(theta, x, eta, ws).col(0);
}

GradientPair DenseNet::backward(const VectorXd& theta, const VectorXd& x, const VectorXd& eta,
                                const VectorXd& upstream) const {
  Workspace ws;
  forward_batch(theta, x, eta, ws);
  GradientPair g;
  g.d_theta = VectorXd::Zero(param_count_);
  MatrixXd d_eta;
  backward_batch(theta, ws, upstream, &g.d_theta, &d_eta);
  g.d_eta = d_eta.col(0);
  return g;
}

namespace {

// Stacks a batch owned by a single system into column matrices.
void stack_batch(std::span<const DataTuple> batch, const NetworkSpec& spec, MatrixXd& x,
                 MatrixXd& y) {
  if (batch.empty()) throw std::invalid_argument("DenseNet: empty batch");
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  x.resize(spec.state_dim, b);
  y.resize(spec.output_dim, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    if (batch[i].x.size() != spec.state_dim || batch[i].y.size() != spec.output_dim)
      throw std::invalid_argument("DenseNet: tuple dimension mismatch");
    x.col(i) = batch[i].x;
    y.col(i) = batch[i].y;
  }
}

}  // namespace

std::pair<double, GradientPair> DenseNet::mse_loss_and_grads(const VectorXd& theta,
                                                             const VectorXd& eta,
                                                             std::span<const DataTuple> batch) const {
  MatrixXd x, y;
  stack_batch(batch, spec_, x, y);
  Workspace ws;
  MatrixXd e = eta.replicate(1, x.cols());
  const MatrixXd& pred = forward_batch(theta, x, e, ws);
  MatrixXd resid = pred - y;
  double norm = 1.0 / (static_cast<double>(x.cols()) * spec_.output_dim);
  double loss = resid.squaredNorm() * norm;
  MatrixXd upstream = 2.0 * norm * resid;
  GradientPair g;
  g.d_theta = VectorXd::Zero(param_count_);
  MatrixXd d_eta;
  backward_batch(theta, ws, upstream, &g.d_theta, &d_eta);
  g.d_eta = d_eta.rowwise().sum();
  return {loss, std::move(g)};
}

std::pair<double, Eigen::VectorXd> DenseNet::mse_loss_and_eta_grad(
    const VectorXd& theta, const VectorXd& eta, std::span<const DataTuple> batch) const {
  MatrixXd x, y;
  stack_batch(batch, spec_, x, y);
  Workspace ws;
  MatrixXd e = eta.replicate(1, x.cols());
  const MatrixXd& pred = forward_batch(theta, x, e, ws);
  MatrixXd resid = pred - y;
  double norm = 1.0 / (static_cast<double>(x.cols()) * spec_.output_dim);
  double loss = resid.squaredNorm() * norm;
  MatrixXd upstream = 2.0 * norm * resid;
  MatrixXd d_eta;
  backward_batch(theta, ws, upstream, nullptr, &d_eta);
  return {loss, d_eta.rowwise().sum()};
}

double DenseNet::mse_loss(const VectorXd& theta, const VectorXd& eta,
                          std::span<const DataTuple> batch) const {
  MatrixXd x, y;
  stack_batch(batch, spec_, x, y);
  Workspace ws;
  MatrixXd e = eta.replicate(1, x.cols());
  const MatrixXd& pred = forward_batch(theta, x, e, ws);
  return (pred - y).squaredNorm() / (static_cast<double>(x.cols()) * spec_.output_dim);
}

}  // namespace malgo
