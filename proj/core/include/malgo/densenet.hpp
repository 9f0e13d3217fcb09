#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "malgo/systems.hpp"

namespace malgo {

enum class Activation { Tanh };

struct NetworkSpec {
  int state_dim = 0;   // length of x
  int eta_dim = 0;     // length of the context vector
  int hidden_layers = 7;
  int hidden_width = 25;
  int output_dim = 0;
  Activation activation = Activation::Tanh;

  int input_dim() const { return state_dim + eta_dim; }

  // 7 hidden layers of width 25 for dynamics; 6 of width 15 with a
  // 7-dimensional context for characteristics regression.
  static NetworkSpec dynamics(SystemFamily f);
  static NetworkSpec characteristics();
};

struct GradientPair {
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_eta;
};

// Densely connected feedforward network: hidden layer l consumes the
// concatenation of the input (x, eta) and all previous hidden outputs; the
// output layer is affine over the full concatenation.
class DenseNet {
 public:
  explicit DenseNet(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  int param_count() const { return param_count_; }
  int concat_dim() const { return concat_dim_; }

  // Glorot-uniform weights, zero biases; deterministic in the seed.
  Eigen::VectorXd init_params(std::uint64_t seed) const;

  Eigen::VectorXd forward(const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& eta) const;

  // Exact reverse-mode gradients of <upstream, forward(theta, x, eta)>.
  GradientPair backward(const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& eta, const Eigen::VectorXd& upstream) const;

  // Batched evaluation; one tuple per column. The workspace keeps the
  // activations needed by backward_batch.
  struct Workspace {
    Eigen::MatrixXd acts;    // concat_dim x B
    Eigen::MatrixXd output;  // output_dim x B
  };

  const Eigen::MatrixXd& forward_batch(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x,
                                       const Eigen::MatrixXd& eta, Workspace& ws) const;

  // d_theta (if non-null) accumulates the gradient summed over columns;
  // d_eta (if non-null) receives per-column context gradients.
  void backward_batch(const Eigen::VectorXd& theta, const Workspace& ws,
                      const Eigen::MatrixXd& upstream, Eigen::VectorXd* d_theta,
                      Eigen::MatrixXd* d_eta) const;

  // Mean over tuples and vector elements of the squared error, with matching
  // gradients; all tuples must belong to the system owning eta.
  std::pair<double, GradientPair> mse_loss_and_grads(const Eigen::VectorXd& theta,
                                                     const Eigen::VectorXd& eta,
                                                     std::span<const DataTuple> batch) const;

  // Loss and eta-gradient only (theta frozen); the adaptation objective.
  std::pair<double, Eigen::VectorXd> mse_loss_and_eta_grad(const Eigen::VectorXd& theta,
                                                           const Eigen::VectorXd& eta,
                                                           std::span<const DataTuple> batch) const;

  double mse_loss(const Eigen::VectorXd& theta, const Eigen::VectorXd& eta,
                  std::span<const DataTuple> batch) const;

  struct LayerShape {
    int in;       // input width of this layer
    int out;      // rows of W
    int w_offset; // offset of W in the flat parameter vector (column-major)
    int b_offset; // offset of b
  };
  const std::vector<LayerShape>& layers() const { return layers_; }

 private:
  void check_theta(const Eigen::VectorXd& theta) const;

  NetworkSpec spec_;
  std::vector<LayerShape> layers_;  // hidden layers then output layer
  int param_count_ = 0;
  int concat_dim_ = 0;
};

}  // namespace malgo
