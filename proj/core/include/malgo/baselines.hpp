#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <utility>

#include "malgo/adaptation.hpp"
#include "malgo/meta_train.hpp"

namespace malgo {

enum class BaselineKind { IMODE, ScratchMLP };

// Identical bilevel loop with the adaptive schedule disabled: eta is
// optimized from epoch 1 and never frozen or noised.
std::pair<MetaModel, TrainLog> train_imode(const std::vector<DataTuple>& train_tuples,
                                           const NetworkSpec& spec, const TrainSchedule& base,
                                           std::uint64_t seed);

struct SgdAdaptConfig {
  int steps = 1000;
  double lr = 0.1;
  bool start_centroid = true;  // otherwise standard normal
  std::uint64_t seed = 0;
};

// Plain full-batch SGD on the adaptation objective (theta frozen).
AdaptationResult adapt_system_sgd(const MetaModel& model, std::span<const DataTuple> adapt_tuples,
                                  const SgdAdaptConfig& cfg);

AdaptationResult adapt_and_evaluate_sgd(const MetaModel& model,
                                        std::span<const DataTuple> adapt_tuples,
                                        std::span<const DataTuple> test_tuples,
                                        std::optional<StateKind> kind, const SgdAdaptConfig& cfg);

struct MlpSpec {
  int input_dim = 0;
  int hidden_layers = 7;
  int hidden_width = 50;
  int output_dim = 0;

  static MlpSpec dynamics(SystemFamily f);  // 7 hidden layers, width 50
  static MlpSpec characteristics();         // 6 hidden layers, width 28
};

// Plain fully connected tanh network (no dense concatenation, no context
// input); the from-scratch baseline.
class Mlp {
 public:
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  int param_count() const { return param_count_; }

  Eigen::VectorXd init_params(std::uint64_t seed) const;
  Eigen::MatrixXd forward(const Eigen::VectorXd& params, const Eigen::MatrixXd& x) const;
  // Mean element-wise MSE over columns with gradient.
  std::pair<double, Eigen::VectorXd> mse_loss_and_grad(const Eigen::VectorXd& params,
                                                       const Eigen::MatrixXd& x,
                                                       const Eigen::MatrixXd& y) const;

 private:
  struct Shape {
    int in, out, w_offset, b_offset;
  };
  MlpSpec spec_;
  std::vector<Shape> layers_;
  int param_count_ = 0;
};

struct ScratchConfig {
  int steps = 2000;
  double lr = 0.01;
  std::uint64_t seed = 0;
};

// Trains the MLP on the (tiny) adaptation set only; returns trained weights.
Eigen::VectorXd train_scratch_mlp(const Mlp& net, std::span<const DataTuple> adapt_tuples,
                                  const ScratchConfig& cfg);

EvalResult evaluate_mlp(const Mlp& net, const Eigen::VectorXd& params,
                        std::span<const DataTuple> test_tuples, std::optional<StateKind> kind);

}  // namespace malgo
