#include "malgo/meta_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "malgo/metrics.hpp"
#include "malgo/optim.hpp"

namespace malgo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string phase_name(TrainPhase p) {
  switch (p) {
    case TrainPhase::Noise: return "noise";
    case TrainPhase::Update: return "update";
    case TrainPhase::Freeze: return "freeze";
  }
  throw std::logic_error("phase_name: unknown phase");
}

TrainSchedule TrainSchedule::dynamics_defaults(SystemFamily f) {
  TrainSchedule s;
  s.batch_size = default_batch_size(f);
  return s;
}

TrainSchedule TrainSchedule::characteristics_defaults() {
  TrainSchedule s;
  s.batch_size = 200;
  return s;
}

TrainSchedule TrainSchedule::schedule_free() const {
  TrainSchedule s = *this;
  s.noise_until = 0;
  s.freeze_from = s.total_epochs + 1;
  return s;
}

TrainSchedule TrainSchedule::with_total_epochs(int total) const {
  if (total < 1) throw std::invalid_argument("TrainSchedule: total_epochs must be >= 1");
  TrainSchedule s = *this;
  auto scale = [&](int epoch) {
    return static_cast<int>((static_cast<long>(epoch) * total + total_epochs / 2) / total_epochs);
  };
  s.noise_until = std::min(scale(noise_until), total - 1);
  s.freeze_from = std::clamp(scale(freeze_from), s.noise_until + 1, total + 1);
  s.total_epochs = total;
  return s;
}

TrainPhase TrainSchedule::phase(int epoch) const {
  if (epoch <= noise_until) return TrainPhase::Noise;
  if (epoch >= freeze_from) return TrainPhase::Freeze;
  return TrainPhase::Update;
}

void TrainSchedule::validate() const {
  if (total_epochs < 1) throw std::invalid_argument("TrainSchedule: total_epochs must be >= 1");
  if (noise_until < 0 || noise_until >= freeze_from || freeze_from > total_epochs + 1)
    throw std::invalid_argument("TrainSchedule: need 0 <= noise_until < freeze_from <= total_epochs+1");
  if (s_theta < 1 || s_eta < 1) throw std::invalid_argument("TrainSchedule: step counts must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainSchedule: batch_size must be >= 1");
  if (!(lr_theta > 0) || !(lr_eta > 0)) throw std::invalid_argument("TrainSchedule: learning rates must be > 0");
}

Eigen::VectorXd MetaModel::eta_centroid() const {
  if (eta_table.empty()) throw std::logic_error("MetaModel: empty eta table");
  VectorXd c = VectorXd::Zero(spec.eta_dim);
  for (const auto& [id, eta] : eta_table) c += eta;
  return c / static_cast<double>(eta_table.size());
}

void TrainLog::to_csv(std::ostream& os) const {
  if (entries.empty()) return;
  os << "epoch,phase,loss";
  for (const auto& [id, eta] : entries.front().eta)
    for (Eigen::Index k = 0; k < eta.size(); ++k) os << ",eta_" << id << "_" << k;
  os << "\n";
  os.precision(17);
  for (const auto& e : entries) {
    os << e.epoch << "," << phase_name(e.phase) << "," << e.loss;
    for (const auto& [id, eta] : e.eta)
      for (Eigen::Index k = 0; k < eta.size(); ++k) os << "," << eta(k);
    os << "\n";
  }
}

namespace {

struct BatchView {
  MatrixXd x, y;                          // full batch, one tuple per column
  std::vector<int> system_of_col;         // owning system per column
  std::map<int, std::vector<int>> cols_by_system;
};

void gather_batch(const std::vector<DataTuple>& tuples, const std::vector<int>& perm,
                  std::size_t begin, std::size_t end, const NetworkSpec& spec, BatchView& bv) {
  const Eigen::Index b = static_cast<Eigen::Index>(end - begin);
  bv.x.resize(spec.state_dim, b);
  bv.y.resize(spec.output_dim, b);
  bv.system_of_col.resize(static_cast<std::size_t>(b));
  bv.cols_by_system.clear();
  for (Eigen::Index c = 0; c < b; ++c) {
    const DataTuple& t = tuples[static_cast<std::size_t>(perm[begin + static_cast<std::size_t>(c)])];
    bv.x.col(c) = t.x;
    bv.y.col(c) = t.y;
    bv.system_of_col[static_cast<std::size_t>(c)] = t.system_id;
    bv.cols_by_system[t.system_id].push_back(static_cast<int>(c));
  }
}

// Loss and upstream of the element-wise MSE over a prediction block.
double mse_upstream(const MatrixXd& pred, const MatrixXd& y, MatrixXd& upstream) {
  double norm = 1.0 / (static_cast<double>(pred.cols()) * static_cast<double>(pred.rows()));
  upstream = pred - y;
  double loss = upstream.squaredNorm() * norm;
  upstream *= 2.0 * norm;
  return loss;
}

}  // namespace

std::pair<MetaModel, TrainLog> train(const std::vector<DataTuple>& train_tuples,
                                     const NetworkSpec& spec, const TrainSchedule& schedule,
                                     std::uint64_t seed, const TrainHooks* hooks) {
  schedule.validate();
  if (train_tuples.empty()) throw std::invalid_argument("train: empty training set");

  DenseNet net(spec);
  std::set<int> id_set;
  for (const auto& t : train_tuples) id_set.insert(t.system_id);
  std::vector<int> ids(id_set.begin(), id_set.end());

  VectorXd theta = net.init_params(derive_seed(seed, "theta"));
  Rng eta_rng = make_rng(derive_seed(seed, "eta-init"));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::map<int, VectorXd> eta_table;
  std::map<int, Adam> eta_adams;
  for (int id : ids) {
    VectorXd eta(spec.eta_dim);
    for (Eigen::Index k = 0; k < eta.size(); ++k) eta(k) = normal(eta_rng);
    eta_table.emplace(id, std::move(eta));
    eta_adams.emplace(id, Adam(spec.eta_dim, AdamConfig{schedule.lr_eta, 0.9, 0.999, 1e-8}));
  }

  Adam theta_adam(net.param_count(), AdamConfig{schedule.lr_theta, 0.9, 0.999, 1e-8});
  Rng shuffle_rng = make_rng(derive_seed(seed, "shuffle"));
  Rng noise_rng = make_rng(derive_seed(seed, "noise"));

  const std::size_t n = train_tuples.size();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  TrainLog log;
  log.entries.reserve(static_cast<std::size_t>(schedule.total_epochs));

  BatchView bv;
  DenseNet::Workspace ws, ws_eta;
  MatrixXd eta_cols, upstream, d_eta;
  VectorXd grad(net.param_count());

  for (int epoch = 1; epoch <= schedule.total_epochs; ++epoch) {
    TrainPhase phase = schedule.phase(epoch);
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);
    double epoch_loss = 0.0;

    const std::size_t batch = static_cast<std::size_t>(schedule.batch_size);
    int batch_index = 0;
    for (std::size_t begin = 0; begin < n; begin += batch, ++batch_index) {
      std::size_t end = std::min(begin + batch, n);
      gather_batch(train_tuples, perm, begin, end, spec, bv);
      const Eigen::Index b = bv.x.cols();

      // theta steps (eta fixed; in the noise phase eta is redrawn first)
      for (int st = 0; st < schedule.s_theta; ++st) {
        if (phase == TrainPhase::Noise) {
          for (int id : ids) {
            VectorXd& eta = eta_table[id];
            for (Eigen::Index k = 0; k < eta.size(); ++k) eta(k) = normal(noise_rng);
          }
        }
        eta_cols.resize(spec.eta_dim, b);
        for (Eigen::Index c = 0; c < b; ++c)
          eta_cols.col(c) = eta_table[bv.system_of_col[static_cast<std::size_t>(c)]];
        const MatrixXd& pred = net.forward_batch(theta, bv.x, eta_cols, ws);
        double loss = mse_upstream(pred, bv.y, upstream);
        if (!std::isfinite(loss))
          throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index));
        grad.setZero();
        net.backward_batch(theta, ws, upstream, &grad, nullptr);
        if (st == 0) {
          epoch_loss += loss * static_cast<double>(b);
          if (hooks && hooks->on_theta_grad) hooks->on_theta_grad(epoch, batch_index, grad);
        }
        theta_adam.step(theta, grad);
      }
      if (hooks && hooks->after_theta_steps) hooks->after_theta_steps(epoch, batch_index, theta);

      // eta steps, one system at a time (theta fixed)
      if (phase == TrainPhase::Update) {
        for (const auto& [sys, cols] : bv.cols_by_system) {
          MatrixXd xs(spec.state_dim, static_cast<Eigen::Index>(cols.size()));
          MatrixXd ys(spec.output_dim, static_cast<Eigen::Index>(cols.size()));
          for (std::size_t c = 0; c < cols.size(); ++c) {
            xs.col(static_cast<Eigen::Index>(c)) = bv.x.col(cols[c]);
            ys.col(static_cast<Eigen::Index>(c)) = bv.y.col(cols[c]);
          }
          VectorXd& eta = eta_table[sys];
          Adam& adam = eta_adams.at(sys);
          for (int se = 0; se < schedule.s_eta; ++se) {
            const MatrixXd& pred = net.forward_batch(theta, xs, eta.replicate(1, xs.cols()), ws_eta);
            double loss = mse_upstream(pred, ys, upstream);
            if (!std::isfinite(loss))
              throw std::runtime_error("train: non-finite eta loss at epoch " +
                                       std::to_string(epoch) + ", batch " +
                                       std::to_string(batch_index) + ", system " +
                                       std::to_string(sys));
            net.backward_batch(theta, ws_eta, upstream, nullptr, &d_eta);
            VectorXd g = d_eta.rowwise().sum();
            adam.step(eta, g);
          }
        }
      }
      if (hooks && hooks->after_eta_steps)
        hooks->after_eta_steps(epoch, batch_index, theta, eta_table);
    }

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.phase = phase;
    entry.loss = epoch_loss / static_cast<double>(n);
    entry.eta = eta_table;
    log.entries.push_back(std::move(entry));
  }

  MetaModel model{spec, std::move(theta), std::move(eta_table)};
  return {std::move(model), std::move(log)};
}

double eta_correlation(const MetaModel& model, const std::vector<SystemInstance>& instances) {
  if (model.spec.eta_dim != 1)
    throw std::invalid_argument("eta_correlation: defined only for 1-D eta");
  std::vector<double> etas, params;
  for (const auto& inst : instances) {
    auto it = model.eta_table.find(inst.id);
    if (it == model.eta_table.end()) continue;
    if (inst.params.size() != 1)
      throw std::invalid_argument("eta_correlation: defined only for 1-D system parameters");
    etas.push_back(it->second(0));
    params.push_back(inst.params(0));
  }
  if (etas.size() < 2) throw std::invalid_argument("eta_correlation: need at least two systems");
  Eigen::Map<VectorXd> a(etas.data(), static_cast<Eigen::Index>(etas.size()));
  Eigen::Map<VectorXd> b(params.data(), static_cast<Eigen::Index>(params.size()));
  return spearman(a, b);
}

}  // namespace malgo
