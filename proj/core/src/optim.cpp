#include "malgo/optim.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace malgo {

using Eigen::VectorXd;

Adam::Adam(Eigen::Index dim, AdamConfig cfg) : cfg_(cfg) {
  m_ = VectorXd::Zero(dim);
  v_ = VectorXd::Zero(dim);
}

void Adam::reset() {
  m_.setZero();
  v_.setZero();
  t_ = 0;
}

void Adam::step(VectorXd& params, const VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("Adam::step: shape mismatch");
  if (!grad.allFinite()) throw std::runtime_error("Adam::step: non-finite gradient");
  ++t_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  params.array() -=
      cfg_.lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + cfg_.eps);
}

void sgd_step(VectorXd& params, const VectorXd& grad, double lr) {
  if (params.size() != grad.size()) throw std::invalid_argument("sgd_step: shape mismatch");
  if (!grad.allFinite()) throw std::runtime_error("sgd_step: non-finite gradient");
  params -= lr * grad;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinePoint {
  double alpha;
  double phi;
  double dphi;
};

// phi(alpha) = f(x + alpha d); evaluates f and projects the gradient on d.
class LineObjective {
 public:
  LineObjective(const Objective& obj, const VectorXd& x, const VectorXd& d, LbfgsDiagnostics& diag)
      : obj_(obj), x_(x), d_(d), diag_(diag), xtrial_(x.size()), gtrial_(x.size()) {}

  LinePoint eval(double alpha) {
    xtrial_ = x_ + alpha * d_;
    double f = obj_(xtrial_, gtrial_);
    ++diag_.func_evals;
    return {alpha, f, gtrial_.dot(d_)};
  }

  const VectorXd& last_x() const { return xtrial_; }
  const VectorXd& last_grad() const { return gtrial_; }

 private:
  const Objective& obj_;
  const VectorXd& x_;
  const VectorXd& d_;
  LbfgsDiagnostics& diag_;
  VectorXd xtrial_, gtrial_;
};

// Interpolated trial step inside (lo, hi); quadratic fit with bisection fallback.
double interpolate(const LinePoint& lo, const LinePoint& hi) {
  double denom = 2.0 * (hi.phi - lo.phi - lo.dphi * (hi.alpha - lo.alpha));
  double alpha = lo.alpha;
  if (std::abs(denom) > 1e-300) {
    alpha = lo.alpha - lo.dphi * (hi.alpha - lo.alpha) * (hi.alpha - lo.alpha) / denom;
  }
  double lo_a = std::min(lo.alpha, hi.alpha), hi_a = std::max(lo.alpha, hi.alpha);
  double margin = 0.1 * (hi_a - lo_a);
  if (!std::isfinite(alpha) || alpha < lo_a + margin || alpha > hi_a - margin)
    alpha = 0.5 * (lo_a + hi_a);
  return alpha;
}

// Strong-Wolfe zoom stage (bracket shrinking).
bool zoom(LineObjective& line, LinePoint lo, LinePoint hi, double phi0, double dphi0, double c1,
          double c2, int max_evals, LinePoint& out) {
  for (int i = 0; i < max_evals; ++i) {
    LinePoint trial = line.eval(interpolate(lo, hi));
    if (!std::isfinite(trial.phi) || trial.phi > phi0 + c1 * trial.alpha * dphi0 ||
        trial.phi >= lo.phi) {
      hi = trial;
    } else {
      if (std::abs(trial.dphi) <= -c2 * dphi0) {
        out = trial;
        return true;
      }
      if (trial.dphi * (hi.alpha - lo.alpha) >= 0) hi = lo;
      lo = trial;
    }
    if (std::abs(hi.alpha - lo.alpha) < 1e-14) break;
  }
  // Accept the sufficient-decrease endpoint if one exists.
  if (std::isfinite(lo.phi) && lo.phi < phi0 && lo.alpha > 0) {
    out = lo;
    return true;
  }
  return false;
}

// Strong-Wolfe line search (bracketing plus zoom). Returns false when no
// acceptable step was found within the evaluation budget.
bool wolfe_line_search(LineObjective& line, double phi0, double dphi0, const LbfgsConfig& cfg,
                       LinePoint& out) {
  const double alpha_max = 1e4;
  LinePoint prev{0.0, phi0, dphi0};
  double alpha = 1.0;
  for (int i = 0; i < cfg.max_line_evals; ++i) {
    LinePoint cur = line.eval(alpha);
    if (!std::isfinite(cur.phi) || cur.phi > phi0 + cfg.wolfe_c1 * alpha * dphi0 ||
        (i > 0 && cur.phi >= prev.phi)) {
      return zoom(line, prev, cur, phi0, dphi0, cfg.wolfe_c1, cfg.wolfe_c2,
                  cfg.max_line_evals, out);
    }
    if (std::abs(cur.dphi) <= -cfg.wolfe_c2 * dphi0) {
      out = cur;
      return true;
    }
    if (cur.dphi >= 0) {
      return zoom(line, cur, prev, phi0, dphi0, cfg.wolfe_c1, cfg.wolfe_c2,
                  cfg.max_line_evals, out);
    }
    prev = cur;
    alpha = std::min(2.0 * alpha, alpha_max);
    if (alpha >= alpha_max) break;
  }
  return false;
}

struct Pair {
  VectorXd s, y;
  double rho;
};

VectorXd two_loop_direction(const VectorXd& grad, const std::deque<Pair>& history) {
  VectorXd q = grad;
  std::vector<double> alpha(history.size());
  for (int i = static_cast<int>(history.size()) - 1; i >= 0; --i) {
    alpha[i] = history[i].rho * history[i].s.dot(q);
    q -= alpha[i] * history[i].y;
  }
  if (!history.empty()) {
    const Pair& last = history.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < history.size(); ++i) {
    double beta = history[i].rho * history[i].y.dot(q);
    q += (alpha[i] - beta) * history[i].s;
  }
  return -q;
}

}  // namespace

MinimizeResult lbfgs_minimize(const Objective& obj, const VectorXd& x0, int max_iters,
                              const LbfgsConfig& cfg) {
  MinimizeResult res;
  VectorXd x = x0;
  VectorXd g(x.size());
  double f = obj(x, g);
  ++res.diag.func_evals;
  if (!std::isfinite(f)) throw std::domain_error("lbfgs_minimize: non-finite objective at x0");

  res.x = x;
  res.f = f;
  std::deque<Pair> history;

  for (int iter = 0; iter < max_iters; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) break;
    ++res.diag.iterations;

    VectorXd d = two_loop_direction(g, history);
    double dphi0 = g.dot(d);
    if (!(dphi0 < 0)) {  // not a descent direction; drop curvature memory
      history.clear();
      d = -g;
      dphi0 = -g.squaredNorm();
    }

    LineObjective line(obj, x, d, res.diag);
    LinePoint accepted{};
    bool ok = wolfe_line_search(line, f, dphi0, cfg, accepted);
    if (!ok) {
      // Backtracking steepest-descent fallback.
      ++res.diag.line_search_failures;
      d = -g;
      dphi0 = -g.squaredNorm();
      LineObjective fallback(obj, x, d, res.diag);
      double alpha = 1.0;
      bool improved = false;
      for (int k = 0; k < 40; ++k) {
        LinePoint p = fallback.eval(alpha);
        if (std::isfinite(p.phi) && p.phi <= f + cfg.wolfe_c1 * alpha * dphi0) {
          accepted = p;
          improved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!improved) break;  // no progress possible along -g
      history.clear();
      VectorXd x_new = x + accepted.alpha * d;
      VectorXd g_new = fallback.last_grad();
      x.swap(x_new);
      g.swap(g_new);
      f = accepted.phi;
    } else {
      VectorXd x_new = x + accepted.alpha * d;
      VectorXd g_new = line.last_grad();
      Pair p;
      p.s = x_new - x;
      p.y = g_new - g;
      double sy = p.s.dot(p.y);
      if (sy > 1e-10 * p.s.norm() * p.y.norm()) {
        p.rho = 1.0 / sy;
        history.push_back(std::move(p));
        if (static_cast<int>(history.size()) > cfg.memory) history.pop_front();
      } else {
        ++res.diag.skipped_pairs;
      }
      x.swap(x_new);
      g.swap(g_new);
      f = accepted.phi;
    }

    if (f < res.f) {
      res.f = f;
      res.x = x;
    }
  }
  return res;
}

RestartResult restarted_minimize(const Objective& obj,
                                 const std::function<VectorXd(int, Rng&)>& sampler,
                                 int n_restarts, int max_iters, std::uint64_t seed,
                                 const LbfgsConfig& cfg) {
  if (n_restarts < 1) throw std::invalid_argument("restarted_minimize: n_restarts must be >= 1");
  RestartResult best;
  best.f = kInf;
  best.restart_losses.assign(static_cast<std::size_t>(n_restarts), kInf);
  for (int r = 0; r < n_restarts; ++r) {
    Rng rng = make_rng(derive_seed(seed, "restart", static_cast<std::uint64_t>(r)));
    VectorXd x0 = sampler(r, rng);
    double f_r = kInf;
    try {
      MinimizeResult m = lbfgs_minimize(obj, x0, max_iters, cfg);
      f_r = m.f;
      if (m.f < best.f) {
        best.f = m.f;
        best.x = std::move(m.x);
        best.best_index = r;
      }
    } catch (const std::domain_error&) {
      // non-finite start; recorded as inf
    }
    best.restart_losses[static_cast<std::size_t>(r)] = f_r;
  }
  if (best.best_index < 0)
    throw std::runtime_error("restarted_minimize: all restarts were non-finite");
  return best;
}

}  // namespace malgo
