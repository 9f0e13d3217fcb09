#include "malgo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace malgo {

LogAggregate aggregate_log10(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("aggregate_log10: empty input");
  double sum = 0.0;
  std::vector<double> logs(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0))
      throw std::domain_error("aggregate_log10: nonpositive value at run " + std::to_string(i));
    logs[i] = std::log10(values[i]);
    sum += logs[i];
  }
  LogAggregate agg;
  agg.log_mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double l : logs) var += (l - agg.log_mean) * (l - agg.log_mean);
  agg.log_std = std::sqrt(var / static_cast<double>(values.size()));
  return agg;
}

namespace {

std::vector<double> ranks(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  std::vector<double> r(static_cast<std::size_t>(n));
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && v(order[j + 1]) == v(order[i])) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (Eigen::Index k = i; k <= j; ++k) r[static_cast<std::size_t>(order[k])] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman: need two equally sized vectors of length >= 2");
  std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) throw std::domain_error("spearman: constant input");
  return cov / std::sqrt(va * vb);
}

}  // namespace malgo
