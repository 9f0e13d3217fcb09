#pragma once

#include <Eigen/Dense>
#include <span>

namespace malgo {

struct LogAggregate {
  double log_mean = 0.0;
  double log_std = 0.0;  // population std
};

// Mean and population std of log10(values); all values must be > 0.
LogAggregate aggregate_log10(std::span<const double> values);

// Spearman rank correlation; ties receive average ranks.
double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace malgo
