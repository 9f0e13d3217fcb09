#include <doctest.h>

#include <cmath>
#include <random>

#include "malgo/metrics.hpp"

using namespace malgo;

TEST_CASE("aggregate_log10 on {1e-2, 1e-4} gives mean -3, std 1") {
  std::vector<double> v = {1e-2, 1e-4};
  LogAggregate agg = aggregate_log10(v);
  CHECK(agg.log_mean == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(agg.log_std == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("aggregate_log10 of a single value has zero std") {
  std::vector<double> v = {0.037};
  LogAggregate agg = aggregate_log10(v);
  CHECK(agg.log_mean == doctest::Approx(std::log10(0.037)).epsilon(1e-15));
  CHECK(agg.log_std == 0.0);
}

TEST_CASE("aggregate_log10 matches a direct recomputation on random draws") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uni(1e-6, 10.0);
  std::vector<double> v;
  for (int i = 0; i < 10; ++i) v.push_back(uni(rng));
  LogAggregate agg = aggregate_log10(v);
  double mean = 0;
  for (double x : v) mean += std::log10(x);
  mean /= 10.0;
  double var = 0;
  for (double x : v) var += (std::log10(x) - mean) * (std::log10(x) - mean);
  var /= 10.0;
  CHECK(agg.log_mean == doctest::Approx(mean).epsilon(1e-14));
  CHECK(agg.log_std == doctest::Approx(std::sqrt(var)).epsilon(1e-14));
}

TEST_CASE("aggregate_log10 is scale-equivariant") {
  std::vector<double> v = {0.5, 0.02, 0.9, 0.004};
  LogAggregate base = aggregate_log10(v);
  std::vector<double> scaled;
  for (double x : v) scaled.push_back(100.0 * x);
  LogAggregate s = aggregate_log10(scaled);
  CHECK(s.log_mean == doctest::Approx(base.log_mean + 2.0).epsilon(1e-12));
  CHECK(s.log_std == doctest::Approx(base.log_std).epsilon(1e-12));
}

TEST_CASE("aggregate_log10 rejects nonpositive values naming the run") {
  std::vector<double> v = {0.5, 0.0, 0.9};
  try {
    aggregate_log10(v);
    FAIL("expected std::domain_error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("run 1") != std::string::npos);
  }
  CHECK_THROWS_AS(aggregate_log10(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("spearman is rank-based and sign-aware") {
  Eigen::VectorXd a(5), b(5);
  a << 0.1, 0.4, 0.2, 0.9, 0.7;
  b = a;  // identical ranks
  CHECK(spearman(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::VectorXd c = -2.0 * a.array() + 5.0;  // monotone decreasing transform
  CHECK(spearman(a, c) == doctest::Approx(-1.0).epsilon(1e-12));
  Eigen::VectorXd d = (a.array() * 10.0).tanh();  // monotone nonlinear transform
  CHECK(spearman(a, d) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spearman handles ties via average ranks") {
  Eigen::VectorXd a(4), b(4);
  a << 1, 1, 2, 3;
  b << 10, 10, 20, 30;
  CHECK(spearman(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::VectorXd constant = Eigen::VectorXd::Ones(4);
  CHECK_THROWS_AS(spearman(a, constant), std::domain_error);
}
