#pragma once

// Shared test oracles, independent of the library's implementation paths.

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <vector>

#include "malgo/densenet.hpp"

namespace testutil {

using Complex = std::complex<double>;

// exp(-i H t) by scaling-and-squaring of a truncated Taylor series; only
// matrix products, no eigendecomposition.
inline Eigen::MatrixXcd oracle_expm(const Eigen::MatrixXcd& h, double t) {
  Eigen::MatrixXcd a = Complex(0.0, -1.0) * t * h;
  int squarings = 0;
  double norm = a.cwiseAbs().sum();
  while (norm > 0.5) {
    a *= 0.5;
    norm *= 0.5;
    ++squarings;
  }
  Eigen::MatrixXcd result = Eigen::MatrixXcd::Identity(h.rows(), h.cols());
  Eigen::MatrixXcd term = result;
  for (int k = 1; k <= 25; ++k) {
    term = term * a / static_cast<double>(k);
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

inline Eigen::MatrixXcd random_hermitian(std::mt19937_64& rng, int d, double max_norm) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(normal(rng), normal(rng));
  Eigen::MatrixXcd h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  double norm = es.eigenvalues().cwiseAbs().maxCoeff();
  if (norm > 0) h *= max_norm / norm;
  return h;
}

// Straight-line reimplementation of the dense-concatenation forward pass:
// scalar loops over the flat parameter vector, no shared code with DenseNet.
inline Eigen::VectorXd naive_dense_forward(const malgo::NetworkSpec& spec,
                                           const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& eta) {
  std::vector<double> concat;
  for (Eigen::Index i = 0; i < x.size(); ++i) concat.push_back(x(i));
  for (Eigen::Index i = 0; i < eta.size(); ++i) concat.push_back(eta(i));
  int offset = 0;
  int in = spec.input_dim();
  for (int l = 0; l < spec.hidden_layers; ++l) {
    std::vector<double> h(static_cast<std::size_t>(spec.hidden_width));
    for (int r = 0; r < spec.hidden_width; ++r) {
      double z = theta(offset + in * spec.hidden_width + r);  // bias
      for (int c = 0; c < in; ++c)
        z += theta(offset + c * spec.hidden_width + r) * concat[static_cast<std::size_t>(c)];
      h[static_cast<std::size_t>(r)] = std::tanh(z);
    }
    offset += in * spec.hidden_width + spec.hidden_width;
    for (double v : h) concat.push_back(v);
    in += spec.hidden_width;
  }
  Eigen::VectorXd out(spec.output_dim);
  for (int r = 0; r < spec.output_dim; ++r) {
    double z = theta(offset + in * spec.output_dim + r);
    for (int c = 0; c < in; ++c)
      z += theta(offset + c * spec.output_dim + r) * concat[static_cast<std::size_t>(c)];
    out(r) = z;
  }
  return out;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace testutil
