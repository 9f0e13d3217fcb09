#include "malgo/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace malgo {

namespace {
constexpr Complex kI{0.0, 1.0};
}

Complex& ComplexMatrix::at(Eigen::Index i, Eigen::Index j) {
  if (i < 0 || i >= rows() || j < 0 || j >= cols())
    throw std::out_of_range("ComplexMatrix::at: index out of range");
  return m(i, j);
}

const Complex& ComplexMatrix::at(Eigen::Index i, Eigen::Index j) const {
  if (i < 0 || i >= rows() || j < 0 || j >= cols())
    throw std::out_of_range("ComplexMatrix::at: index out of range");
  return m(i, j);
}

bool ComplexMatrix::is_hermitian(double tol) const {
  if (rows() != cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix product: dimension mismatch");
  return ComplexMatrix(a.m * b.m);
}

ComplexMatrix sigma_x() {
  Eigen::Matrix2cd s;
  s << 0, 1, 1, 0;
  return ComplexMatrix(s);
}

ComplexMatrix sigma_y() {
  Eigen::Matrix2cd s;
  s << 0, -kI, kI, 0;
  return ComplexMatrix(s);
}

ComplexMatrix sigma_z() {
  Eigen::Matrix2cd s;
  s << 1, 0, 0, -1;
  return ComplexMatrix(s);
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a.m(i, j) * b.m;
  return ComplexMatrix(std::move(out));
}

QuantumState::QuantumState(Eigen::VectorXcd amplitudes) : amps_(std::move(amplitudes)) {
  if (amps_.size() != 2 && amps_.size() != 4)
    throw std::invalid_argument("QuantumState: dimension must be 2 or 4");
  if (std::abs(amps_.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("QuantumState: norm deviates from 1 by more than 1e-10");
}

QuantumState QuantumState::normalized(const Eigen::VectorXcd& amplitudes) {
  double n = amplitudes.norm();
  if (n <= 0.0) throw std::domain_error("QuantumState::normalized: zero-norm vector");
  return QuantumState(amplitudes / n);
}

DensityMatrix::DensityMatrix(Eigen::Matrix2cd rho) : rho_(std::move(rho)) {
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("DensityMatrix: not Hermitian to 1e-12");
  if (std::abs(rho_.trace().real() - 1.0) > 1e-10 || std::abs(rho_.trace().imag()) > 1e-10)
    throw std::invalid_argument("DensityMatrix: trace deviates from 1 by more than 1e-10");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::invalid_argument("DensityMatrix: negative eigenvalue below -1e-10");
}

DensityMatrix DensityMatrix::from_ket(const QuantumState& psi) {
  if (psi.dim() != 2) throw std::invalid_argument("DensityMatrix::from_ket: dimension must be 2");
  Eigen::Matrix2cd rho = psi.amplitudes() * psi.amplitudes().adjoint();
  return DensityMatrix(rho);
}

ComplexMatrix expm_hermitian(const ComplexMatrix& h, double t) {
  if (h.rows() != h.cols() || h.rows() > 4)
    throw std::invalid_argument("expm_hermitian: need square matrix with d <= 4");
  if (!h.is_hermitian(1e-12)) throw std::invalid_argument("expm_hermitian: input not Hermitian");
  if (t == 0.0) return ComplexMatrix::identity(h.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.m);
  if (es.info() != Eigen::Success) throw std::runtime_error("expm_hermitian: eigensolver failed");
  Eigen::VectorXcd phases = (-kI * t * es.eigenvalues().array().cast<Complex>()).exp();
  return ComplexMatrix(es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint());
}

QuantumState propagate_closed(const QuantumState& psi, const ComplexMatrix& h, double dt) {
  if (h.rows() != psi.dim()) throw std::invalid_argument("propagate_closed: dimension mismatch");
  if (dt == 0.0) return psi;
  ComplexMatrix u = expm_hermitian(h, dt);
  return QuantumState(u.m * psi.amplitudes());
}

ComplexMatrix tls_hamiltonian(double delta) {
  return ComplexMatrix(delta * sigma_x().m + (1.0 - delta) * sigma_z().m);
}

ComplexMatrix heisenberg_hamiltonian(double j, double c1, double c2) {
  ComplexMatrix id2 = ComplexMatrix::identity(2);
  Eigen::MatrixXcd h = j * (kron(sigma_x(), sigma_x()).m + kron(sigma_y(), sigma_y()).m +
                            kron(sigma_z(), sigma_z()).m) +
                       c1 * kron(sigma_z(), id2).m + c2 * kron(id2, sigma_z()).m;
  return ComplexMatrix(std::move(h));
}

ComplexMatrix lindblad_superoperator(double delta, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("lindblad_superoperator: gamma must be >= 0");
  ComplexMatrix h = tls_hamiltonian(delta);
  ComplexMatrix id2 = ComplexMatrix::identity(2);
  ComplexMatrix sz = sigma_z();
  // Row-major vec: vec(A rho B) = (A (x) B^T) vec(rho). sz is symmetric.
  Eigen::MatrixXcd lsup = -kI * (kron(h, id2).m - kron(id2, ComplexMatrix(h.m.transpose())).m);
  lsup += gamma * (kron(sz, sz).m - Eigen::MatrixXcd::Identity(4, 4));
  return ComplexMatrix(std::move(lsup));
}

DensityMatrix propagate_lindblad(const DensityMatrix& rho, double delta, double gamma, double dt) {
  if (gamma < 0.0) throw std::invalid_argument("propagate_lindblad: gamma must be >= 0");
  if (dt == 0.0) return rho;
  Eigen::MatrixXcd p = (lindblad_superoperator(delta, gamma).m * dt).exp();
  Eigen::Vector4cd v;
  v << rho.matrix()(0, 0), rho.matrix()(0, 1), rho.matrix()(1, 0), rho.matrix()(1, 1);
  Eigen::Vector4cd w = p * v;
  Eigen::Matrix2cd out;
  out << w(0), w(1), w(2), w(3);
  // Hermitize away the ~1e-16 asymmetry left by the matrix exponential.
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(out);
}

Eigen::VectorXd vectorize(const QuantumState& psi) {
  Eigen::Index d = psi.dim();
  Eigen::VectorXd v(2 * d);
  v.head(d) = psi.amplitudes().real();
  v.tail(d) = psi.amplitudes().imag();
  return v;
}

Eigen::VectorXd vectorize(const DensityMatrix& rho) {
  Eigen::VectorXd v(8);
  const Eigen::Matrix2cd& r = rho.matrix();
  v << r(0, 0).real(), r(0, 1).real(), r(1, 0).real(), r(1, 1).real(),
      r(0, 0).imag(), r(0, 1).imag(), r(1, 0).imag(), r(1, 1).imag();
  return v;
}

Eigen::VectorXcd devectorize_ket_raw(const Eigen::VectorXd& v) {
  if (v.size() != 4 && v.size() != 8)
    throw std::invalid_argument("devectorize_ket: length must be 4 or 8");
  Eigen::Index d = v.size() / 2;
  Eigen::VectorXcd amps(d);
  amps.real() = v.head(d);
  amps.imag() = v.tail(d);
  return amps;
}

Eigen::Matrix2cd devectorize_rho_raw(const Eigen::VectorXd& v) {
  if (v.size() != 8) throw std::invalid_argument("devectorize_rho: length must be 8");
  Eigen::Matrix2cd r;
  r << Complex(v(0), v(4)), Complex(v(1), v(5)), Complex(v(2), v(6)), Complex(v(3), v(7));
  return r;
}

QuantumState devectorize_ket(const Eigen::VectorXd& v) { return QuantumState(devectorize_ket_raw(v)); }

DensityMatrix devectorize_rho(const Eigen::VectorXd& v) { return DensityMatrix(devectorize_rho_raw(v)); }

Eigen::Matrix2cd project_to_density(const Eigen::Matrix2cd& a) {
  Eigen::Matrix2cd herm = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(herm);
  Eigen::Vector2d lam = es.eigenvalues().cwiseMax(0.0);
  double tr = lam.sum();
  if (tr <= 0.0) throw std::domain_error("project_to_density: projection has zero trace");
  lam /= tr;
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

namespace {

double uhlmann_fidelity(const Eigen::Matrix2cd& rho_p, const Eigen::Matrix2cd& rho_t) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho_p);
  Eigen::Vector2d lam = es.eigenvalues().cwiseMax(0.0);
  Eigen::Matrix2cd sqrt_p =
      es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
  Eigen::Matrix2cd inner = sqrt_p * rho_t * sqrt_p;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es2(0.5 * (inner + inner.adjoint()));
  double root_sum = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return root_sum * root_sum;
}

}  // namespace

double infidelity(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, StateKind kind) {
  if (pred.size() != truth.size()) throw std::invalid_argument("infidelity: length mismatch");
  double f = 0.0;
  if (kind == StateKind::Ket) {
    Eigen::VectorXcd p = devectorize_ket_raw(pred);
    Eigen::VectorXcd t = devectorize_ket_raw(truth);
    double np = p.norm();
    if (np <= 0.0) throw std::domain_error("infidelity: zero-norm prediction");
    f = std::norm(t.dot(p / np));
  } else {
    Eigen::Matrix2cd rp = project_to_density(devectorize_rho_raw(pred));
    Eigen::Matrix2cd rt = devectorize_rho_raw(truth);
    f = uhlmann_fidelity(rp, rt);
  }
  return std::clamp(1.0 - f, 0.0, 1.0);
}

}  // namespace malgo
