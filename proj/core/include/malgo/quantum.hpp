#pragma once

#include <Eigen/Dense>
#include <complex>

namespace malgo {

using Complex = std::complex<double>;

// Dense complex matrix for 2- and 4-dimensional systems. Thin wrapper around
// Eigen that adds bounds-checked access and a Hermiticity probe.
struct ComplexMatrix {
  Eigen::MatrixXcd m;

  ComplexMatrix() = default;
  explicit ComplexMatrix(Eigen::MatrixXcd mat) : m(std::move(mat)) {}
  ComplexMatrix(Eigen::Index rows, Eigen::Index cols) : m(Eigen::MatrixXcd::Zero(rows, cols)) {}

  static ComplexMatrix identity(Eigen::Index d) { return ComplexMatrix(Eigen::MatrixXcd::Identity(d, d)); }

  Eigen::Index rows() const { return m.rows(); }
  Eigen::Index cols() const { return m.cols(); }

  Complex& at(Eigen::Index i, Eigen::Index j);
  const Complex& at(Eigen::Index i, Eigen::Index j) const;

  bool is_hermitian(double tol = 1e-12) const;
};

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

// Pauli matrices (2x2).
ComplexMatrix sigma_x();
ComplexMatrix sigma_y();
ComplexMatrix sigma_z();

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// Pure state of dimension 2 or 4; unit norm to 1e-10 is enforced at
// construction and preserved by propagation.
class QuantumState {
 public:
  explicit QuantumState(Eigen::VectorXcd amplitudes);
  static QuantumState normalized(const Eigen::VectorXcd& amplitudes);

  const Eigen::VectorXcd& amplitudes() const { return amps_; }
  Eigen::Index dim() const { return amps_.size(); }

 private:
  Eigen::VectorXcd amps_;
};

// 2x2 density matrix: Hermitian to 1e-12, unit trace to 1e-10, eigenvalues
// bounded below by -1e-10.
class DensityMatrix {
 public:
  explicit DensityMatrix(Eigen::Matrix2cd rho);
  static DensityMatrix from_ket(const QuantumState& psi);

  const Eigen::Matrix2cd& matrix() const { return rho_; }

 private:
  Eigen::Matrix2cd rho_;
};

// exp(-i H t) for Hermitian H with d <= 4, via eigendecomposition.
// t == 0 returns the exact identity.
ComplexMatrix expm_hermitian(const ComplexMatrix& h, double t);

QuantumState propagate_closed(const QuantumState& psi, const ComplexMatrix& h, double dt);

// H(delta) = delta*sigma_x + (1-delta)*sigma_z.
ComplexMatrix tls_hamiltonian(double delta);

// Two-spin exchange with local z fields:
// H = J (sx(x)sx + sy(x)sy + sz(x)sz) + c1 sz(x)I + c2 I(x)sz.
ComplexMatrix heisenberg_hamiltonian(double j, double c1, double c2);

// 4x4 superoperator of rho_dot = -i [H(delta), rho] + gamma (sz rho sz - rho)
// acting on row-major vec(rho).
ComplexMatrix lindblad_superoperator(double delta, double gamma);

// Exact propagation: rho(dt) = unvec(exp(L dt) vec(rho)).
DensityMatrix propagate_lindblad(const DensityMatrix& rho, double delta, double gamma, double dt);

// Real vectorization. Kets in C^d map to 2d reals (all real parts, then all
// imaginary parts); 2x2 density matrices map to 8 reals (re of all 4 entries
// row-major, then im of all 4).
Eigen::VectorXd vectorize(const QuantumState& psi);
Eigen::VectorXd vectorize(const DensityMatrix& rho);
QuantumState devectorize_ket(const Eigen::VectorXd& v);
DensityMatrix devectorize_rho(const Eigen::VectorXd& v);
// Unvalidated variants used on network outputs, which need not be physical.
Eigen::VectorXcd devectorize_ket_raw(const Eigen::VectorXd& v);
Eigen::Matrix2cd devectorize_rho_raw(const Eigen::VectorXd& v);

// Hermitize, clip negative eigenvalues to zero, renormalize the trace.
Eigen::Matrix2cd project_to_density(const Eigen::Matrix2cd& a);

enum class StateKind { Ket, Rho };

// 1 - fidelity between a predicted and a true vectorized state, in [0, 1].
// Kets: prediction is normalized first. Density matrices: prediction is
// projected to the nearest valid state, then Uhlmann fidelity is used.
double infidelity(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, StateKind kind);

}  // namespace malgo
