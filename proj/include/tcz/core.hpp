#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tcz {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

constexpr double two_pi = 2.0 * std::numbers::pi;

// Internal units: angular frequency in rad/ns, time in ns.
constexpr double ghz(double f) { return two_pi * f; }
constexpr double mhz(double f) { return two_pi * f * 1e-3; }
constexpr double khz(double f) { return two_pi * f * 1e-6; }
constexpr double to_ghz(double w) { return w / two_pi; }
constexpr double to_mhz(double w) { return w / two_pi * 1e3; }

// Errors are split by what the caller can do about them: bad input versus a
// computation that did not converge or left its tolerance.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfRangeError : NumericalError {
  using NumericalError::NumericalError;
};
struct CalibrationError : NumericalError {
  using NumericalError::NumericalError;
};

enum class Basis { charge_a, charge_b, product_charge, joint_eigen, six_level, local };

std::string to_string(Basis b);

// Dense complex operator with a basis tag. Arithmetic between mismatched tags
// throws instead of silently mixing representations.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  OperatorMatrix(MatrixXcd m, Basis b) : m_(std::move(m)), basis_(b) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("OperatorMatrix must be square");
  }

  const MatrixXcd& matrix() const { return m_; }
  Basis basis() const { return basis_; }
  Eigen::Index dim() const { return m_.rows(); }
  cplx operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  double hermiticity_defect() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }
  bool is_hermitian(double tol = 1e-12) const { return dim() == 0 || hermiticity_defect() < tol; }

  OperatorMatrix operator+(const OperatorMatrix& o) const { return {m_ + checked(o), basis_}; }
  OperatorMatrix operator-(const OperatorMatrix& o) const { return {m_ - checked(o), basis_}; }
  OperatorMatrix operator*(const OperatorMatrix& o) const { return {m_ * checked(o), basis_}; }
  OperatorMatrix operator*(cplx s) const { return {m_ * s, basis_}; }
  OperatorMatrix adjoint() const { return {m_.adjoint(), basis_}; }

 private:
  const MatrixXcd& checked(const OperatorMatrix& o) const {
    if (o.basis_ != basis_)
      throw std::invalid_argument("basis mismatch: " + to_string(basis_) + " vs " +
                                  to_string(o.basis_));
    if (o.dim() != dim()) throw std::invalid_argument("dimension mismatch");
    return o.m_;
  }

  MatrixXcd m_;
  Basis basis_ = Basis::product_charge;
};

// Ascending energies, orthonormal columns. Each column is rotated so that its
// largest-magnitude entry is real and positive.
struct Spectrum {
  VectorXd energies;
  MatrixXcd vectors;
  Basis basis = Basis::product_charge;
};

Spectrum diagonalize(const OperatorMatrix& h);

// Real symmetric variant used on hot paths; same sign convention (largest
// entry positive).
struct RealSpectrum {
  VectorXd energies;
  MatrixXd vectors;
};

RealSpectrum diagonalize_real(const MatrixXd& h, bool vectors = true);
void fix_phases(MatrixXd& v);
void fix_phases(MatrixXcd& v);

}  // namespace tcz
