#include "tcz/core.hpp"

#include <Eigen/Eigenvalues>

namespace tcz {

std::string to_string(Basis b) {
  switch (b) {
    case Basis::charge_a: return "charge(a)";
    case Basis::charge_b: return "charge(b)";
    case Basis::product_charge: return "product-charge";
    case Basis::joint_eigen: return "joint-eigen(t0)";
    case Basis::six_level: return "six-level";
    case Basis::local: return "local-product";
  }
  return "?";
}

void fix_phases(MatrixXd& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index i;
    v.col(c).cwiseAbs().maxCoeff(&i);
    if (v(i, c) < 0) v.col(c) *= -1.0;
  }
}

void fix_phases(MatrixXcd& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index i;
    v.col(c).cwiseAbs2().maxCoeff(&i);
    const cplx z = v(i, c);
    if (std::abs(z) > 0) v.col(c) *= std::conj(z) / std::abs(z);
    v(i, c) = std::abs(v(i, c));
  }
}

Spectrum diagonalize(const OperatorMatrix& h) {
  const double scale = std::max(1.0, h.matrix().cwiseAbs().maxCoeff());
  if (!h.is_hermitian(1e-12 * scale))
    throw std::invalid_argument("diagonalize: matrix is not Hermitian (defect " +
                                std::to_string(h.hermiticity_defect()) + ")");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h.matrix());
  if (es.info() != Eigen::Success) throw NumericalError("diagonalize: eigensolver failed");
  Spectrum s{es.eigenvalues(), es.eigenvectors(), h.basis()};
  fix_phases(s.vectors);
  return s;
}

RealSpectrum diagonalize_real(const MatrixXd& h, bool vectors) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(
      h, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("diagonalize: eigensolver failed");
  RealSpectrum s{es.eigenvalues(), {}};
  if (vectors) {
    s.vectors = es.eigenvectors();
    fix_phases(s.vectors);
  }
  return s;
}

}  // namespace tcz
