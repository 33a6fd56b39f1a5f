#include "tcz/propagation.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace tcz {

void PropagationConfig::validate() const {
  if (!(rel_tol > 0 && rel_tol <= 1e-6)) throw ConfigError("integrator: rel_tol must be in (0, 1e-6]");
  if (!(max_step > 0)) throw ConfigError("integrator: max_step must be positive");
  if (truncation < 20) throw ConfigError("integrator: joint truncation must be >= 20");
  if (transmon_levels < 6) throw ConfigError("integrator: transmon truncation must be >= 6");
  if (subspace_states < 10) throw ConfigError("integrator: subspace_states must be >= 10");
  if (!(dissipator_step > 0)) throw ConfigError("integrator: dissipator_step must be positive");
}

AffineModel::AffineModel(MatrixXd h0, MatrixXd v, Basis b)
    : H0(std::move(h0)), V(std::move(v)), basis(b) {
  C = H0 * V - V * H0;
}

AffineModel AffineModel::truncated(Eigen::Index n) const {
  return AffineModel(H0.topLeftCorner(n, n), V.topLeftCorner(n, n), basis);
}

AffineModel transmon_model(const TransmonSpec& spec, double E_J_ref, int levels) {
  const auto lv = transmon_levels(spec, E_J_ref, levels, true);
  const MatrixXd W = -(lv.vectors.transpose() * cos_phi_operator(spec.charge_cutoff) * lv.vectors);
  MatrixXd H0 = -E_J_ref * W;
  H0.diagonal() += (lv.energies.array() - lv.energies(0)).matrix();
  return AffineModel(H0, W, Basis::local);
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

JointBasis::JointBasis(const DeviceSpec& device, int states) : device_(device) {
  const double EJ = device.park_EJ();
  const auto s = coupled_lowest(device, EJ, states, true);
  energies_ = s.energies.array() - s.energies(0);
  P_ = s.vectors;
  const int ma = device.tunable.charge_cutoff, na = 2 * ma + 1, nb = device.parked.dim();
  // -cos(phi_a) x 1 acting on the product-charge columns.
  MatrixXd VP = MatrixXd::Zero(P_.rows(), P_.cols());
  for (int ia = 0; ia < na; ++ia) {
    if (ia + 1 < na) VP.middleRows(ia * nb, nb) -= 0.5 * P_.middleRows((ia + 1) * nb, nb);
    if (ia > 0) VP.middleRows(ia * nb, nb) -= 0.5 * P_.middleRows((ia - 1) * nb, nb);
  }
  MatrixXd W = P_.transpose() * VP;
  W = 0.5 * (W + W.transpose()).eval();
  MatrixXd H0 = -EJ * W;
  H0.diagonal() += energies_;
  model_ = AffineModel(H0, W, Basis::joint_eigen);

  Ua_ = transmon_levels(device.tunable, EJ, K_, true).vectors;
  Ub_ = transmon_levels(device.parked, device.parked_EJ(), K_, true).vectors;
  for (int c = 0; c < states; ++c) {
    Eigen::Map<const RowMat> psi(P_.col(c).data(), na, nb);
    const MatrixXd O = Ua_.transpose() * psi * Ub_;
    Eigen::Index i, j;
    O.cwiseAbs().maxCoeff(&i, &j);
    labels_.push_back({int(i), int(j)});
  }
}

int JointBasis::index(int ia, int jb) const {
  int found = -1;
  for (size_t k = 0; k < labels_.size(); ++k)
    if (labels_[k][0] == ia && labels_[k][1] == jb) {
      if (found >= 0) {
        std::ostringstream os;
        os << "ambiguous labeling: two eigenstates claim |" << ia << jb << ">";
        throw NumericalError(os.str());
      }
      found = int(k);
    }
  if (found < 0) {
    std::ostringstream os;
    os << "state |" << ia << jb << "> not in the truncated basis";
    throw NumericalError(os.str());
  }
  return found;
}

std::array<int, 4> JointBasis::computational() const {
  return {index(0, 0), index(0, 1), index(1, 0), index(1, 1)};
}

MatrixXd JointBasis::embed_a(const MatrixXd& O_local, Eigen::Index n) const {
  const MatrixXd O = Ua_ * O_local * Ua_.transpose();
  const int na = device_.tunable.dim(), nb = device_.parked.dim();
  MatrixXd OP(P_.rows(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Map<const RowMat> psi(P_.col(c).data(), na, nb);
    RowMat r = O * psi;
    OP.col(c) = Eigen::Map<const VectorXd>(r.data(), r.size());
  }
  return P_.leftCols(n).transpose() * OP;
}

MatrixXd JointBasis::embed_b(const MatrixXd& O_local, Eigen::Index n) const {
  const MatrixXd O = Ub_ * O_local * Ub_.transpose();
  const int na = device_.tunable.dim(), nb = device_.parked.dim();
  MatrixXd OP(P_.rows(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Map<const RowMat> psi(P_.col(c).data(), na, nb);
    RowMat r = psi * O.transpose();
    OP.col(c) = Eigen::Map<const VectorXd>(r.data(), r.size());
  }
  return P_.leftCols(n).transpose() * OP;
}

ReducedModel reduce(const JointBasis& basis, const std::vector<double>& anchors, int per_anchor) {
  const auto& m = basis.model();
  const Eigen::Index n = m.dim(), k = std::min<Eigen::Index>(per_anchor, n);
  MatrixXd S(n, k * Eigen::Index(anchors.size()));
  for (size_t a = 0; a < anchors.size(); ++a) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.at(anchors[a]));
    S.middleCols(Eigen::Index(a) * k, k) = es.eigenvectors().leftCols(k);
  }
  // Modified Gram-Schmidt in order, dropping nearly dependent directions.
  MatrixXd Q(n, S.cols());
  Eigen::Index r = 0;
  for (Eigen::Index j = 0; j < S.cols(); ++j) {
    VectorXd v = S.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < r; ++i) v -= Q.col(i).dot(v) * Q.col(i);
    const double nv = v.norm();
    if (nv < 1e-6) continue;
    Q.col(r++) = v / nv;
  }
  Q.conservativeResize(n, r);
  for (Eigen::Index j = 0; j < r; ++j) {  // keep unit vectors exact
    Eigen::Index i;
    if (Q.col(j).cwiseAbs().maxCoeff(&i) > 1 - 1e-14) {
      const double s = Q(i, j) > 0 ? 1.0 : -1.0;
      Q.col(j).setZero();
      Q(i, j) = s;
    }
  }
  MatrixXd H0 = Q.transpose() * m.H0 * Q, V = Q.transpose() * m.V * Q;
  H0 = 0.5 * (H0 + H0.transpose()).eval();
  V = 0.5 * (V + V.transpose()).eval();
  return {AffineModel(H0, V, m.basis), Q};
}

namespace {

constexpr double sqrt3 = 1.7320508075688772;

// Complex columns are carried as [Re | Im] so the heavy products stay real.
MatrixXd split(const MatrixXcd& X) {
  MatrixXd Z(X.rows(), 2 * X.cols());
  Z.leftCols(X.cols()) = X.real();
  Z.rightCols(X.cols()) = X.imag();
  return Z;
}

MatrixXcd join(const MatrixXd& Z) {
  const Eigen::Index k = Z.cols() / 2;
  MatrixXcd X(Z.rows(), k);
  X.real() = Z.leftCols(k);
  X.imag() = Z.rightCols(k);
  return X;
}

// exp(-i (A + i b C)) Z for A real symmetric and C real antisymmetric, by a
// Taylor series on the spectrally centred generator.
void apply_exp(MatrixXd A, const MatrixXd& C, double b, MatrixXd& Z) {
  const Eigen::Index n = A.rows(), k = Z.cols() / 2;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = A.col(i).cwiseAbs().sum() - std::abs(A(i, i));
    lo = std::min(lo, A(i, i) - r);
    hi = std::max(hi, A(i, i) + r);
  }
  const double shift = 0.5 * (lo + hi);
  A.diagonal().array() -= shift;
  MatrixXd Y = Z, S = Z, P(n, 2 * k), Q(n, 2 * k);
  const double scale = std::max(1.0, Z.cwiseAbs().maxCoeff());
  for (int j = 1;; ++j) {
    // (A + i b C)(Yr + i Yi) = (A Yr - b C Yi) + i (A Yi + b C Yr), then times -i/j.
    P.noalias() = A * Y;
    if (b != 0.0) Q.noalias() = b * (C * Y);
    else Q.setZero();
    Y.leftCols(k) = (P.rightCols(k) + Q.leftCols(k)) / double(j);
    Y.rightCols(k) = -(P.leftCols(k) - Q.rightCols(k)) / double(j);
    S += Y;
    if (Y.cwiseAbs().maxCoeff() < 1e-17 * scale) break;
    if (j == 60) throw NumericalError("propagate: Taylor series did not converge");
  }
  const double c = std::cos(shift), s = std::sin(shift);
  // times e^{-i shift}
  Z.leftCols(k) = c * S.leftCols(k) + s * S.rightCols(k);
  Z.rightCols(k) = c * S.rightCols(k) - s * S.leftCols(k);
}

double spectral_radius_bound(const MatrixXd& A) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < A.cols(); ++i) {
    const double r = A.col(i).cwiseAbs().sum() - std::abs(A(i, i));
    lo = std::min(lo, A(i, i) - r);
    hi = std::max(hi, A(i, i) + r);
  }
  return 0.5 * (hi - lo);
}

}  // namespace

void detail::advance(const AffineModel& m, const Pulse& pulse, Eigen::Index k0, Eigen::Index k1,
                     MatrixXcd& X, const PropagationConfig& cfg) {
  const double dt = pulse.dt;
  const auto& e = pulse.E_J;
  MatrixXd Z = split(X);
  Eigen::Index k = k0;
  while (k < k1) {
    if (e(k + 1) == e(k)) {
      Eigen::Index run = k;
      while (run < k1 && e(run + 1) == e(k)) ++run;
      const Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.at(e(k)));
      const double t = dt * double(run - k);
      const VectorXcd ph = (es.eigenvalues() * -t).unaryExpr([](double a) { return std::polar(1.0, a); });
      const MatrixXcd Qv = es.eigenvectors().cast<cplx>();
      Z = split(Qv * (ph.asDiagonal() * (Qv.transpose() * join(Z))));
      k = run;
      continue;
    }
    const double radius = spectral_radius_bound(m.at(0.5 * (e(k) + e(k + 1)))) * dt;
    const int nsub = std::max<int>(int(std::ceil(dt / cfg.max_step - 1e-12)), int(std::ceil(radius)));
    const double h = dt / nsub;
    for (int s = 0; s < nsub; ++s) {
      const double ea = e(k) + (e(k + 1) - e(k)) * double(s) / nsub;
      const double eb = e(k) + (e(k + 1) - e(k)) * double(s + 1) / nsub;
      const double e1 = ea + (0.5 - sqrt3 / 6) * (eb - ea), e2 = ea + (0.5 + sqrt3 / 6) * (eb - ea);
      // M = (h/2)(H1 + H2) - i (sqrt3/12) h^2 (e1 - e2) [H0, V]
      apply_exp(h * m.H0 + (0.5 * h * (e1 + e2)) * m.V, m.C, -(sqrt3 / 12) * h * h * (e1 - e2), Z);
    }
    ++k;
  }
  X = join(Z);
}

MatrixXcd propagate(const AffineModel& model, const Pulse& pulse, const MatrixXcd& X0,
                    const PropagationConfig& cfg) {
  if (X0.rows() != model.dim()) throw std::invalid_argument("propagate: state dimension mismatch");
  MatrixXcd X = X0;
  if (pulse.size() > 1) detail::advance(model, pulse, 0, pulse.size() - 1, X, cfg);
  return X;
}

double unitarity_defect(const MatrixXcd& U) {
  return (U.adjoint() * U - MatrixXcd::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff();
}

namespace {

OperatorMatrix checked_unitary(MatrixXcd U, Basis b, const PropagationConfig& cfg) {
  const double defect = unitarity_defect(U);
  if (defect > 10 * cfg.rel_tol) {
    std::ostringstream os;
    os << "propagate_unitary: unitarity breach " << defect;
    throw NumericalError(os.str());
  }
  return {std::move(U), b};
}

}  // namespace

OperatorMatrix propagate_unitary(const JointBasis& basis, const Pulse& pulse, const PropagationConfig& cfg) {
  const auto& m = basis.model();
  return checked_unitary(propagate(m, pulse, MatrixXcd::Identity(m.dim(), m.dim()), cfg),
                         Basis::joint_eigen, cfg);
}

OperatorMatrix propagate_unitary(const TransmonSpec& spec, const Pulse& pulse, const PropagationConfig& cfg) {
  const auto m = transmon_model(spec, pulse.E_J(0), cfg.transmon_levels);
  return checked_unitary(propagate(m, pulse, MatrixXcd::Identity(m.dim(), m.dim()), cfg),
                         Basis::local, cfg);
}

BlockProjection project_computational(const MatrixXcd& U, const std::array<int, 4>& comp) {
  BlockProjection p;
  p.block.resize(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) p.block(i, j) = U(comp[size_t(i)], comp[size_t(j)]);
  for (int j = 0; j < 4; ++j) p.leaked[size_t(j)] = 1.0 - p.block.col(j).squaredNorm();
  return p;
}

BlockProjection project_computational(const OperatorMatrix& U, const JointBasis& basis) {
  if (U.basis() != Basis::joint_eigen) throw std::invalid_argument("project_computational: need joint eigenbasis");
  return project_computational(U.matrix(), basis.computational());
}

}  // namespace tcz
