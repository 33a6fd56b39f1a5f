#include "tcz/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iomanip>
#include <sstream>

namespace tcz {

namespace {

constexpr int za[4] = {1, 1, -1, -1};
constexpr int zb[4] = {1, -1, 1, -1};

void require_block(const MatrixXcd& b, const char* who) {
  if (b.rows() != 4 || b.cols() != 4) throw std::invalid_argument(std::string(who) + ": need a 4x4 block");
}

}  // namespace

std::array<double, 4> PhaseGate::diagonal_phases() const {
  std::array<double, 4> th{};
  for (int s = 0; s < 4; ++s) th[size_t(s)] = phi0 + phi1 * za[s] + phi2 * zb[s] + phi12 * za[s] * zb[s];
  return th;
}

MatrixXcd PhaseGate::matrix() const {
  const auto th = diagonal_phases();
  MatrixXcd U = MatrixXcd::Zero(4, 4);
  for (int s = 0; s < 4; ++s) U(s, s) = std::polar(1.0, th[size_t(s)]);
  return U;
}

double leakage(const MatrixXcd& block) {
  require_block(block, "leakage");
  return std::abs(1.0 - block.squaredNorm() / 4.0);
}

PhaseGate extract_phases(const MatrixXcd& block) {
  require_block(block, "extract_phases");
  const double off = (block.squaredNorm() - block.diagonal().squaredNorm()) / 4.0;
  if (off > 0.1) {
    std::ostringstream os;
    os << "extract_phases: block is not diagonal (off-diagonal weight " << off << ")";
    throw NumericalError(os.str());
  }
  const auto& u = block.diagonal();
  std::array<double, 4> th{};
  for (int s = 0; s < 4; ++s) th[size_t(s)] = std::arg(u(s));
  PhaseGate p;
  // phi12 from the gauge-invariant product, so no 2 pi ambiguity leaks in.
  p.phi12 = std::arg(u(0) * std::conj(u(1)) * std::conj(u(2)) * u(3)) / 4.0;
  // The remaining phases reproduce theta00, theta01, theta10 exactly.
  const double a = 0.5 * (th[1] + th[2]), b = 0.5 * (th[0] - th[2]), c = 0.5 * (th[0] - th[1]);
  p.phi0 = a + p.phi12;
  p.phi1 = b - p.phi12;
  p.phi2 = c - p.phi12;
  return p;
}

MatrixXcd local_correction(const MatrixXcd& block) {
  require_block(block, "local_correction");
  const auto& u = block.diagonal();
  const double th00 = std::arg(u(0)), th01 = std::arg(u(1)), th10 = std::arg(u(2));
  // a + b Za + c Zb matching theta00, theta01, theta10.
  const double a = 0.5 * (th01 + th10), b = 0.5 * (th00 - th10), c = 0.5 * (th00 - th01);
  MatrixXcd L = MatrixXcd::Zero(4, 4);
  for (int s = 0; s < 4; ++s) L(s, s) = std::polar(1.0, a + b * za[s] + c * zb[s]);
  return L;
}

double entanglement_fidelity_unitary(const MatrixXcd& block, const MatrixXcd& U_id, bool correct) {
  require_block(block, "entanglement_fidelity_unitary");
  require_block(U_id, "entanglement_fidelity_unitary");
  const MatrixXcd W = U_id.adjoint() * block;
  const double bound = 1.0 + 1e-12;
  if (!correct) return std::min(std::norm(W.trace() / 4.0), bound);
  const MatrixXcd L = local_correction(W);
  return std::min(std::norm((L.adjoint() * W).trace() / 4.0), bound);
}

double average_fidelity(double F_e, int d) {
  if (!(F_e >= 0 && F_e <= 1 + 1e-12)) throw std::invalid_argument("average_fidelity: F_e outside [0, 1]");
  return (d * F_e + 1.0) / (d + 1.0);
}

MatrixXcd channel_coherences(const ChannelImage& ch) {
  MatrixXcd C(4, 4);
  for (int s = 0; s < 4; ++s)
    for (int sp = 0; sp < 4; ++sp) C(s, sp) = ch(s, sp)(ch.comp[size_t(s)], ch.comp[size_t(sp)]);
  return C;
}

double entanglement_fidelity_channel(const ChannelImage& ch, const MatrixXcd& U_id, bool correct) {
  require_block(U_id, "entanglement_fidelity_channel");
  const MatrixXcd C = channel_coherences(ch);
  // V plays the role of U_loc U_id; the local correction is taken from the
  // channel's unitary part relative to the target, theta_s = arg C(s, 00).
  MatrixXcd V = U_id;
  if (correct) {
    VectorXcd u(4);
    for (int s = 0; s < 4; ++s) u(s) = std::polar(1.0, std::arg(C(s, 0)));
    V = U_id * local_correction(U_id.adjoint() * u.asDiagonal());
  }
  cplx sum = 0.0;
  for (int s = 0; s < 4; ++s)
    for (int sp = 0; sp < 4; ++sp) {
      const MatrixXcd& E = ch(s, sp);
      // <s|V^dagger E V|s'> over the computational rows/cols only.
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          const cplx vi = V(i, s), vj = V(j, sp);
          if (vi == 0.0 || vj == 0.0) continue;
          sum += std::conj(vi) * E(ch.comp[size_t(i)], ch.comp[size_t(j)]) * vj;
        }
    }
  sum /= 16.0;
  if (std::abs(sum.imag()) > 1e-8) {
    std::ostringstream os;
    os << "entanglement_fidelity_channel: imaginary residue " << sum.imag();
    throw NumericalError(os.str());
  }
  return sum.real();
}

namespace {

GateReport finish(double leak, const PhaseGate& ph, double Fe_best, double Fe_cz, double T_gate) {
  GateReport r;
  r.leakage = leak;
  r.phases = ph;
  r.F_avg_best_phase_gate = average_fidelity(std::clamp(Fe_best, 0.0, 1.0));
  r.F_avg_cz = average_fidelity(std::clamp(Fe_cz, 0.0, 1.0));
  r.T_gate = T_gate;
  return r;
}

}  // namespace

GateReport gate_report(const MatrixXcd& block, double T_gate) {
  const PhaseGate ph = extract_phases(block);
  const double best = entanglement_fidelity_unitary(block, ph.matrix(), false);
  const double cz = entanglement_fidelity_unitary(block, PhaseGate::cz().matrix(), true);
  return finish(leakage(block), ph, best, cz, T_gate);
}

GateReport gate_report(const ChannelImage& ch, double T_gate) {
  const MatrixXcd C = channel_coherences(ch);
  // Leakage from the diagonal dyads' computational populations.
  double kept = 0.0;
  for (int s = 0; s < 4; ++s)
    for (int i = 0; i < 4; ++i) kept += ch(s, s)(ch.comp[size_t(i)], ch.comp[size_t(i)]).real();
  VectorXcd u(4);
  for (int s = 0; s < 4; ++s) u(s) = std::polar(std::sqrt(std::max(0.0, C(s, s).real())), std::arg(C(s, 0)));
  const MatrixXcd diag = u.asDiagonal();
  const PhaseGate ph = extract_phases(diag);
  const double best = entanglement_fidelity_channel(ch, ph.matrix(), true);
  const double cz = entanglement_fidelity_channel(ch, PhaseGate::cz().matrix(), true);
  return finish(std::abs(1.0 - kept / 4.0), ph, best, cz, T_gate);
}

std::string GateReport::summary() const {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "T_gate      " << T_gate << " ns\n"
     << "leakage     " << leakage << "\n"
     << "phi0        " << phases.phi0 << "\n"
     << "phi1        " << phases.phi1 << "\n"
     << "phi2        " << phases.phi2 << "\n"
     << "phi12       " << phases.phi12 << "  (CZ: pi/4 = 0.785398)\n"
     << "1-F (phase) " << 1.0 - F_avg_best_phase_gate << "\n"
     << "1-F (CZ)    " << 1.0 - F_avg_cz << "\n";
  return os.str();
}

std::string GateReport::csv_header() {
  return "T_gate_ns,leakage,phi0,phi1,phi2,phi12,F_avg_phase_gate,F_avg_cz";
}

std::string GateReport::csv_row() const {
  std::ostringstream os;
  os << std::setprecision(12) << T_gate << ',' << leakage << ',' << phases.phi0 << ',' << phases.phi1 << ','
     << phases.phi2 << ',' << phases.phi12 << ',' << F_avg_best_phase_gate << ',' << F_avg_cz;
  return os.str();
}

RampBlock analyze_ramp_block(const MatrixXcd& U_down, const JointBasis& basis, double E_J_final, double T,
                             double t_min) {
  if (U_down.rows() != basis.dim()) throw std::invalid_argument("analyze_ramp_block: propagator dimension");
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(basis.model().at(E_J_final));
  MatrixXd F = es.eigenvectors().leftCols(6);
  const int i11 = basis.index(1, 1);
  for (int k = 0; k < 6; ++k) {
    Eigen::Index imax;
    F.col(k).cwiseAbs().maxCoeff(&imax);
    // The pseudospin pair is gauged on its |11> component, the rest on the largest one.
    const double ref = k >= 4 ? F(i11, k) : F(imax, k);
    if (ref < 0) F.col(k) = -F.col(k);
  }
  RampBlock rb;
  rb.final_frame = F.transpose().cast<cplx>() * U_down;
  const MatrixXcd& B = rb.final_frame;
  const int cols[3] = {basis.index(0, 1), basis.index(1, 0), basis.index(0, 2)};
  for (int k = 0; k < 3; ++k) rb.xi[size_t(k)] = -std::arg(B(k + 1, cols[k])) / T;
  const int i20 = basis.index(2, 0);
  rb.alpha = B(4, i11);
  rb.beta = B(5, i11);
  rb.gamma = B(4, i20);
  rb.delta = B(5, i20);
  rb.gap = es.eigenvalues()(5) - es.eigenvalues()(4);
  rb.block_defect = std::abs(1.0 - std::norm(rb.alpha) - std::norm(rb.beta));
  rb.leaky = rb.block_defect > 1e-3;
  // e^{i J2 t} = beta/alpha fixes the population return up to a half-period
  // branch, J2 = gap/2. Of the two, keep the one whose two-level estimate of
  // the conditional phase is closer to pi (the pseudospin pi rotation).
  const double J2 = 0.5 * rb.gap;
  const double half = std::numbers::pi / J2;
  const int c00 = basis.index(0, 0);
  auto cond_phase = [&](double tw) {
    auto amp = [&](int col) {
      cplx a = 0.0;
      for (int k = 0; k < 6; ++k) a += B(k, col) * B(k, col) * std::polar(1.0, -es.eigenvalues()(k) * tw);
      return a;
    };
    return std::arg(amp(c00) * std::conj(amp(cols[0])) * std::conj(amp(cols[1])) * amp(i11));
  };
  double t = std::fmod(std::arg(rb.beta / rb.alpha) / J2 - t_min, half);
  if (t < 0) t += half;
  const double t2 = t + half < 2 * half ? t + half : t - half;
  if (std::abs(std::abs(cond_phase(t_min + t2)) - std::numbers::pi) <
      std::abs(std::abs(cond_phase(t_min + t)) - std::numbers::pi))
    t = t2;
  rb.t_wait_pred = t_min + t;
  return rb;
}

}  // namespace tcz
