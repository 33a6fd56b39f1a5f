#pragma once

#include "tcz/propagation.hpp"

#include <array>
#include <string>

namespace tcz {

// exp(i(phi0 + phi1 Za + phi2 Zb + phi12 Za Zb)) with Z|0> = +|0>, states
// ordered |00>,|01>,|10>,|11> (qubit a first). CZ corresponds to
// phi12 = +pi/4; with the arg branch used in extract_phases, phi12 lies in
// (-pi/4, pi/4], so -pi/4 is the same gate up to local Z.
struct PhaseGate {
  double phi0 = 0, phi1 = 0, phi2 = 0, phi12 = 0;

  std::array<double, 4> diagonal_phases() const;
  MatrixXcd matrix() const;
  static PhaseGate cz() { return {0, 0, 0, std::numbers::pi / 4}; }
};

// |1 - (1/d) sum |<s|U|s'>|^2|, d = 4.
double leakage(const MatrixXcd& block);

// Throws NumericalError when the block carries more than 0.1 off-diagonal
// weight per column on average.
PhaseGate extract_phases(const MatrixXcd& block);

// Diagonal unitary made of the three locally correctable phases of the
// block's diagonal: U_loc^dagger block has theta00 = theta01 = theta10 = 0 and
// keeps theta11 - theta01 - theta10 + theta00 = 4 phi12.
MatrixXcd local_correction(const MatrixXcd& block);

// |(1/d) tr(U_id^dagger U_loc^dagger U)|^2 with U_loc taken from
// U_id^dagger U; `correct` = false skips the local correction.
double entanglement_fidelity_unitary(const MatrixXcd& block, const MatrixXcd& U_id, bool correct = true);

double average_fidelity(double F_e, int d = 4);

// Channel entanglement fidelity; U_loc from the phases of the coherences
// <s|E(|s><00|)|00>. Throws if the sum keeps an imaginary part above 1e-8.
double entanglement_fidelity_channel(const ChannelImage& ch, const MatrixXcd& U_id, bool correct = true);

// Computational block of a channel, <s|E(|s><s'|)|s'>, used for phases.
MatrixXcd channel_coherences(const ChannelImage& ch);

struct GateReport {
  double leakage = 0;
  PhaseGate phases;
  double F_avg_best_phase_gate = 0;
  double F_avg_cz = 0;
  double T_gate = 0;

  std::string summary() const;
  static std::string csv_header();
  std::string csv_row() const;
};

GateReport gate_report(const MatrixXcd& block, double T_gate);
GateReport gate_report(const ChannelImage& ch, double T_gate);

// Down-ramp propagator written between the t = 0 eigenbasis and the
// eigenbasis at the ramp's final E_J (energy ordered; the |11>/|20> pair sits
// at indices 4, 5).
struct RampBlock {
  std::array<double, 3> xi{};  // phases on |01>,|10>,|02>: U = exp(-i xi T)
  cplx alpha, beta, gamma, delta;
  double gap = 0;               // E_+ - E_- at the destination
  double block_defect = 0;      // |1 - |alpha|^2 - |beta|^2|
  bool leaky = false;           // block_defect > 1e-3
  double t_wait_pred = 0;       // first t >= t_min with e^{i gap t/2} aligned to beta/alpha
  MatrixXcd final_frame;        // rows 0..5 of the down propagator in the destination eigenbasis
};

RampBlock analyze_ramp_block(const MatrixXcd& U_down, const JointBasis& basis, double E_J_final,
                             double T, double t_min = 0.0);

}  // namespace tcz
