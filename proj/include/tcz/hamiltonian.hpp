#pragma once

#include "tcz/core.hpp"

#include <array>
#include <string>
#include <vector>

namespace tcz {

struct TransmonSpec {
  double E_C = 0.0;      // rad/ns
  double E_J_max = 0.0;  // rad/ns, sweet-spot value
  int charge_cutoff = 12;

  int dim() const { return 2 * charge_cutoff + 1; }
  void validate() const;
  // E_J/E_C >= 50. Outside it callers get a warning status, not an error.
  bool transmon_regime(double E_J) const { return E_J / E_C >= 50.0; }
};

struct SpectralTargets {
  double omega_a = 0.0, omega_b = 0.0;
  double alpha_a = 0.0, alpha_b = 0.0;
  double J1 = 0.0, J2 = 0.0;

  // Device of the reference experiment: 6.91/5.69 GHz qubits.
  static SpectralTargets reference();
  void validate() const;
};

// tunable.E_C / parked.E_C are loaded charging energies, i.e. what the isolated
// transmon sees once the coupling capacitance is included. With circuit values
// E_C - g/8 the coupling term (g/2)(n_a - n_b)^2 reduces to -g n_a n_b on top
// of the loaded single-transmon Hamiltonians.
struct DeviceSpec {
  TransmonSpec tunable;  // qubit a
  TransmonSpec parked;   // qubit b, fixed at its sweet spot
  double g_C = 0.0;
  SpectralTargets targets;

  double park_EJ() const { return tunable.E_J_max; }
  double parked_EJ() const { return parked.E_J_max; }
};

// Charge-basis building blocks, m in [-m_max, m_max].
MatrixXd charge_operator(int m_max);
MatrixXd cos_phi_operator(int m_max);

OperatorMatrix build_transmon_hamiltonian(const TransmonSpec& spec, double E_J,
                                          Basis basis = Basis::charge_a);

// Lowest `count` levels from the tridiagonal charge-basis problem; vectors are
// real, columns in the charge basis.
struct TransmonLevels {
  VectorXd energies;
  MatrixXd vectors;
};
TransmonLevels transmon_levels(const TransmonSpec& spec, double E_J, int count,
                               bool vectors = true);

struct TransmonFrequencies {
  double omega01;
  double alpha;
};
TransmonFrequencies transmon_frequencies(const TransmonSpec& spec, double E_J);

// Hellmann-Feynman derivative of omega01 with respect to E_J.
double domega01_dEJ(const TransmonSpec& spec, double E_J);

// Inverts E_J -> omega01 on (0, E_J_max]. Throws OutOfRangeError if the
// target is not attainable.
double calibrate_EJ(const TransmonSpec& spec, double target_omega01);
// Same, with a Newton starting point (e.g. the neighbouring sample).
double calibrate_EJ(const TransmonSpec& spec, double target_omega01, double guess);

double flux_to_EJ(const TransmonSpec& spec, double flux);
double EJ_to_flux(const TransmonSpec& spec, double E_J);

struct CalibrationOptions {
  int charge_cutoff = 12;
  int local_levels = 10;
};

DeviceSpec calibrate_device(const SpectralTargets& targets, const CalibrationOptions& opt = {});

// Full product-charge Hamiltonian (dense copy, for tests and small cutoffs).
OperatorMatrix build_coupled_hamiltonian(const DeviceSpec& device, double E_J_a);

// Lowest `count` eigenpairs of the product-charge Hamiltonian through a banded
// solver. Index convention: i_a * dim_b + i_b.
RealSpectrum coupled_lowest(const DeviceSpec& device, double E_J_a, int count,
                            bool vectors = true);

// Effective 6x6 model in the order |00>,|01>,|10>,|02>,|11>,|20>. Two-photon
// entries use 2w - |alpha| so the crossing sits where the full model puts it.
OperatorMatrix effective_six_level(const DeviceSpec& device, double omega_a);

// Two-transmon Hamiltonian in the product basis of the K lowest eigenstates of
// each loaded transmon. Qubit b's states are fixed; qubit a is re-diagonalized
// at each E_J_a. Agrees with the product-charge model to well below a kHz for
// the low-lying levels.
class CoupledModel {
 public:
  explicit CoupledModel(DeviceSpec device, int levels = 10);

  const DeviceSpec& device() const { return device_; }
  int levels() const { return K_; }
  int dim() const { return K_ * K_; }

  struct Eval {
    RealSpectrum spec;  // in the local product basis |i_a> x |j_b>, index i*K + j
    MatrixXd dH_dEJ;    // -cos(phi_a) x 1 in the same basis
  };

  MatrixXd hamiltonian(double E_J_a) const;
  RealSpectrum spectrum(double E_J_a, bool vectors = false) const;
  Eval evaluate(double E_J_a) const;

  // Product label (i_a, j_b) of each eigenvector by maximal overlap.
  std::vector<std::array<int, 2>> labels(const MatrixXd& vectors) const;
  int index_of(int ia, int jb) const { return ia * K_ + jb; }

 private:
  struct LocalA {
    VectorXd E;
    MatrixXd N, C;
  };
  LocalA local_a(double E_J_a) const;

  DeviceSpec device_;
  int K_;
  VectorXd E_b_;
  MatrixXd N_b_;
};

// Realized spectral parameters of a device, measured on the coupled model.
SpectralTargets measure_device(const DeviceSpec& device, int levels = 10);

// Minimum |01>/|10> splitting and where it occurs (omega of the loaded tunable
// transmon).
struct Crossing {
  double omega_a;
  double gap;
};
Crossing min_splitting_01_10(const CoupledModel& model);

struct ResonanceOptions {
  double half_window = ghz(0.2);  // around w_b + |alpha_a|
  int levels = 10;
};
struct Resonance {
  double omega_a_star;  // bare frequency of the loaded tunable transmon
  double gap;           // minimum |11>/|20> splitting, about 2 J2
  double EJ_star;
};
Resonance find_resonance(const DeviceSpec& device, const ResonanceOptions& opt = {});

std::string describe(const DeviceSpec& device);

}  // namespace tcz
