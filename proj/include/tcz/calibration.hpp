#pragma once

#include "tcz/metrics.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tcz {

// Device-level pieces shared by every gate built on one device: the joint
// basis, the |11>/|20> resonance and a FAQUAD profile that covers all
// destinations within the detuning window.
struct GateSetup {
  DeviceSpec device;
  PropagationConfig cfg;
  JointBasis basis;
  Resonance resonance;
  double omega_park;  // w01 of the loaded tunable transmon at its sweet spot
  Pseudospin pseudospin;
  AdiabaticityProfile faquad;
  double window;      // destination detuning bound, rad/ns

  explicit GateSetup(const DeviceSpec& device, const PropagationConfig& cfg = {},
                     double window = mhz(15.0));
  double destination(double detuning) const { return resonance.omega_a_star + detuning; }
};

struct GateControl {
  Family family = Family::invariant;
  double T = 2.0;
  int samples = 2048;
  InvariantParams invariant;               // invariant and variational
  std::vector<double> slepian_free{0.0};   // lambda_2 .. lambda_N
};

// Down ramp from the parking point to w* + detuning.
Pulse design_down_ramp(const GateSetup& setup, const GateControl& control, double detuning);

// Down-ramp propagator restricted to what the mirrored gate needs. With
// U_up = U_down^T the gate block for any wait is B^T exp(-i Lambda t) B,
// B = (destination eigenvectors)^T U_down on the six lowest states.
class RampPropagation {
 public:
  RampPropagation(const GateSetup& setup, Pulse down);

  const Pulse& down() const { return down_; }
  // 6x6 gate propagator over |00>,|01>,|10>,|02>,|11>,|20> (t = 0 states).
  MatrixXcd gate6(double t_wait) const;
  MatrixXcd block(double t_wait) const;  // computational 4x4
  GateReport report(double t_wait) const;
  double quantized_wait(double t_wait) const;  // what assemble_gate_pulse realizes
  const RampBlock& analysis() const { return analysis_; }

 private:
  Pulse down_;
  VectorXd lambda_;  // destination energies
  MatrixXcd B_;      // destination frame x six t = 0 states
  std::array<int, 4> comp_;
  RampBlock analysis_;
};

// Average error of the down ramp on the isolated tunable transmon, d = 2,
// against the best phase gate in the instantaneous eigenframes.
double single_transmon_ramp_error(Family family, double T, const GateSetup& setup, int samples = 2048);

struct OptimizeOptions {
  double t_wait_max = 80.0;
  int max_evals = 400;
  double tol_wait = 0.01;      // ns, simplex diameter
  double tol_detuning = khz(10.0);
  bool optimize_slepian = false;
  std::optional<LindbladSpec> lindblad;  // switches to the channel objective
  int lossy_evals = 15;
};

struct CalibrationResult {
  Family family;
  double T = 0;
  double t_wait = 0;   // realized (sample-quantized) wait
  double detuning = 0;
  double omega_dest = 0;
  double T_gate = 0;
  GateReport report;
  bool converged = true;
  int evaluations = 0;            // simplex evaluations, grid excluded
  double coarse_best_error = 0;  // best grid point, for the monotonicity check
  std::vector<double> slepian_free;
};

CalibrationResult optimize_gate(const GateSetup& setup, const GateControl& control,
                                const OptimizeOptions& opt = {});

// Channel-objective simplex seeded from a lossless optimum of the same
// family and T; budget opt.lossy_evals.
CalibrationResult refine_lossy(const GateSetup& setup, const GateControl& control, const CalibrationResult& seed,
                               const LindbladSpec& spec, const OptimizeOptions& opt = {});

// Lossless optimum over (T, detuning) at a fixed total duration
// 2T + t_wait = T_gate; control.T is ignored.
CalibrationResult optimize_fixed_duration(const GateSetup& setup, const GateControl& control, double T_gate,
                                          const OptimizeOptions& opt = {});

// Channel fidelity of a given gate pulse.
GateReport lossy_report(const GateSetup& setup, const Pulse& gate, const LindbladSpec& spec);

struct SweepCurve {
  std::string abscissa;
  std::vector<double> x;
  std::vector<std::string> names;
  std::vector<std::vector<double>> series;  // one per name, same length as x

  void validate() const;
  std::string csv(const std::string& header_comment = "") const;
};

// Optimal error (1 - F_avg vs CZ) against T, one optimization per T and
// family; per-point results are returned for manifests. With opt.lindblad
// set, points present in `lossless` are refined from there instead of
// re-running the lossless search.
struct GateTimeSweep {
  SweepCurve curve;          // x = T, series: error per family
  std::vector<std::vector<CalibrationResult>> results;  // [family][T]
  std::vector<std::string> failures;
};
GateTimeSweep sweep_gate_time(const GateSetup& setup, const std::vector<Family>& families,
                              const std::vector<double>& T_list, const OptimizeOptions& opt = {},
                              int jobs = 1, const GateTimeSweep* lossless = nullptr);

// |11> return, |11> -> |20> transfer and phi12 against the wait.
SweepCurve sweep_wait_time(const GateSetup& setup, const GateControl& control, const std::vector<double>& t_wait,
                           double detuning = 0.0);
// phi12 and F_avg against the destination detuning at a fixed wait.
SweepCurve sweep_destination(const GateSetup& setup, const GateControl& control,
                             const std::vector<double>& detuning, double t_wait);

// Runs f(i) for i in [0, n) on up to `jobs` threads; exceptions are rethrown
// in index order after all jobs finish.
void parallel_for(int n, int jobs, const std::function<void(int)>& f);

}  // namespace tcz
