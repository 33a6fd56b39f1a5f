#pragma once

#include "tcz/hamiltonian.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace tcz {

enum class Family { linear, faquad, slepian, invariant, variational };

inline constexpr Family all_families[] = {Family::linear, Family::faquad, Family::slepian,
                                          Family::invariant, Family::variational};
std::string to_string(Family f);
Family family_from_string(const std::string& s);

struct RampSpec {
  double omega_start = 0.0;   // rad/ns
  double omega_target = 0.0;  // rad/ns
  double T = 0.0;             // ns
  int samples = 2048;

  void validate() const;
  double dt() const { return T / (samples - 1); }
};

// Uniformly sampled control carrying three equivalent views of the trajectory.
struct Pulse {
  double dt = 0.0;
  VectorXd omega01, E_J, flux;
  std::string family;
  std::vector<std::pair<std::string, double>> params;

  Eigen::Index size() const { return E_J.size(); }
  double duration() const { return size() > 1 ? dt * double(size() - 1) : 0.0; }
  double t(Eigen::Index k) const { return dt * double(k); }
  double param(const std::string& key) const;

  // Max relative mismatch between the three views at any sample.
  double consistency_residual(const TransmonSpec& spec) const;
};

// Builders from one primary view; the other two follow from the exact maps.
Pulse pulse_from_EJ(const TransmonSpec& spec, double dt, VectorXd E_J);
Pulse pulse_from_omega(const TransmonSpec& spec, double dt, const VectorXd& omega01);
Pulse pulse_from_flux(const TransmonSpec& spec, double dt, const VectorXd& flux);

Pulse linear_ramp(const RampSpec& spec, const TransmonSpec& transmon);

// ---- FAQUAD ----

// Adiabaticity rate mu(eps) = max |<n|dH/deps|r>| / (E_r - E_n)^2 on an
// ascending grid of the control eps.
struct AdiabaticityProfile {
  VectorXd eps;
  VectorXd mu;
};

// Generic: `eval(eps)` returns (energies, vectors, dH/deps) of the tracked set.
using TrackedEval = std::function<void(double eps, VectorXd& E, MatrixXd& vecs, MatrixXd& dH)>;
AdiabaticityProfile adiabaticity_profile(const TrackedEval& eval, double eps_lo, double eps_hi,
                                         int points);

// Coupled device, control eps = omega of the loaded tunable transmon, six
// lowest joint levels tracked.
AdiabaticityProfile faquad_profile(const DeviceSpec& device, double eps_lo, double eps_hi,
                                   int points = 2001, int tracked = 6, int local_levels = 8);

// Control values at `samples` uniform times such that d eps/dt = c / mu.
// Returns the schedule and the constant c (for unit total time).
struct FaquadSchedule {
  VectorXd eps;
  double c;
};
FaquadSchedule faquad_schedule(const AdiabaticityProfile& profile, double eps_start,
                               double eps_target, int samples);

// Builds its own 2001-point profile over [target, start].
Pulse faquad_ramp(const RampSpec& spec, const DeviceSpec& device);
Pulse faquad_ramp(const RampSpec& spec, const DeviceSpec& device, const AdiabaticityProfile& profile);

// ---- Slepian ----

struct SlepianParams {
  std::vector<double> lambda;  // lambda_1 .. lambda_N
  double theta_i = 0.0, theta_f = 0.0;

  // lambda_1 is fixed by theta_f; `free` holds lambda_2 .. lambda_N.
  static SlepianParams make(double theta_i, double theta_f, std::vector<double> free = {0.0});
  double theta(double u) const;  // u = s/T; u in [0, 2] covers down and up
  double dtheta(double u) const;
};

// Pseudospin angle seen by the |11>/|20> pair: theta = atan2(2 J2, w - w*).
struct Pseudospin {
  double omega_star;
  double J2;
  double theta(double omega) const { return std::atan2(2.0 * J2, omega - omega_star); }
  double omega(double theta) const { return omega_star + 2.0 * J2 / std::tan(theta); }
};

SlepianParams slepian_params(const Pseudospin& ps, const RampSpec& spec,
                             std::vector<double> free = {0.0});
Pulse slepian_ramp(const RampSpec& spec, const DeviceSpec& device, const Pseudospin& ps,
                   const SlepianParams& params);
// Detuning delta(t) over the whole period [0, 2T] straight from the series.
VectorXd slepian_full_period_detuning(const SlepianParams& params, const Pseudospin& ps, double T,
                                      int samples);

// ---- Invariant / variational ----

// rho(tau) = gamma + (1 - gamma) (1 - tau) sum_n c_n tau^n with the first
// `order` derivatives vanishing at both ends.
struct InvariantParams {
  int n_max = 10;
  int order = 5;
  std::vector<double> free;  // c_{2 order + 1} .. c_{n_max}, default zeros
  void validate() const;
};

VectorXd solve_invariant_coefficients(const InvariantParams& p);

class RampPolynomial {
 public:
  RampPolynomial(const InvariantParams& p, double gamma, double T);
  double gamma() const { return gamma_; }
  const VectorXd& c() const { return c_; }
  double rho(double t) const;
  double rho_dot(double t) const;
  double rho_ddot(double t) const;
  double derivative(int order, double t) const;

 private:
  VectorXd c_, p_;  // p_: monomial coefficients of (1 - tau) sum c_n tau^n
  double gamma_, T_;
};

// Ermakov design for the harmonic part of the transmon: w_HO = sqrt(8 E_C E_J).
struct InvariantDesign {
  RampPolynomial rho;
  double omega0;
  double omega_sq(double t) const {
    const double r = rho.rho(t);
    return omega0 * omega0 / (r * r * r * r) - rho.rho_ddot(t) / r;
  }
};
InvariantDesign invariant_design(const RampSpec& spec, const TransmonSpec& transmon,
                                 const InvariantParams& params = {});
Pulse invariant_ramp(const RampSpec& spec, const TransmonSpec& transmon,
                     const InvariantParams& params = {});

// Width of the stationary Gaussian: E_J = exp(s^2/4) 8 E_C / s^4.
double variational_width(double E_C, double E_J);
Pulse variational_ramp(const RampSpec& spec, const TransmonSpec& transmon,
                       const InvariantParams& params = {});

// Down ramp, hold at the destination for t_wait, then the time-reversed down
// ramp when up_mirror is set. The hold is quantized to whole samples.
Pulse assemble_gate_pulse(const Pulse& down, double t_wait, bool up_mirror = true);

}  // namespace tcz
