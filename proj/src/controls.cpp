#include "tcz/controls.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tcz {

std::string to_string(Family f) {
  switch (f) {
    case Family::linear: return "linear";
    case Family::faquad: return "faquad";
    case Family::slepian: return "slepian";
    case Family::invariant: return "invariant";
    case Family::variational: return "variational";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  for (Family f : all_families)
    if (to_string(f) == s) return f;
  throw ConfigError("unknown control family '" + s + "'");
}

void RampSpec::validate() const {
  if (!(T > 0)) throw ConfigError("ramp: T must be positive");
  if (samples < 64) throw ConfigError("ramp: need at least 64 samples");
  if (!(omega_start > 0 && omega_target > 0)) throw ConfigError("ramp: frequencies must be positive");
}

double Pulse::param(const std::string& key) const {
  for (const auto& [k, v] : params)
    if (k == key) return v;
  throw std::out_of_range("pulse has no parameter '" + key + "'");
}

double Pulse::consistency_residual(const TransmonSpec& spec) const {
  double r = 0.0;
  for (Eigen::Index k = 0; k < size(); ++k) {
    const double w = transmon_frequencies(spec, E_J(k)).omega01;
    r = std::max(r, std::abs(w - omega01(k)) / omega01(k));
    r = std::max(r, std::abs(flux_to_EJ(spec, flux(k)) - E_J(k)) / E_J(k));
  }
  return r;
}

Pulse pulse_from_EJ(const TransmonSpec& spec, double dt, VectorXd E_J) {
  Pulse p;
  p.dt = dt;
  p.omega01.resize(E_J.size());
  p.flux.resize(E_J.size());
  for (Eigen::Index k = 0; k < E_J.size(); ++k) {
    p.omega01(k) = transmon_frequencies(spec, E_J(k)).omega01;
    p.flux(k) = EJ_to_flux(spec, E_J(k));
  }
  p.E_J = std::move(E_J);
  return p;
}

Pulse pulse_from_omega(const TransmonSpec& spec, double dt, const VectorXd& omega01) {
  VectorXd E_J(omega01.size());
  double guess = spec.E_J_max;
  for (Eigen::Index k = 0; k < omega01.size(); ++k) guess = E_J(k) = calibrate_EJ(spec, omega01(k), guess);
  Pulse p = pulse_from_EJ(spec, dt, std::move(E_J));
  p.omega01 = omega01;
  return p;
}

Pulse pulse_from_flux(const TransmonSpec& spec, double dt, const VectorXd& flux) {
  VectorXd E_J(flux.size());
  for (Eigen::Index k = 0; k < flux.size(); ++k) E_J(k) = flux_to_EJ(spec, flux(k));
  Pulse p = pulse_from_EJ(spec, dt, std::move(E_J));
  p.flux = flux;
  return p;
}

namespace {

void pin_endpoints(Pulse& p, const RampSpec& spec) {
  p.omega01(0) = spec.omega_start;
  p.omega01(p.size() - 1) = spec.omega_target;
}

double tau_at(const RampSpec& spec, Eigen::Index k) { return double(k) / (spec.samples - 1); }

}  // namespace

Pulse linear_ramp(const RampSpec& spec, const TransmonSpec& transmon) {
  spec.validate();
  const double f0 = EJ_to_flux(transmon, calibrate_EJ(transmon, spec.omega_start));
  const double f1 = EJ_to_flux(transmon, calibrate_EJ(transmon, spec.omega_target));
  VectorXd flux(spec.samples);
  for (int k = 0; k < spec.samples; ++k) flux(k) = f0 + (f1 - f0) * tau_at(spec, k);
  Pulse p = pulse_from_flux(transmon, spec.dt(), flux);
  pin_endpoints(p, spec);
  p.family = "linear";
  p.params = {{"T", spec.T}};
  return p;
}

// ---- FAQUAD ----

AdiabaticityProfile adiabaticity_profile(const TrackedEval& eval, double eps_lo, double eps_hi,
                                         int points) {
  if (points < 3 || !(eps_hi > eps_lo)) throw std::invalid_argument("adiabaticity_profile: bad grid");
  AdiabaticityProfile prof{VectorXd(points), VectorXd(points)};
  VectorXd E;
  MatrixXd vecs, dH;
  for (int i = 0; i < points; ++i) {
    const double eps = eps_lo + (eps_hi - eps_lo) * i / (points - 1);
    eval(eps, E, vecs, dH);
    const MatrixXd V = vecs.transpose() * dH * vecs;
    double mu = 0.0;
    for (Eigen::Index n = 0; n < E.size(); ++n)
      for (Eigen::Index r = n + 1; r < E.size(); ++r) {
        const double gap = E(r) - E(n);
        if (std::abs(gap) < khz(1.0)) {
          std::ostringstream os;
          os << "FAQUAD: degenerate pair (" << n << "," << r << ") at eps/2pi = " << to_ghz(eps)
             << " GHz; shrink the sweep window";
          throw NumericalError(os.str());
        }
        mu = std::max(mu, std::abs(V(n, r)) / (gap * gap));
      }
    prof.eps(i) = eps;
    prof.mu(i) = mu;
  }
  return prof;
}

AdiabaticityProfile faquad_profile(const DeviceSpec& device, double eps_lo, double eps_hi,
                                   int points, int tracked, int local_levels) {
  const CoupledModel model(device, local_levels);
  double guess = device.park_EJ();
  auto eval = [&](double eps, VectorXd& E, MatrixXd& vecs, MatrixXd& dH) {
    const double EJ = guess = calibrate_EJ(device.tunable, eps, guess);
    const double dEJ = 1.0 / domega01_dEJ(device.tunable, EJ);
    auto ev = model.evaluate(EJ);
    E = ev.spec.energies.head(tracked);
    vecs = ev.spec.vectors.leftCols(tracked);
    dH = ev.dH_dEJ * dEJ;
  };
  return adiabaticity_profile(eval, eps_lo, eps_hi, points);
}

FaquadSchedule faquad_schedule(const AdiabaticityProfile& prof, double eps_start,
                               double eps_target, int samples) {
  const Eigen::Index n = prof.eps.size();
  const double lo = prof.eps(0), hi = prof.eps(n - 1), slack = 1e-12 * std::abs(hi);
  if (std::min(eps_start, eps_target) < lo - slack || std::max(eps_start, eps_target) > hi + slack)
    throw OutOfRangeError("faquad_schedule: ramp leaves the profile grid");
  FaquadSchedule out{VectorXd::Constant(samples, eps_start), 0.0};
  if (eps_start == eps_target) return out;

  auto mu_at = [&](double e) {
    const auto it = std::upper_bound(prof.eps.data(), prof.eps.data() + n, e);
    const Eigen::Index j = std::clamp<Eigen::Index>(it - prof.eps.data(), 1, n - 1);
    const double w = (e - prof.eps(j - 1)) / (prof.eps(j) - prof.eps(j - 1));
    return (1 - w) * prof.mu(j - 1) + w * prof.mu(j);
  };
  // Nodes in traversal order: start, interior grid points, target.
  std::vector<double> x{eps_start}, m{mu_at(eps_start)};
  const double a = std::min(eps_start, eps_target), b = std::max(eps_start, eps_target);
  std::vector<Eigen::Index> inner;
  for (Eigen::Index i = 0; i < n; ++i)
    if (prof.eps(i) > a && prof.eps(i) < b) inner.push_back(i);
  if (eps_target < eps_start) std::reverse(inner.begin(), inner.end());
  for (auto i : inner) {
    x.push_back(prof.eps(i));
    m.push_back(prof.mu(i));
  }
  x.push_back(eps_target);
  m.push_back(mu_at(eps_target));

  std::vector<double> F(x.size(), 0.0);
  for (size_t i = 1; i < x.size(); ++i) F[i] = F[i - 1] + 0.5 * (m[i - 1] + m[i]) * std::abs(x[i] - x[i - 1]);
  const double total = F.back();
  if (!(total > 0)) throw NumericalError("faquad_schedule: vanishing adiabaticity integral");
  out.c = total;
  const double dir = eps_target > eps_start ? 1.0 : -1.0;
  for (int k = 1; k + 1 < samples; ++k) {
    const double f = total * k / (samples - 1);
    const size_t i = std::clamp<size_t>(std::upper_bound(F.begin(), F.end(), f) - F.begin(), 1, F.size() - 1) - 1;
    // mu is linear inside the interval, so F is quadratic in the offset u.
    const double h = std::abs(x[i + 1] - x[i]), s = (m[i + 1] - m[i]) / h, r = f - F[i];
    const double u = 2.0 * r / (m[i] + std::sqrt(std::max(0.0, m[i] * m[i] + 2.0 * s * r)));
    out.eps(k) = x[i] + dir * std::min(u, h);
  }
  out.eps(samples - 1) = eps_target;
  return out;
}

Pulse faquad_ramp(const RampSpec& spec, const DeviceSpec& device) {
  spec.validate();
  const double lo = std::min(spec.omega_start, spec.omega_target);
  const double hi = std::max(spec.omega_start, spec.omega_target);
  if (lo == hi) return faquad_ramp(spec, device, AdiabaticityProfile{VectorXd::Constant(2, lo), VectorXd::Ones(2)});
  return faquad_ramp(spec, device, faquad_profile(device, lo, hi));
}

Pulse faquad_ramp(const RampSpec& spec, const DeviceSpec& device, const AdiabaticityProfile& profile) {
  spec.validate();
  const auto sched = faquad_schedule(profile, spec.omega_start, spec.omega_target, spec.samples);
  Pulse p = pulse_from_omega(device.tunable, spec.dt(), sched.eps);
  pin_endpoints(p, spec);
  p.family = "faquad";
  p.params = {{"T", spec.T}, {"c", sched.c / spec.T}};
  return p;
}

// ---- Slepian ----

SlepianParams SlepianParams::make(double theta_i, double theta_f, std::vector<double> free) {
  SlepianParams p;
  p.theta_i = theta_i;
  p.theta_f = theta_f;
  p.lambda.assign(1, 0.0);
  p.lambda.insert(p.lambda.end(), free.begin(), free.end());
  double odd = 0.0;
  for (size_t n = 3; n <= p.lambda.size(); n += 2) odd += p.lambda[n - 1];
  p.lambda[0] = 0.5 * (theta_f - theta_i) - odd;
  return p;
}

double SlepianParams::theta(double u) const {
  double th = theta_i;
  for (size_t n = 1; n <= lambda.size(); ++n)
    th += lambda[n - 1] * (1.0 - std::cos(std::numbers::pi * double(n) * u));
  return th;
}

double SlepianParams::dtheta(double u) const {
  double d = 0.0;
  for (size_t n = 1; n <= lambda.size(); ++n)
    d += lambda[n - 1] * std::numbers::pi * double(n) * std::sin(std::numbers::pi * double(n) * u);
  return d;
}

SlepianParams slepian_params(const Pseudospin& ps, const RampSpec& spec, std::vector<double> free) {
  return SlepianParams::make(ps.theta(spec.omega_start), ps.theta(spec.omega_target), std::move(free));
}

namespace {

// u(t) with t proportional to the integral of sin(theta(u)), scaled so that
// u = 1 is reached at t = T. Samples cover [0, u_max].
VectorXd slepian_u_of_t(const SlepianParams& p, double u_max, int samples) {
  using Quad = boost::math::quadrature::gauss<double, 10>;
  auto g = [&](double u) { return std::sin(p.theta(u)); };
  const int panels = 2048 * int(std::ceil(u_max));
  const double du = u_max / panels;
  std::vector<double> cum(panels + 1, 0.0);
  for (int i = 0; i < panels; ++i) cum[i + 1] = cum[i] + Quad::integrate(g, i * du, (i + 1) * du);
  for (double v : cum)
    if (!std::isfinite(v)) throw NumericalError("slepian: proper-time integral is not finite");
  // Normalize by the value at u = 1.
  const double S1 = cum[size_t(std::lround(1.0 / du))];
  if (!(S1 > 0)) throw NumericalError("slepian: theta series leaves (0, pi)");
  VectorXd u(samples);
  const double step = u_max / (samples - 1);  // in units where t(u=1) = 1
  for (int k = 0; k < samples; ++k) {
    const double S = step * k * S1;
    const size_t i = std::clamp<size_t>(std::upper_bound(cum.begin(), cum.end(), S) - cum.begin(), 1, cum.size() - 1) - 1;
    double x = i * du + (S - cum[i]) / (cum[i + 1] - cum[i]) * du;
    for (int it = 0; it < 30; ++it) {
      const double val = cum[i] + Quad::integrate(g, i * du, x) - S;
      const double dx = val / g(x);
      x = std::clamp(x - dx, i * du, (i + 1) * du);
      if (std::abs(dx) < 1e-15) break;
    }
    u(k) = x;
  }
  u(0) = 0.0;
  u(samples - 1) = u_max;
  return u;
}

}  // namespace

Pulse slepian_ramp(const RampSpec& spec, const DeviceSpec& device, const Pseudospin& ps,
                   const SlepianParams& params) {
  spec.validate();
  VectorXd omega(spec.samples);
  if (spec.omega_start == spec.omega_target) {
    omega.setConstant(spec.omega_start);
  } else {
    const VectorXd u = slepian_u_of_t(params, 1.0, spec.samples);
    for (int k = 0; k < spec.samples; ++k) {
      const double th = params.theta(u(k));
      if (!(th > 0 && th < std::numbers::pi))
        throw OutOfRangeError("slepian: theta series leaves (0, pi)");
      omega(k) = ps.omega(th);
    }
    omega(0) = spec.omega_start;
    omega(spec.samples - 1) = spec.omega_target;
  }
  Pulse p;
  try {
    p = pulse_from_omega(device.tunable, spec.dt(), omega);
  } catch (const OutOfRangeError& e) {
    throw OutOfRangeError(std::string("slepian: control leaves the attainable band: ") + e.what());
  }
  p.family = "slepian";
  p.params = {{"T", spec.T}};
  for (size_t n = 0; n < params.lambda.size(); ++n) p.params.emplace_back("lambda" + std::to_string(n + 1), params.lambda[n]);
  return p;
}

VectorXd slepian_full_period_detuning(const SlepianParams& params, const Pseudospin& ps, double,
                                      int samples) {
  const VectorXd u = slepian_u_of_t(params, 2.0, samples);
  VectorXd d(samples);
  for (int k = 0; k < samples; ++k) d(k) = ps.omega(params.theta(u(k))) - ps.omega_star;
  return d;
}

// ---- Invariant / variational ----

void InvariantParams::validate() const {
  if (order < 1) throw ConfigError("invariant: smoothness order must be >= 1");
  if (n_max < 2 * order) throw ConfigError("invariant: n_max must be >= 2*order");
  if (free.size() > size_t(n_max - 2 * order)) throw ConfigError("invariant: too many free coefficients");
}

namespace {

// j-th derivative of tau^m at tau.
double dpow(int m, int j, double tau) {
  if (j > m) return 0.0;
  double f = 1.0;
  for (int i = 0; i < j; ++i) f *= double(m - i);
  return f * (m == j ? 1.0 : std::pow(tau, m - j));
}

}  // namespace

VectorXd solve_invariant_coefficients(const InvariantParams& p) {
  p.validate();
  const int k = p.order, nfix = 2 * k + 1;
  VectorXd c = VectorXd::Zero(p.n_max + 1);
  for (size_t i = 0; i < p.free.size(); ++i) c(nfix + Eigen::Index(i)) = p.free[i];
  // Rows: P(0) = 1, P^(j)(0) = 0, P^(j)(1) = 0 with P = sum_n c_n (tau^n - tau^(n+1)).
  MatrixXd A = MatrixXd::Zero(nfix, p.n_max + 1);
  VectorXd rhs = VectorXd::Zero(nfix);
  rhs(0) = 1.0;
  auto q = [](int n, int j, double tau) { return dpow(n, j, tau) - dpow(n + 1, j, tau); };
  for (int n = 0; n <= p.n_max; ++n) {
    A(0, n) = q(n, 0, 0.0);
    for (int j = 1; j <= k; ++j) {
      A(j, n) = q(n, j, 0.0);
      A(k + j, n) = q(n, j, 1.0);
    }
  }
  rhs -= A.rightCols(p.n_max + 1 - nfix) * c.tail(p.n_max + 1 - nfix);
  Eigen::FullPivLU<MatrixXd> lu(A.leftCols(nfix));
  if (!lu.isInvertible()) throw NumericalError("invariant: boundary system is singular");
  c.head(nfix) = lu.solve(rhs);
  // Residual relative to the size of the terms that cancel.
  const double scale = (A.cwiseAbs() * c.cwiseAbs()).maxCoeff();
  const double res = (A * c - VectorXd::Unit(nfix, 0)).cwiseAbs().maxCoeff() / scale;
  if (res > 1e-12) throw NumericalError("invariant: boundary conditions not met");
  return c;
}

RampPolynomial::RampPolynomial(const InvariantParams& p, double gamma, double T)
    : c_(solve_invariant_coefficients(p)), gamma_(gamma), T_(T) {
  p_ = VectorXd::Zero(c_.size() + 1);
  for (Eigen::Index n = 0; n < c_.size(); ++n) {
    p_(n) += c_(n);
    p_(n + 1) -= c_(n);
  }
}

double RampPolynomial::derivative(int order, double t) const {
  const double tau = t / T_;
  double v = 0.0;
  for (Eigen::Index m = p_.size() - 1; m >= 0; --m) v += p_(m) * dpow(int(m), order, tau);
  v *= (1.0 - gamma_) / std::pow(T_, order);
  return order == 0 ? gamma_ + v : v;
}

double RampPolynomial::rho(double t) const { return derivative(0, t); }
double RampPolynomial::rho_dot(double t) const { return derivative(1, t); }
double RampPolynomial::rho_ddot(double t) const { return derivative(2, t); }

InvariantDesign invariant_design(const RampSpec& spec, const TransmonSpec& transmon,
                                 const InvariantParams& params) {
  spec.validate();
  const double EJ0 = calibrate_EJ(transmon, spec.omega_start);
  const double EJ1 = calibrate_EJ(transmon, spec.omega_target);
  const double gamma = std::pow(EJ0 / EJ1, 0.25);
  return {RampPolynomial(params, gamma, spec.T), std::sqrt(8.0 * transmon.E_C * EJ0)};
}

namespace {

Pulse finish_EJ_pulse(const RampSpec& spec, const TransmonSpec& transmon, VectorXd E_J,
                      const char* family) {
  const double top = transmon.E_J_max * (1.0 + 1e-12);
  for (int k = 0; k < spec.samples; ++k) {
    if (!(E_J(k) > 0) || E_J(k) > top) {
      std::ostringstream os;
      os << family << ": E_J leaves (0, E_J_max] at t = " << spec.dt() * k << " ns";
      throw OutOfRangeError(os.str());
    }
    E_J(k) = std::min(E_J(k), transmon.E_J_max);
  }
  Pulse p = pulse_from_EJ(transmon, spec.dt(), std::move(E_J));
  pin_endpoints(p, spec);
  p.family = family;
  p.params = {{"T", spec.T}};
  return p;
}

}  // namespace

Pulse invariant_ramp(const RampSpec& spec, const TransmonSpec& transmon, const InvariantParams& params) {
  const auto d = invariant_design(spec, transmon, params);
  VectorXd E_J(spec.samples);
  for (int k = 0; k < spec.samples; ++k) {
    const double t = spec.dt() * k, w2 = d.omega_sq(t);
    if (w2 < 0) {
      std::ostringstream os;
      os << "invariant: omega^2 < 0 at t = " << t << " ns (ramp too fast)";
      throw NumericalError(os.str());
    }
    E_J(k) = w2 / (8.0 * transmon.E_C);
  }
  E_J(0) = calibrate_EJ(transmon, spec.omega_start);
  E_J(spec.samples - 1) = calibrate_EJ(transmon, spec.omega_target);
  Pulse p = finish_EJ_pulse(spec, transmon, std::move(E_J), "invariant");
  p.params.emplace_back("gamma", d.rho.gamma());
  return p;
}

double variational_width(double E_C, double E_J) {
  // log form: s^2/4 + log(8 E_C) - 4 log s - log E_J = 0, convex and
  // decreasing for s < sqrt(8); the harmonic width lies left of the root.
  double s = std::pow(8.0 * E_C / E_J, 0.25);
  for (int it = 0; it < 50; ++it) {
    const double g = s * s / 4 + std::log(8.0 * E_C) - 4 * std::log(s) - std::log(E_J);
    const double dg = s / 2 - 4 / s;
    const double ds = g / dg;
    s -= ds;
    if (std::abs(ds) < 1e-15 * s) return s;
  }
  throw NumericalError("variational_width: Newton did not converge");
}

Pulse variational_ramp(const RampSpec& spec, const TransmonSpec& transmon, const InvariantParams& params) {
  spec.validate();
  const double EJ0 = calibrate_EJ(transmon, spec.omega_start);
  const double EJ1 = calibrate_EJ(transmon, spec.omega_target);
  const double s0 = variational_width(transmon.E_C, EJ0), s1 = variational_width(transmon.E_C, EJ1);
  const RampPolynomial rho(params, s1 / s0, spec.T);
  const double e8 = 8.0 * transmon.E_C;
  VectorXd E_J(spec.samples);
  for (int k = 0; k < spec.samples; ++k) {
    const double t = spec.dt() * k;
    const double s = s0 * rho.rho(t), sdd = s0 * rho.rho_ddot(t);
    E_J(k) = std::exp(s * s / 4) / e8 * (e8 * e8 / (s * s * s * s) - sdd / s);
  }
  Pulse p = finish_EJ_pulse(spec, transmon, std::move(E_J), "variational");
  p.params.emplace_back("gamma_sigma", s1 / s0);
  return p;
}

Pulse assemble_gate_pulse(const Pulse& down, double t_wait, bool up_mirror) {
  if (t_wait < 0) throw std::invalid_argument("assemble_gate_pulse: negative wait");
  const Eigen::Index n = down.size();
  const Eigen::Index hold = t_wait > 0 ? std::max<Eigen::Index>(1, std::lround(t_wait / down.dt)) : 0;
  const Eigen::Index total = n + hold + (up_mirror ? n - 1 : 0);
  Pulse p;
  p.dt = down.dt;
  p.family = down.family;
  p.params = down.params;
  p.params.emplace_back("t_wait", double(hold) * down.dt);
  auto fill = [&](VectorXd& out, const VectorXd& in) {
    out.resize(total);
    out.head(n) = in;
    out.segment(n, hold).setConstant(in(n - 1));
    if (up_mirror) out.tail(n - 1) = in.head(n - 1).reverse();
  };
  fill(p.omega01, down.omega01);
  fill(p.E_J, down.E_J);
  fill(p.flux, down.flux);
  return p;
}

}  // namespace tcz
