#include "tcz/calibration.hpp"

#include <gsl/gsl_multimin.h>

#include <Eigen/Eigenvalues>

#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

namespace tcz {

namespace {

// Lower FAQUAD profile edge sits this far below the most negative destination.
constexpr double profile_margin = mhz(1.0);

double cz_error(const MatrixXcd& block) {
  return 1.0 - average_fidelity(std::clamp(entanglement_fidelity_unitary(block, PhaseGate::cz().matrix()), 0.0, 1.0));
}

double cz_error(const ChannelImage& ch) {
  return 1.0 - average_fidelity(std::clamp(entanglement_fidelity_channel(ch, PhaseGate::cz().matrix()), 0.0, 1.0));
}

double phi12_of(const MatrixXcd& b) { return std::arg(b(0, 0) * std::conj(b(1, 1)) * std::conj(b(2, 2)) * b(3, 3)) / 4.0; }

}  // namespace

GateSetup::GateSetup(const DeviceSpec& d, const PropagationConfig& c, double w)
    : device(d),
      cfg(c),
      basis(d, c.truncation),
      resonance(find_resonance(d)),
      omega_park(transmon_frequencies(d.tunable, d.park_EJ()).omega01),
      pseudospin{resonance.omega_a_star, 0.5 * resonance.gap},
      window(w) {
  cfg.validate();
  if (!(window > 0 && window < ghz(0.2))) throw ConfigError("gate setup: detuning window must lie in (0, 200 MHz)");
  faquad = faquad_profile(device, destination(-window) - profile_margin, omega_park);
}

Pulse design_down_ramp(const GateSetup& setup, const GateControl& control, double detuning) {
  if (std::abs(detuning) > setup.window * (1 + 1e-12)) {
    std::ostringstream os;
    os << "design_down_ramp: detuning " << to_mhz(detuning) << " MHz outside the +-" << to_mhz(setup.window)
       << " MHz window";
    throw ConfigError(os.str());
  }
  const RampSpec rs{setup.omega_park, setup.destination(detuning), control.T, control.samples};
  rs.validate();
  switch (control.family) {
    case Family::linear: return linear_ramp(rs, setup.device.tunable);
    case Family::faquad: return faquad_ramp(rs, setup.device, setup.faquad);
    case Family::slepian:
      return slepian_ramp(rs, setup.device, setup.pseudospin,
                          slepian_params(setup.pseudospin, rs, control.slepian_free));
    case Family::invariant: return invariant_ramp(rs, setup.device.tunable, control.invariant);
    case Family::variational: return variational_ramp(rs, setup.device.tunable, control.invariant);
  }
  throw std::invalid_argument("design_down_ramp: unknown family");
}

// ---- mirrored gate from one down ramp ----

RampPropagation::RampPropagation(const GateSetup& setup, Pulse down) : down_(std::move(down)) {
  if (down_.size() < 2) throw std::invalid_argument("RampPropagation: empty ramp");
  const JointBasis& basis = setup.basis;
  const double E_f = down_.E_J(down_.size() - 1);
  const auto red = reduce(basis, {basis.device().park_EJ(), E_f}, setup.cfg.subspace_states);
  const int six[6] = {basis.index(0, 0), basis.index(0, 1), basis.index(1, 0),
                      basis.index(0, 2), basis.index(1, 1), basis.index(2, 0)};
  MatrixXcd X0 = MatrixXcd::Zero(red.model.dim(), 6);
  for (int i = 0; i < 6; ++i) {
    Eigen::Index loc;
    if (red.Q.row(six[i]).cwiseAbs().maxCoeff(&loc) < 1 - 1e-12)
      throw NumericalError("RampPropagation: t = 0 state not resolved by the subspace");
    X0(loc, i) = red.Q(six[i], loc);
  }
  const MatrixXcd D = red.Q.cast<cplx>() * propagate(red.model, down_, X0, setup.cfg);

  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(basis.model().at(E_f));
  lambda_ = es.eigenvalues();
  B_ = es.eigenvectors().transpose().cast<cplx>() * D;
  comp_ = {0, 1, 2, 4};

  MatrixXcd U = MatrixXcd::Zero(basis.dim(), basis.dim());
  for (int i = 0; i < 6; ++i) U.col(six[i]) = D.col(i);
  analysis_ = analyze_ramp_block(U, basis, E_f, down_.duration());
}

MatrixXcd RampPropagation::gate6(double t_wait) const {
  const VectorXcd phase = (lambda_.cast<cplx>() * cplx(0, -t_wait)).array().exp();
  return B_.transpose() * phase.asDiagonal() * B_;
}

MatrixXcd RampPropagation::block(double t_wait) const {
  const MatrixXcd g = gate6(t_wait);
  MatrixXcd b(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) b(i, j) = g(comp_[size_t(i)], comp_[size_t(j)]);
  return b;
}

double RampPropagation::quantized_wait(double t_wait) const {
  if (t_wait < 0) throw std::invalid_argument("quantized_wait: negative wait");
  if (t_wait == 0) return 0.0;
  return double(std::max<long>(1, std::lround(t_wait / down_.dt))) * down_.dt;
}

GateReport RampPropagation::report(double t_wait) const {
  const double tq = quantized_wait(t_wait);
  return gate_report(block(tq), 2 * down_.duration() + tq);
}

// ---- single transmon ----

double single_transmon_ramp_error(Family family, double T, const GateSetup& setup, int samples) {
  GateControl ctl;
  ctl.family = family;
  ctl.T = T;
  ctl.samples = samples;
  const Pulse p = design_down_ramp(setup, ctl, 0.0);
  const auto& spec = setup.device.tunable;
  const MatrixXcd U = propagate_unitary(spec, p, setup.cfg).matrix();
  const auto m = transmon_model(spec, p.E_J(0), setup.cfg.transmon_levels);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.at(p.E_J(p.size() - 1)));
  const MatrixXcd F = es.eigenvectors().leftCols(2).transpose().cast<cplx>() * U.leftCols(2);
  // Best phase gate: the diagonal phases are free, only the moduli count.
  const double Fe = std::norm(0.5 * (std::abs(F(0, 0)) + std::abs(F(1, 1))));
  return 1.0 - average_fidelity(std::min(Fe, 1.0), 2);
}

// ---- optimizer ----

namespace {

// Nelder-Mead on GSL's simplex in coordinates scaled by the tolerances, so a
// simplex size below one means every coordinate has converged.
struct Simplex {
  std::function<double(const std::vector<double>&)> f;
  std::vector<double> lo, hi, scale;

  struct Outcome {
    std::vector<double> x;
    double fx;
    int evals;
    bool converged;
  };

  Outcome run(const std::vector<double>& x0, const std::vector<double>& step, int budget) const {
    const size_t n = x0.size();
    int evals = 0;
    auto clamp_eval = [&](const gsl_vector* v, std::vector<double>& x) {
      double excess = 0.0;
      x.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const double xi = gsl_vector_get(v, i) * scale[i];
        x[i] = std::clamp(xi, lo[i], hi[i]);
        excess += std::pow((xi - x[i]) / scale[i], 2);
      }
      return excess;
    };
    struct Ctx {
      const Simplex* self;
      decltype(clamp_eval)* ce;
      int* evals;
    } ctx{this, &clamp_eval, &evals};
    gsl_multimin_function fn;
    fn.n = n;
    fn.params = &ctx;
    fn.f = [](const gsl_vector* v, void* p) {
      auto& c = *static_cast<Ctx*>(p);
      std::vector<double> x;
      const double excess = (*c.ce)(v, x);
      ++*c.evals;
      return c.self->f(x) + excess;
    };
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* ss = gsl_vector_alloc(n);
    for (size_t i = 0; i < n; ++i) {
      gsl_vector_set(x, i, x0[i] / scale[i]);
      gsl_vector_set(ss, i, step[i] / scale[i]);
    }
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &fn, x, ss);
    bool converged = false;
    while (evals < budget) {
      if (gsl_multimin_fminimizer_iterate(s)) break;
      if (gsl_multimin_fminimizer_size(s) < 0.25) {
        converged = true;
        break;
      }
    }
    Outcome out;
    clamp_eval(gsl_multimin_fminimizer_x(s), out.x);
    out.fx = gsl_multimin_fminimizer_minimum(s);
    out.evals = evals;
    out.converged = converged;
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(ss);
    gsl_vector_free(x);
    return out;
  }
};

using RampKey = std::vector<double>;  // detuning, then Slepian free parameters

// Lindblad pieces of one down ramp: its coarse steps and their mirror.
struct LossyRamp {
  Pulse down;
  LindbladChannel channel;
  std::vector<LindbladStep> down_steps, up_steps;
  VectorXd lambda;
  MatrixXd vecs;

  LossyRamp(const GateSetup& setup, Pulse p, const LindbladSpec& spec)
      : down(std::move(p)), channel(setup.basis, spec, down.E_J(down.size() - 1), setup.cfg) {
    const auto& model = channel.reduced().model;
    down_steps = lindblad_steps(model, down, setup.cfg);
    for (auto it = down_steps.rbegin(); it != down_steps.rend(); ++it)
      up_steps.push_back({std::make_shared<const MatrixXcd>(it->U->transpose()), it->tau});
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(model.at(down.E_J(down.size() - 1)));
    lambda = es.eigenvalues();
    vecs = es.eigenvectors();
  }

  ChannelImage run(double t_q, const PropagationConfig& cfg) const {
    std::vector<LindbladStep> steps = down_steps;
    const long hold = std::lround(t_q / down.dt);
    const long len = std::max<long>(1, std::lround(cfg.dissipator_step / down.dt));
    auto hold_unitary = [&](long n) {
      const double tau = down.dt * double(n);
      const VectorXcd ph = (lambda.cast<cplx>() * cplx(0, -tau)).array().exp();
      return LindbladStep{std::make_shared<const MatrixXcd>(vecs.cast<cplx>() * ph.asDiagonal() * vecs.transpose()), tau};
    };
    if (hold >= len) {
      const LindbladStep full = hold_unitary(len);
      for (long k = 0; k + len <= hold; k += len) steps.push_back(full);
    }
    if (hold % len) steps.push_back(hold_unitary(hold % len));
    steps.insert(steps.end(), up_steps.begin(), up_steps.end());
    return channel.run(steps);
  }
};

}  // namespace

CalibrationResult optimize_gate(const GateSetup& setup, const GateControl& control, const OptimizeOptions& opt) {
  if (!(opt.t_wait_max > 0)) throw ConfigError("optimize: t_wait_max must be positive");
  if (opt.max_evals < 10) throw ConfigError("optimize: max_evals must be at least 10");
  if (!(opt.tol_wait > 0 && opt.tol_detuning > 0)) throw ConfigError("optimize: tolerances must be positive");
  if (opt.lindblad) opt.lindblad->validate();

  const bool slepian3 = opt.optimize_slepian && control.family == Family::slepian;
  std::map<RampKey, std::unique_ptr<RampPropagation>> ramps;
  auto ramp = [&](double det, const std::vector<double>& free) -> const RampPropagation& {
    RampKey key{det};
    key.insert(key.end(), free.begin(), free.end());
    auto& slot = ramps[key];
    if (!slot) {
      GateControl c = control;
      c.slepian_free = free;
      slot = std::make_unique<RampPropagation>(setup, design_down_ramp(setup, c, det));
    }
    return *slot;
  };
  auto lossless = [&](double t, double det, const std::vector<double>& free) {
    const auto& r = ramp(det, free);
    return cz_error(r.block(r.quantized_wait(t)));
  };

  // Coarse grid: the t_wait axis is centred on the block-analysis prediction.
  const auto& r0 = ramp(0.0, control.slepian_free);
  const double t_pred = std::clamp(r0.analysis().t_wait_pred, 0.0, opt.t_wait_max);
  double best_t = 0.0, best_det = 0.0;
  double best = lossless(0.0, 0.0, control.slepian_free);
  for (int k = 0; k <= 10; ++k) {
    const double det = -setup.window + setup.window * k / 5.0;
    for (int j = 0; j <= 20; ++j) {
      const double t = std::clamp(t_pred - 6.0 + 0.6 * j, 0.0, opt.t_wait_max);
      const double e = lossless(t, det, control.slepian_free);
      if (e < best) {
        best = e;
        best_t = t;
        best_det = det;
      }
    }
  }

  CalibrationResult res;
  res.family = control.family;
  res.T = control.T;
  res.coarse_best_error = best;
  res.slepian_free = control.slepian_free;

  Simplex nm;
  nm.lo = {0.0, -setup.window};
  nm.hi = {opt.t_wait_max, setup.window};
  nm.scale = {opt.tol_wait, opt.tol_detuning};
  std::vector<double> x0{best_t, best_det}, step{0.3, setup.window / 10.0};
  if (slepian3) {
    for (double v : control.slepian_free) {
      nm.lo.push_back(-1.0);
      nm.hi.push_back(1.0);
      nm.scale.push_back(1e-3);
      x0.push_back(v);
      step.push_back(0.05);
    }
  }
  auto free_of = [&](const std::vector<double>& x) {
    return slepian3 ? std::vector<double>(x.begin() + 2, x.end()) : control.slepian_free;
  };
  nm.f = [&](const std::vector<double>& x) { return lossless(x[0], x[1], free_of(x)); };
  auto out = nm.run(x0, step, opt.max_evals);
  if (out.fx > best) {  // keep the grid point if the simplex never improved on it
    out.x = x0;
    out.fx = best;
  }
  res.evaluations = out.evals;
  res.converged = out.converged;

  const auto& r = ramp(out.x[1], free_of(out.x));
  res.t_wait = r.quantized_wait(out.x[0]);
  res.report = r.report(res.t_wait);
  res.detuning = out.x[1];
  res.omega_dest = setup.destination(res.detuning);
  res.slepian_free = free_of(out.x);
  res.T_gate = res.report.T_gate;
  if (opt.lindblad) return refine_lossy(setup, control, res, *opt.lindblad, opt);
  return res;
}

CalibrationResult optimize_fixed_duration(const GateSetup& setup, const GateControl& control, double T_gate,
                                          const OptimizeOptions& opt) {
  if (!(T_gate > 2.0)) throw ConfigError("optimize: fixed gate duration must exceed 2 ns");
  const double T_max = 0.5 * T_gate;
  auto hold_of = [&](double T, const RampPropagation& r) { return r.quantized_wait(std::max(0.0, T_gate - 2 * T)); };
  auto error = [&](double T, double det) {
    GateControl c = control;
    c.T = T;
    const RampPropagation r(setup, design_down_ramp(setup, c, det));
    return cz_error(r.block(hold_of(T, r)));
  };
  double best = INFINITY, best_T = 1.0, best_det = 0.0;
  for (double T = 1.0; T <= T_max + 1e-9; T += 1.0)
    for (int k = 0; k <= 4; ++k) {
      const double det = -setup.window + setup.window * k / 2.0;
      const double e = error(T, det);
      if (e < best) best = e, best_T = T, best_det = det;
    }
  Simplex nm;
  nm.lo = {1.0, -setup.window};
  nm.hi = {T_max, setup.window};
  nm.scale = {opt.tol_wait, opt.tol_detuning};
  nm.f = [&](const std::vector<double>& x) { return error(x[0], x[1]); };
  const std::vector<double> x0{best_T, best_det};
  auto out = nm.run(x0, {0.3, setup.window / 10.0}, opt.max_evals);
  if (out.fx > best) {
    out.x = x0;
    out.fx = best;
  }
  GateControl c = control;
  c.T = out.x[0];
  const RampPropagation r(setup, design_down_ramp(setup, c, out.x[1]));
  CalibrationResult res;
  res.family = control.family;
  res.T = c.T;
  res.t_wait = hold_of(c.T, r);
  res.detuning = out.x[1];
  res.omega_dest = setup.destination(res.detuning);
  res.report = r.report(res.t_wait);
  res.T_gate = res.report.T_gate;
  res.converged = out.converged;
  res.evaluations = out.evals;
  res.coarse_best_error = best;
  res.slepian_free = control.slepian_free;
  return res;
}

CalibrationResult refine_lossy(const GateSetup& setup, const GateControl& control, const CalibrationResult& seed,
                               const LindbladSpec& spec, const OptimizeOptions& opt) {
  spec.validate();
  if (seed.family != control.family || seed.T != control.T)
    throw std::invalid_argument("refine_lossy: seed belongs to another family or ramp time");
  const bool slepian3 = opt.optimize_slepian && control.family == Family::slepian;
  auto free_of = [&](const std::vector<double>& x) {
    return slepian3 ? std::vector<double>(x.begin() + 2, x.end()) : control.slepian_free;
  };
  std::map<RampKey, std::unique_ptr<LossyRamp>> lossy;
  auto lossy_ramp = [&](const std::vector<double>& x) -> const LossyRamp& {
    const auto free = free_of(x);
    RampKey key{x[1]};
    key.insert(key.end(), free.begin(), free.end());
    auto& slot = lossy[key];
    if (!slot) {
      GateControl c = control;
      c.slepian_free = free;
      slot = std::make_unique<LossyRamp>(setup, design_down_ramp(setup, c, x[1]), spec);
    }
    return *slot;
  };
  auto wait_of = [&](const LossyRamp& l, double t) {
    return t > 0 ? double(std::max<long>(1, std::lround(t / l.down.dt))) * l.down.dt : 0.0;
  };
  auto lossy_error = [&](const std::vector<double>& x) {
    const auto& l = lossy_ramp(x);
    return cz_error(l.run(wait_of(l, x[0]), setup.cfg));
  };

  Simplex nm;
  nm.lo = {0.0, -setup.window};
  nm.hi = {opt.t_wait_max, setup.window};
  nm.scale = {opt.tol_wait, opt.tol_detuning};
  std::vector<double> x0{seed.t_wait, seed.detuning}, step{0.2, mhz(0.2)};
  if (slepian3)
    for (double v : seed.slepian_free) {
      nm.lo.push_back(-1.0);
      nm.hi.push_back(1.0);
      nm.scale.push_back(1e-3);
      x0.push_back(v);
      step.push_back(0.01);
    }
  nm.f = lossy_error;
  CalibrationResult res = seed;
  res.coarse_best_error = lossy_error(x0);
  auto out = nm.run(x0, step, opt.lossy_evals);
  if (out.fx > res.coarse_best_error) {
    out.x = x0;
    out.fx = res.coarse_best_error;
  }
  res.evaluations = seed.evaluations + out.evals;
  res.converged = seed.converged && out.converged;
  const auto& l = lossy_ramp(out.x);
  res.t_wait = wait_of(l, out.x[0]);
  res.detuning = out.x[1];
  res.omega_dest = setup.destination(res.detuning);
  res.slepian_free = free_of(out.x);
  res.report = gate_report(l.run(res.t_wait, setup.cfg), 2 * l.down.duration() + res.t_wait);
  res.T_gate = res.report.T_gate;
  return res;
}

GateReport lossy_report(const GateSetup& setup, const Pulse& gate, const LindbladSpec& spec) {
  return gate_report(propagate_lindblad(setup.basis, gate, spec, setup.cfg), gate.duration());
}

// ---- sweeps ----

void SweepCurve::validate() const {
  if (names.size() != series.size()) throw std::invalid_argument("sweep curve: names and series differ in count");
  for (const auto& s : series)
    if (s.size() != x.size()) throw std::invalid_argument("sweep curve: series length differs from abscissa");
  for (size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) throw std::invalid_argument("sweep curve: abscissa not strictly increasing");
}

std::string SweepCurve::csv(const std::string& header_comment) const {
  validate();
  std::ostringstream os;
  std::istringstream hc(header_comment);
  for (std::string line; std::getline(hc, line);) os << "# " << line << '\n';
  os << abscissa;
  for (const auto& n : names) os << ',' << n;
  os << '\n' << std::setprecision(12);
  for (size_t i = 0; i < x.size(); ++i) {
    os << x[i];
    for (const auto& s : series) os << ',' << s[i];
    os << '\n';
  }
  return os.str();
}

void parallel_for(int n, int jobs, const std::function<void(int)>& f) {
  std::vector<std::exception_ptr> errors(size_t(std::max(n, 0)));
  auto body = [&](int i) {
    try {
      f(i);
    } catch (...) {
      errors[size_t(i)] = std::current_exception();
    }
  };
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) body(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&] {
        for (int i; (i = next++) < n;) body(i);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

GateTimeSweep sweep_gate_time(const GateSetup& setup, const std::vector<Family>& families,
                              const std::vector<double>& T_list, const OptimizeOptions& opt, int jobs,
                              const GateTimeSweep* lossless) {
  if (families.empty()) throw ConfigError("sweep: no families");
  if (T_list.empty()) throw ConfigError("sweep: empty T list");
  GateTimeSweep out;
  out.curve.abscissa = "T_ns";
  out.curve.x = T_list;
  const size_t nf = families.size(), nT = T_list.size();
  out.results.assign(nf, std::vector<CalibrationResult>(nT));
  std::vector<std::string> fail(nf * nT);
  parallel_for(int(nf * nT), jobs, [&](int k) {
    const size_t f = size_t(k) / nT, i = size_t(k) % nT;
    GateControl c;
    c.family = families[f];
    c.T = T_list[i];
    try {
      const CalibrationResult* seed = nullptr;
      if (lossless && opt.lindblad)
        for (size_t g = 0; g < lossless->results.size(); ++g)
          for (const auto& r : lossless->results[g])
            if (r.family == c.family && r.T == c.T && std::isfinite(r.T_gate)) seed = &r;
      out.results[f][i] = seed ? refine_lossy(setup, c, *seed, *opt.lindblad, opt) : optimize_gate(setup, c, opt);
    } catch (const std::exception& e) {
      CalibrationResult r;
      r.family = c.family;
      r.T = c.T;
      r.converged = false;
      r.report.F_avg_cz = std::numeric_limits<double>::quiet_NaN();
      r.T_gate = std::numeric_limits<double>::quiet_NaN();
      out.results[f][i] = r;
      std::ostringstream os;
      os << to_string(c.family) << " T=" << c.T << ": " << e.what();
      fail[size_t(k)] = os.str();
    }
  });
  for (auto& s : fail)
    if (!s.empty()) out.failures.push_back(std::move(s));
  for (size_t f = 0; f < nf; ++f) {
    std::vector<double> err, tg, tw, det;
    for (const auto& r : out.results[f]) {
      err.push_back(1.0 - r.report.F_avg_cz);
      tg.push_back(r.T_gate);
      tw.push_back(r.t_wait);
      det.push_back(to_mhz(r.detuning));
    }
    const std::string n = to_string(families[f]);
    out.curve.names.insert(out.curve.names.end(), {n + "_error", n + "_T_gate_ns", n + "_t_wait_ns", n + "_detuning_MHz"});
    out.curve.series.insert(out.curve.series.end(), {err, tg, tw, det});
  }
  return out;
}

SweepCurve sweep_wait_time(const GateSetup& setup, const GateControl& control, const std::vector<double>& t_wait,
                           double detuning) {
  const RampPropagation r(setup, design_down_ramp(setup, control, detuning));
  SweepCurve c;
  c.abscissa = "t_wait_ns";
  c.names = {"P11", "P11_to_20", "leakage", "phi12", "F_avg_cz"};
  c.series.assign(c.names.size(), {});
  for (double t : t_wait) {
    if (t < 0) throw ConfigError("sweep: negative wait");
    const double tq = r.quantized_wait(t);
    const MatrixXcd g = r.gate6(tq);
    const MatrixXcd b = r.block(tq);
    c.x.push_back(tq);
    c.series[0].push_back(std::norm(g(4, 4)));
    c.series[1].push_back(std::norm(g(5, 4)));
    c.series[2].push_back(leakage(b));
    c.series[3].push_back(phi12_of(b));
    c.series[4].push_back(1.0 - cz_error(b));
  }
  return c;
}

SweepCurve sweep_destination(const GateSetup& setup, const GateControl& control, const std::vector<double>& detuning,
                             double t_wait) {
  SweepCurve c;
  c.abscissa = "detuning_MHz";
  c.names = {"phi12", "leakage", "F_avg_cz"};
  c.series.assign(c.names.size(), {});
  double prev = 0.0;
  for (double det : detuning) {
    const RampPropagation r(setup, design_down_ramp(setup, control, det));
    const MatrixXcd b = r.block(r.quantized_wait(t_wait));
    // phi12 is unwrapped along the sweep (period pi/2).
    double p = phi12_of(b);
    if (!c.x.empty()) p += std::numbers::pi / 2 * std::round((prev - p) / (std::numbers::pi / 2));
    prev = p;
    c.x.push_back(to_mhz(det));
    c.series[0].push_back(p);
    c.series[1].push_back(leakage(b));
    c.series[2].push_back(1.0 - cz_error(b));
  }
  return c;
}

}  // namespace tcz
