#include "tcz/hamiltonian.hpp"

#include <Eigen/Eigenvalues>
#include <lapacke.h>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

namespace tcz {

namespace bmt = boost::math::tools;

void TransmonSpec::validate() const {
  if (!(E_C > 0)) throw ConfigError("TransmonSpec: E_C must be positive");
  if (!(E_J_max > 0)) throw ConfigError("TransmonSpec: E_J_max must be positive");
  if (charge_cutoff < 10) throw ConfigError("TransmonSpec: charge_cutoff must be >= 10");
}

SpectralTargets SpectralTargets::reference() {
  return {ghz(6.91), ghz(5.69), ghz(-0.331), ghz(-0.300), mhz(14.3), mhz(20.2)};
}

void SpectralTargets::validate() const {
  if (!(omega_a > 0 && omega_b > 0)) throw ConfigError("targets: frequencies must be positive");
  if (!(alpha_a < 0 && alpha_b < 0)) throw ConfigError("targets: anharmonicities must be negative");
  if (!(J1 >= 0 && J2 >= 0)) throw ConfigError("targets: couplings must be non-negative");
  if (omega_a < omega_b) throw ConfigError("targets: tunable qubit must park above the fixed one");
}

MatrixXd charge_operator(int m_max) {
  const int n = 2 * m_max + 1;
  MatrixXd N = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) N(i, i) = i - m_max;
  return N;
}

MatrixXd cos_phi_operator(int m_max) {
  const int n = 2 * m_max + 1;
  MatrixXd C = MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) C(i, i + 1) = C(i + 1, i) = 0.5;
  return C;
}

OperatorMatrix build_transmon_hamiltonian(const TransmonSpec& spec, double E_J, Basis basis) {
  if (!(E_J > 0)) throw std::invalid_argument("build_transmon_hamiltonian: E_J must be positive");
  const int m = spec.charge_cutoff, n = spec.dim();
  MatrixXcd H = MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double q = i - m;
    H(i, i) = 4.0 * spec.E_C * q * q;
    if (i + 1 < n) H(i, i + 1) = H(i + 1, i) = -0.5 * E_J;
  }
  return {H, basis};
}

TransmonLevels transmon_levels(const TransmonSpec& spec, double E_J, int count, bool vectors) {
  const int m = spec.charge_cutoff, n = spec.dim();
  count = std::min(count, n);
  std::vector<double> d(n), e(n), w(n), z(vectors ? size_t(n) * count : 1);
  std::vector<lapack_int> support(2 * size_t(count));
  for (int i = 0; i < n; ++i) d[i] = 4.0 * spec.E_C * double(i - m) * double(i - m);
  std::fill(e.begin(), e.end(), -0.5 * E_J);
  lapack_int found = 0;
  const lapack_int info =
      LAPACKE_dstevr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'I', n, d.data(), e.data(), 0.0, 0.0,
                     1, count, 0.0, &found, w.data(), z.data(), n, support.data());
  if (info != 0 || found != count) throw NumericalError("transmon_levels: eigensolver failed");
  TransmonLevels out{Eigen::Map<VectorXd>(w.data(), count), {}};
  if (vectors) {
    out.vectors = Eigen::Map<MatrixXd>(z.data(), n, count);
    fix_phases(out.vectors);
  }
  return out;
}

TransmonFrequencies transmon_frequencies(const TransmonSpec& spec, double E_J) {
  const auto lv = transmon_levels(spec, E_J, 3, false);
  const double w01 = lv.energies(1) - lv.energies(0);
  return {w01, (lv.energies(2) - lv.energies(1)) - w01};
}

namespace {

// <v|cos(phi)|v> in the charge basis.
double expect_cos(const VectorXd& v) {
  return v.head(v.size() - 1).dot(v.tail(v.size() - 1));
}

}  // namespace

double domega01_dEJ(const TransmonSpec& spec, double E_J) {
  const auto lv = transmon_levels(spec, E_J, 2, true);
  return expect_cos(lv.vectors.col(0)) - expect_cos(lv.vectors.col(1));
}

double calibrate_EJ(const TransmonSpec& spec, double target) {
  return calibrate_EJ(spec, target, (target + spec.E_C) * (target + spec.E_C) / (8.0 * spec.E_C));
}

double calibrate_EJ(const TransmonSpec& spec, double target, double guess) {
  const double hi = spec.E_J_max, lo = 1e-6 * spec.E_J_max;
  const double w_hi = transmon_frequencies(spec, hi).omega01;
  if (std::abs(target - w_hi) <= 1e-13 * w_hi) return hi;
  auto out_of_range = [&] {
    const double w_lo = transmon_frequencies(spec, lo).omega01;
    std::ostringstream os;
    os << "calibrate_EJ: target omega01 = " << to_ghz(target) << " GHz outside attainable range ("
       << to_ghz(w_lo) << ", " << to_ghz(w_hi) << "] GHz";
    return OutOfRangeError(os.str());
  };
  if (!(target < w_hi && target > 0)) throw out_of_range();
  double w = 0.0;
  auto f = [&](double EJ) {
    const auto lv = transmon_levels(spec, EJ, 2, true);
    w = lv.energies(1) - lv.energies(0);
    const double dw = expect_cos(lv.vectors.col(0)) - expect_cos(lv.vectors.col(1));
    return std::make_pair(w - target, dw);
  };
  std::uintmax_t iters = 100;
  const double EJ = bmt::newton_raphson_iterate(f, std::clamp(guess, lo, hi), lo, hi, 46, iters);
  if (std::abs(transmon_frequencies(spec, EJ).omega01 - target) > 1e-10 * target) {
    if (EJ <= lo * (1 + 1e-9)) throw out_of_range();
    throw CalibrationError("calibrate_EJ: E_J did not converge");
  }
  return EJ;
}

double flux_to_EJ(const TransmonSpec& spec, double flux) {
  const double arg = 2.0 * flux;
  if (arg < 0 || arg >= std::numbers::pi / 2)
    throw OutOfRangeError("flux_to_EJ: flux outside the first positive branch");
  return spec.E_J_max * std::cos(arg);
}

double EJ_to_flux(const TransmonSpec& spec, double E_J) {
  if (!(E_J > 0)) throw OutOfRangeError("EJ_to_flux: E_J must be positive");
  double r = E_J / spec.E_J_max;
  if (r > 1.0 + 1e-12) throw OutOfRangeError("EJ_to_flux: E_J above E_J_max");
  r = std::min(r, 1.0);
  return 0.5 * std::acos(r);
}

namespace {

// Loaded (E_C, E_J) with exact omega01 and alpha.
TransmonSpec calibrate_qubit(double omega, double alpha, int cutoff, const char* name) {
  auto E_J_for = [&](double E_C) {
    TransmonSpec t{E_C, 0.0, cutoff};
    t.E_J_max = 3.0 * (omega + E_C) * (omega + E_C) / (8.0 * E_C);
    t.E_J_max = calibrate_EJ(t, omega);
    return t;
  };
  auto f = [&](double E_C) {
    const auto t = E_J_for(E_C);
    return transmon_frequencies(t, t.E_J_max).alpha - alpha;
  };
  double a = 0.8 * -alpha, b = 1.3 * -alpha;
  double fa = f(a), fb = f(b);
  if (fa * fb > 0)
    throw CalibrationError(std::string("calibrate_device: cannot bracket E_C of qubit ") + name);
  std::uintmax_t iters = 100;
  auto r = bmt::toms748_solve(f, a, b, fa, fb, bmt::eps_tolerance<double>(48), iters);
  return E_J_for(0.5 * (r.first + r.second));
}

template <class F>
std::pair<double, double> minimize(F f, double lo, double hi, const char* what) {
  std::uintmax_t iters = 200;
  auto r = bmt::brent_find_minima(f, lo, hi, 26, iters);
  const double margin = 1e-3 * (hi - lo);
  if (r.first < lo + margin || r.first > hi - margin)
    throw CalibrationError(std::string(what) + ": no minimum bracketed in the sweep window");
  return r;
}

}  // namespace

Crossing min_splitting_01_10(const CoupledModel& model) {
  const auto& dev = model.device();
  const double wb = transmon_frequencies(dev.parked, dev.parked_EJ()).omega01;
  auto gap = [&](double w) {
    const auto s = model.spectrum(calibrate_EJ(dev.tunable, w));
    return s.energies(2) - s.energies(1);
  };
  if (dev.g_C == 0.0) return {wb, 0.0};
  const auto r = minimize(gap, wb - ghz(0.2), wb + ghz(0.2), "min_splitting_01_10");
  return {r.first, r.second};
}

DeviceSpec calibrate_device(const SpectralTargets& targets, const CalibrationOptions& opt) {
  targets.validate();
  DeviceSpec dev;
  dev.targets = targets;
  dev.tunable = calibrate_qubit(targets.omega_a, targets.alpha_a, opt.charge_cutoff, "a");
  dev.parked = calibrate_qubit(targets.omega_b, targets.alpha_b, opt.charge_cutoff, "b");
  if (targets.J1 == 0.0) return dev;

  // First guess from the charge matrix elements: J1 = g <0|n|1>_a <0|n|1>_b.
  auto n01 = [](const TransmonSpec& t) {
    const auto lv = transmon_levels(t, t.E_J_max, 2, true);
    return std::abs(lv.vectors.col(0).dot(charge_operator(t.charge_cutoff) * lv.vectors.col(1)));
  };
  const double g0 = targets.J1 / (n01(dev.tunable) * n01(dev.parked));
  auto f = [&](double g) {
    DeviceSpec d = dev;
    d.g_C = g;
    return min_splitting_01_10(CoupledModel(d, opt.local_levels)).gap - 2.0 * targets.J1;
  };
  double a = 0.7 * g0, b = 1.4 * g0;
  double fa = f(a), fb = f(b);
  if (fa * fb > 0) throw CalibrationError("calibrate_device: cannot bracket g_C");
  std::uintmax_t iters = 100;
  auto r = bmt::toms748_solve(f, a, b, fa, fb, bmt::eps_tolerance<double>(40), iters);
  dev.g_C = 0.5 * (r.first + r.second);
  if (dev.tunable.E_C - dev.g_C / 8 <= 0 || dev.parked.E_C - dev.g_C / 8 <= 0)
    throw CalibrationError("calibrate_device: coupling exceeds the charging energy");
  return dev;
}

OperatorMatrix build_coupled_hamiltonian(const DeviceSpec& dev, double E_J_a) {
  const int ma = dev.tunable.charge_cutoff, mb = dev.parked.charge_cutoff;
  const int na = 2 * ma + 1, nb = 2 * mb + 1;
  MatrixXcd H = MatrixXcd::Zero(na * nb, na * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) {
      const double qa = i - ma, qb = j - mb;
      const int k = i * nb + j;
      H(k, k) = 4.0 * dev.tunable.E_C * qa * qa + 4.0 * dev.parked.E_C * qb * qb - dev.g_C * qa * qb;
      if (i + 1 < na) H(k, k + nb) = H(k + nb, k) = -0.5 * E_J_a;
      if (j + 1 < nb) H(k, k + 1) = H(k + 1, k) = -0.5 * dev.parked_EJ();
    }
  return {H, Basis::product_charge};
}

OperatorMatrix effective_six_level(const DeviceSpec& dev, double omega_a) {
  const auto& t = dev.targets;
  MatrixXcd H = MatrixXcd::Zero(6, 6);
  H(1, 1) = t.omega_b;
  H(2, 2) = omega_a;
  H(3, 3) = 2 * t.omega_b - std::abs(t.alpha_b);
  H(4, 4) = omega_a + t.omega_b;
  H(5, 5) = 2 * omega_a - std::abs(t.alpha_a);
  H(1, 2) = H(2, 1) = t.J1;
  H(3, 4) = H(4, 3) = t.J2;
  H(4, 5) = H(5, 4) = t.J2;
  return {H, Basis::six_level};
}

CoupledModel::CoupledModel(DeviceSpec device, int levels) : device_(std::move(device)), K_(levels) {
  if (K_ < 3) throw std::invalid_argument("CoupledModel: need at least 3 levels per qubit");
  const auto& b = device_.parked;
  const auto lv = transmon_levels(b, device_.parked_EJ(), K_, true);
  E_b_ = lv.energies;
  N_b_ = lv.vectors.transpose() * charge_operator(b.charge_cutoff) * lv.vectors;
}

CoupledModel::LocalA CoupledModel::local_a(double E_J_a) const {
  const auto& a = device_.tunable;
  const auto lv = transmon_levels(a, E_J_a, K_, true);
  const int m = a.charge_cutoff, n = a.dim();
  // n and cos(phi) act on columns without forming the charge matrices.
  MatrixXd nP(n, K_), cP = MatrixXd::Zero(n, K_);
  for (int i = 0; i < n; ++i) nP.row(i) = double(i - m) * lv.vectors.row(i);
  for (int i = 0; i + 1 < n; ++i) {
    cP.row(i) += 0.5 * lv.vectors.row(i + 1);
    cP.row(i + 1) += 0.5 * lv.vectors.row(i);
  }
  return {lv.energies, lv.vectors.transpose() * nP, -(lv.vectors.transpose() * cP)};
}

namespace {

MatrixXd kron(const MatrixXd& A, const MatrixXd& B) {
  MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

}  // namespace

MatrixXd CoupledModel::hamiltonian(double E_J_a) const {
  const auto la = local_a(E_J_a);
  MatrixXd H = -device_.g_C * kron(la.N, N_b_);
  for (int i = 0; i < K_; ++i)
    for (int j = 0; j < K_; ++j) H(i * K_ + j, i * K_ + j) += la.E(i) + E_b_(j);
  return H;
}

RealSpectrum CoupledModel::spectrum(double E_J_a, bool vectors) const {
  return diagonalize_real(hamiltonian(E_J_a), vectors);
}

CoupledModel::Eval CoupledModel::evaluate(double E_J_a) const {
  const auto la = local_a(E_J_a);
  MatrixXd H = -device_.g_C * kron(la.N, N_b_);
  for (int i = 0; i < K_; ++i)
    for (int j = 0; j < K_; ++j) H(i * K_ + j, i * K_ + j) += la.E(i) + E_b_(j);
  return {diagonalize_real(H, true), kron(la.C, MatrixXd::Identity(K_, K_))};
}

std::vector<std::array<int, 2>> CoupledModel::labels(const MatrixXd& vectors) const {
  std::vector<std::array<int, 2>> out;
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index i;
    vectors.col(c).cwiseAbs().maxCoeff(&i);
    out.push_back({int(i) / K_, int(i) % K_});
  }
  return out;
}

Resonance find_resonance(const DeviceSpec& dev, const ResonanceOptions& opt) {
  const CoupledModel model(dev, opt.levels);
  const double wb = transmon_frequencies(dev.parked, dev.parked_EJ()).omega01;
  const double aa = transmon_frequencies(dev.tunable, dev.park_EJ()).alpha;
  const double centre = wb + std::abs(aa);
  auto gap = [&](double w) {
    const auto s = model.spectrum(calibrate_EJ(dev.tunable, w));
    return s.energies(5) - s.energies(4);
  };
  if (dev.g_C == 0.0) return {centre, 0.0, calibrate_EJ(dev.tunable, centre)};
  const auto r =
      minimize(gap, centre - opt.half_window, centre + opt.half_window, "find_resonance");
  return {r.first, r.second, calibrate_EJ(dev.tunable, r.first)};
}

SpectralTargets measure_device(const DeviceSpec& dev, int levels) {
  const CoupledModel model(dev, levels);
  const auto s = model.spectrum(dev.park_EJ(), true);
  const auto lab = model.labels(s.vectors);
  auto E = [&](int ia, int jb) {
    for (size_t k = 0; k < lab.size(); ++k)
      if (lab[k][0] == ia && lab[k][1] == jb) return s.energies(Eigen::Index(k));
    throw NumericalError("measure_device: state label not found");
  };
  SpectralTargets t;
  t.omega_a = E(1, 0) - E(0, 0);
  t.omega_b = E(0, 1) - E(0, 0);
  t.alpha_a = E(2, 0) - 2 * E(1, 0) + E(0, 0);
  t.alpha_b = E(0, 2) - 2 * E(0, 1) + E(0, 0);
  t.J1 = 0.5 * min_splitting_01_10(model).gap;
  t.J2 = 0.5 * find_resonance(dev, {.levels = levels}).gap;
  return t;
}

std::string describe(const DeviceSpec& d) {
  std::ostringstream os;
  os.precision(10);
  os << "E_C_a/2pi=" << to_ghz(d.tunable.E_C) << "GHz E_Jmax_a/2pi=" << to_ghz(d.tunable.E_J_max)
     << "GHz E_C_b/2pi=" << to_ghz(d.parked.E_C) << "GHz E_J_b/2pi=" << to_ghz(d.parked.E_J_max)
     << "GHz g_C/2pi=" << to_mhz(d.g_C) << "MHz cutoff=" << d.tunable.charge_cutoff;
  return os.str();
}

}  // namespace tcz
