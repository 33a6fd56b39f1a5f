#include "tcz/calibration.hpp"
#include "tcz/signal.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

using namespace tcz;

namespace {

VectorXd sampled(int n, double dt, const std::function<double(double)>& f) {
  VectorXd x(n);
  for (int k = 0; k < n; ++k) x(k) = f(k * dt);
  return x;
}

double range(const VectorXd& y) { return y.maxCoeff() - y.minCoeff(); }

// Smooth switch from 0 to 1 over [t0, t0 + w].
double smooth_step(double t, double t0, double w) {
  const double u = std::clamp((t - t0) / w, 0.0, 1.0);
  return u * u * u * (10 - 15 * u + 6 * u * u);
}

}  // namespace

TEST_CASE("filter: DC gain, corner response, step response") {
  const FilterSpec f;
  const double dt = 0.005;
  const VectorXd c = VectorXd::Constant(1000, 0.37);
  CHECK((apply_filter(c, dt, f).array() - 0.37).abs().maxCoeff() < 1e-15);

  // Sinusoid at w_c: amplitude 1/sqrt(2), lag pi/4 once transients are gone.
  const double w = f.omega_c;
  const int n = int(60.0 / dt);
  const VectorXd y = apply_filter(sampled(n, dt, [&](double t) { return std::sin(w * t); }), dt, f);
  for (double t : {45.0, 50.0, 55.0}) {
    const int k = int(std::lround(t / dt));
    const double want = std::sin(w * k * dt - std::numbers::pi / 4) / std::sqrt(2.0);
    CHECK(std::abs(y(k) - want) < 0.01 / std::sqrt(2.0));
  }

  // Step: y = 1 - exp(-w_c t) exactly under the linear-interpolation model.
  VectorXd s = VectorXd::Ones(4000);
  s(0) = 0.0;
  s(1) = 0.0;
  const VectorXd ys = apply_filter(s, dt, f);
  double worst = 0;
  for (int k = 2; k < 4000; ++k) {
    // Input ramps 0 -> 1 over [dt, 2 dt]: closed-form response of the ODE.
    const double t = k * dt, a = t - dt, b = t - 2 * dt;
    const double ramp = (a - (1 - std::exp(-w * a)) / w - (b - (1 - std::exp(-w * b)) / w)) / dt;
    worst = std::max(worst, std::abs(ys(k) - ramp));
  }
  CHECK(worst < 1e-6);
  CHECK_THROWS_AS(apply_filter(c, dt, FilterSpec{0.0}), ConfigError);
  CHECK_THROWS_AS(apply_filter(c, dt, FilterSpec{-1.0}), ConfigError);
}

TEST_CASE("filter linearity") {
  std::mt19937 rng(11);
  std::normal_distribution<double> g;
  VectorXd a(500), b(500);
  for (int k = 0; k < 500; ++k) a(k) = g(rng), b(k) = g(rng);
  const FilterSpec f;
  const VectorXd lhs = apply_filter(2.5 * a - 0.7 * b, 0.01, f);
  const VectorXd rhs = 2.5 * apply_filter(a, 0.01, f) - 0.7 * apply_filter(b, 0.01, f);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pre-distortion paths") {
  const FilterSpec f;
  const double dt = 0.01;
  CHECK((predistort(VectorXd::Constant(300, 1.5), dt, f).x.array() - 1.5).abs().maxCoeff() < 1e-12);

  const int n = 4000;
  const VectorXd y = sampled(n, dt, [](double t) { return 0.3 * smooth_step(t, 5, 4) - 0.3 * smooth_step(t, 25, 4); });
  const auto p = predistort(y, dt, f);
  CHECK(p.method == "time");
  CHECK(p.warnings.empty());
  CHECK(p.roundtrip_deviation < 1e-6);
  CHECK((apply_filter(p.x, dt, f) - y).cwiseAbs().maxCoeff() < 1e-6 * range(y));

  // Continuous-time inverse x = y + y'/w_c as an oracle.
  VectorXd cont(n);
  for (int k = 0; k < n; ++k) {
    const double d = (k == 0 || k == n - 1) ? 0.0 : (y(k + 1) - y(k - 1)) / (2 * dt);
    cont(k) = y(k) + d / f.omega_c;
  }
  CHECK((p.x - cont).cwiseAbs().maxCoeff() < 1e-3 * range(y));

  const VectorXd xf = predistort_frequency(y, dt, f);
  CHECK((xf - cont).cwiseAbs().maxCoeff() < 1e-3 * range(y));
  CHECK((apply_filter(xf, dt, f) - y).cwiseAbs().maxCoeff() < 1e-3 * range(y));

  // Time and frequency paths agree within 1e-6 of the range on a smooth pulse.
  const double fine = 0.002;
  const int m = int(30.0 / fine);
  const VectorXd z = sampled(m, fine, [](double t) { return 0.3 * smooth_step(t, 5, 8) - 0.3 * smooth_step(t, 17, 8); });
  CHECK((predistort_time(z, fine, f) - predistort_frequency(z, fine, f)).cwiseAbs().maxCoeff() < 1e-6 * range(z));

  // A kink is reported, not hidden.
  VectorXd k = VectorXd::Zero(200);
  for (int i = 100; i < 200; ++i) k(i) = 0.01 * (i - 100);
  const auto pk = predistort(k, dt, f);
  CHECK(!pk.warnings.empty());
  CHECK(pk.roundtrip_deviation < 1e-6);
}

TEST_CASE("spectrum") {
  const double dt = 0.01;
  const auto flat = spectrum(VectorXd::Constant(512, 2.0), dt);
  CHECK(flat.amplitude.cwiseAbs().maxCoeff() < 1e-12);

  const double f0 = 0.4;  // GHz
  const auto s = spectrum(sampled(4096, dt, [&](double t) { return std::cos(two_pi * f0 * t); }), dt);
  Eigen::Index k;
  s.amplitude.maxCoeff(&k);
  CHECK(std::abs(s.freq_ghz(k) - f0) < 1.0 / (4096 * 8 * dt) + 1e-12);
  CHECK(s.freq_ghz(1) == doctest::Approx(1.0 / (4096 * 8 * dt)));

  // Filtering never adds weight above the corner.
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  VectorXd x(2048);
  for (auto& v : x) v = g(rng);
  const FilterSpec fs;
  const auto a = spectrum(x, dt), b = spectrum(apply_filter(x, dt, fs), dt);
  for (Eigen::Index i = 0; i < a.amplitude.size(); ++i)
    if (a.freq_ghz(i) > to_ghz(fs.omega_c)) CHECK(b.amplitude(i) <= a.amplitude(i) * 1.0000001 + 1e-12);
}

TEST_CASE("smooth controls carry less weight above the cut-off") {
  const GateSetup setup(calibrate_device(SpectralTargets::reference()));
  const FilterSpec f;
  std::map<Family, double> w, over;
  for (Family fam : all_families) {
    GateControl c;
    c.family = fam;
    c.T = 5.0;
    const Pulse p = assemble_gate_pulse(design_down_ramp(setup, c, 0.0), 20.0);
    w[fam] = spectral_weight_above(spectrum(p), f.omega_c);
    const auto pre = predistort(p.flux, p.dt, f);
    CHECK(pre.roundtrip_deviation < 1e-6);
    over[fam] = overshoot(pre.x, p.flux);
  }
  for (Family smooth : {Family::linear, Family::invariant, Family::variational})
    for (Family sharp : {Family::faquad, Family::slepian}) {
      CHECK(w[smooth] < w[sharp]);
      CHECK(over[smooth] < over[sharp]);
    }
  CHECK(overshoot(VectorXd::Constant(5, 1.0), VectorXd::Constant(5, 1.0)) == 0.0);
}
