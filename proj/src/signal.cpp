#include "tcz/signal.hpp"

#include <fftw3.h>

#include <cmath>
#include <sstream>

namespace tcz {

void FilterSpec::validate() const {
  if (!(omega_c > 0) || !std::isfinite(omega_c)) throw ConfigError("filter: omega_c must be positive");
}

namespace {

void require_signal(const VectorXd& x, double dt, const char* who) {
  if (x.size() < 2) throw std::invalid_argument(std::string(who) + ": need at least two samples");
  if (!(dt > 0)) throw std::invalid_argument(std::string(who) + ": dt must be positive");
}

// Forward real FFT of the whole vector.
VectorXcd rfft(const VectorXd& x) {
  const int n = int(x.size());
  VectorXd in = x;
  VectorXcd out(n / 2 + 1);
  fftw_plan p = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  fftw_execute(p);
  fftw_destroy_plan(p);
  return out;
}

VectorXd irfft(VectorXcd X, int n) {
  VectorXd out(n);
  fftw_plan p = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(X.data()), out.data(), FFTW_ESTIMATE);
  fftw_execute(p);
  fftw_destroy_plan(p);
  return out / double(n);
}

double range_of(const VectorXd& y) { return y.maxCoeff() - y.minCoeff(); }

}  // namespace

AmplitudeSpectrum spectrum(const VectorXd& x, double dt, int pad_factor) {
  require_signal(x, dt, "spectrum");
  if (pad_factor < 1) throw std::invalid_argument("spectrum: pad factor must be >= 1");
  const Eigen::Index n = x.size() * pad_factor;
  VectorXd padded = VectorXd::Zero(n);
  padded.head(x.size()) = x.array() - x.mean();
  const VectorXcd X = rfft(padded);
  AmplitudeSpectrum s;
  s.freq_ghz.resize(X.size());
  s.amplitude = X.cwiseAbs() * dt;
  for (Eigen::Index k = 0; k < X.size(); ++k) s.freq_ghz(k) = double(k) / (double(n) * dt);
  return s;
}

AmplitudeSpectrum spectrum(const Pulse& pulse, int pad_factor) { return spectrum(pulse.flux, pulse.dt, pad_factor); }

double spectral_weight_above(const AmplitudeSpectrum& s, double omega) {
  const double f = to_ghz(omega);
  double above = 0.0, total = 0.0;
  for (Eigen::Index k = 0; k < s.amplitude.size(); ++k) {
    const double w = s.amplitude(k) * s.amplitude(k);
    total += w;
    if (s.freq_ghz(k) > f) above += w;
  }
  return total > 0 ? above / total : 0.0;
}

namespace {

// y_{k+1} = E y_k + a0 x_k + a1 x_{k+1} for the exact one-pole update.
struct Recurrence {
  double E, a0, a1;
  Recurrence(double dt, const FilterSpec& f) {
    const double z = f.omega_c * dt;
    E = std::exp(-z);
    const double p = -std::expm1(-z);
    a1 = 1.0 - p / z;
    a0 = p - a1;
  }
};

}  // namespace

VectorXd apply_filter(const VectorXd& x, double dt, const FilterSpec& f) {
  f.validate();
  require_signal(x, dt, "apply_filter");
  const Recurrence r(dt, f);
  VectorXd y(x.size());
  y(0) = x(0);
  for (Eigen::Index k = 0; k + 1 < x.size(); ++k) y(k + 1) = r.E * y(k) + r.a0 * x(k) + r.a1 * x(k + 1);
  return y;
}

VectorXd predistort_time(const VectorXd& y, double dt, const FilterSpec& f) {
  f.validate();
  require_signal(y, dt, "predistort");
  const Recurrence r(dt, f);
  VectorXd x(y.size());
  x(0) = y(0);
  for (Eigen::Index k = 0; k + 1 < y.size(); ++k) x(k + 1) = (y(k + 1) - r.E * y(k) - r.a0 * x(k)) / r.a1;
  return x;
}

VectorXd predistort_frequency(const VectorXd& y, double dt, const FilterSpec& f) {
  f.validate();
  require_signal(y, dt, "predistort");
  const Eigen::Index n = y.size();
  const Eigen::Index pad = Eigen::Index(std::ceil(6.0 / f.omega_c / dt));
  const Eigen::Index m = n + 2 * pad;
  VectorXd ext(2 * m);
  ext.head(pad).setConstant(y(0));
  ext.segment(pad, n) = y;
  ext.segment(pad + n, pad).setConstant(y(n - 1));
  ext.tail(m) = ext.head(m).reverse();
  VectorXcd X = rfft(ext);
  const double L = double(2 * m) * dt;
  for (Eigen::Index k = 0; k < X.size(); ++k) {
    const double w = two_pi * double(k) / L;
    X(k) *= cplx(1.0, w / f.omega_c);
  }
  // The Nyquist bin of a real signal must stay real.
  if ((2 * m) % 2 == 0) X(X.size() - 1) = X(X.size() - 1).real();
  return irfft(std::move(X), int(2 * m)).segment(pad, n);
}

double overshoot(const VectorXd& x, const VectorXd& y) {
  if (x.size() != y.size()) throw std::invalid_argument("overshoot: length mismatch");
  const double r = range_of(y);
  if (r == 0) return 0.0;
  return (x - y).cwiseAbs().maxCoeff() / r;
}

Predistortion predistort(const VectorXd& y, double dt, const FilterSpec& f) {
  Predistortion out;
  out.x = predistort_time(y, dt, f);
  out.method = "time";
  const double r = range_of(y);
  auto deviation = [&](const VectorXd& x) {
    const double d = (apply_filter(x, dt, f) - y).cwiseAbs().maxCoeff();
    return r > 0 ? d / r : d;
  };
  if (y.size() > 2 && r > 0) {
    double kink = 0.0;
    for (Eigen::Index k = 1; k + 1 < y.size(); ++k) kink = std::max(kink, std::abs(y(k + 1) - 2 * y(k) + y(k - 1)));
    if (kink > 1e-2 * r) {
      std::ostringstream os;
      os << "input has kinks (max second difference " << kink / r << " of range); the pre-distorted signal follows them";
      out.warnings.push_back(os.str());
    }
  }
  out.roundtrip_deviation = deviation(out.x);
  if (!(out.roundtrip_deviation < 1e-6)) {
    std::ostringstream os;
    os << "time-domain inverse lost accuracy (round trip " << out.roundtrip_deviation << "), using the frequency path";
    out.warnings.push_back(os.str());
    out.x = predistort_frequency(y, dt, f);
    out.method = "frequency";
    out.roundtrip_deviation = deviation(out.x);
  }
  return out;
}

}  // namespace tcz
