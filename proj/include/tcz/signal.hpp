#pragma once

#include "tcz/controls.hpp"

#include <string>
#include <vector>

namespace tcz {

// One-pole line model H(w) = w_c / (w_c + i w) (FFT sign convention
// X(w) = sum x e^{-i w t}), i.e. y' = w_c (x - y).
struct FilterSpec {
  double omega_c = ghz(0.2);
  void validate() const;
};

struct AmplitudeSpectrum {
  VectorXd freq_ghz;   // non-negative frequencies
  VectorXd amplitude;  // |sum (x - mean) e^{-i w t}| dt
};

// Mean removed, zero-padded to pad_factor times the length.
AmplitudeSpectrum spectrum(const VectorXd& x, double dt, int pad_factor = 8);
AmplitudeSpectrum spectrum(const Pulse& pulse, int pad_factor = 8);  // flux trace

// Fraction of sum |X|^2 at frequencies above omega (rad/ns).
double spectral_weight_above(const AmplitudeSpectrum& s, double omega);

// Exact exponential update per sample with x linear between samples; y(0) = x(0).
VectorXd apply_filter(const VectorXd& x, double dt, const FilterSpec& f);

// Inverse of apply_filter's recursion, sample for sample.
VectorXd predistort_time(const VectorXd& y, double dt, const FilterSpec& f);
// x = F^-1[Y / H] on the signal padded with its end values for 6/w_c per side
// and mirrored, so the periodic extension is continuous.
VectorXd predistort_frequency(const VectorXd& y, double dt, const FilterSpec& f);

struct Predistortion {
  VectorXd x;
  std::string method;                 // "time" or "frequency"
  std::vector<std::string> warnings;
  double roundtrip_deviation = 0.0;   // max |apply_filter(x) - y| / range(y)
};
// Time-domain inverse; falls back to the frequency path (with a warning) if
// the round trip is not reproduced within 1e-6 of the range.
Predistortion predistort(const VectorXd& y, double dt, const FilterSpec& f);

// max |x - y| / (max y - min y); 0 for a constant y.
double overshoot(const VectorXd& x, const VectorXd& y);

}  // namespace tcz
