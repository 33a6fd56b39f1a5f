#pragma once

#include "tcz/calibration.hpp"
#include "tcz/signal.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tcz {

// Everything a run depends on, in internal units. The file format is TOML
// with GHz/MHz/kHz/ns/us at the boundary; unknown keys are rejected.
struct RunConfig {
  SpectralTargets targets = SpectralTargets::reference();
  int charge_cutoff = 12;

  std::optional<Family> family;  // required by commands that build one pulse
  std::optional<double> T;       // ns
  int samples = 2048;
  double t_wait = 0.0;
  double detuning = 0.0;
  InvariantParams invariant;
  std::vector<double> slepian_free{0.0};

  std::optional<LindbladSpec> lindblad;
  FilterSpec filter;
  PropagationConfig propagation;
  OptimizeOptions optimize;
  double window = mhz(15.0);

  std::vector<double> sweep_T;        // ns
  std::vector<Family> sweep_families; // empty: all
  std::vector<double> sweep_t_wait;   // ns
  std::vector<double> sweep_detuning; // rad/ns

  std::string output_dir;  // not part of the hash
  int jobs = 1;            // not part of the hash

  void validate() const;
  // Fixed-order dump of every hashed value; identical runs give identical text.
  std::string canonical() const;
  std::string hash() const;  // SHA-256 of canonical(), hex
  Family require_family() const;
  double require_T() const;
  GateControl control() const;
  std::vector<Family> families() const;
};

RunConfig parse_config(const std::string& toml_text, const std::string& origin = "<string>");
RunConfig load_config(const std::string& path);

std::string sha256_hex(const std::string& data);

}  // namespace tcz
