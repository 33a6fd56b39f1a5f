#include "tcz/config.hpp"

#include <openssl/evp.h>
#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace tcz {

namespace {

std::string where(const std::string& origin, const std::string& key) { return origin + ": key '" + key + "'"; }

class Reader {
 public:
  Reader(const toml::table& root, std::string origin) : root_(root), origin_(std::move(origin)) {}

  // Rejects tables and keys outside the schema.
  void check_schema(const std::map<std::string, std::set<std::string>>& schema) const {
    for (const auto& [k, v] : root_) {
      const std::string section(k.str());
      const auto it = schema.find(section);
      if (it == schema.end()) throw ConfigError(where(origin_, section) + " is not a known section");
      const auto* t = v.as_table();
      if (!t) throw ConfigError(where(origin_, section) + " must be a table");
      for (const auto& [kk, vv] : *t) {
        const std::string key(kk.str());
        if (!it->second.count(key)) throw ConfigError(where(origin_, section + "." + key) + " is not a known key");
      }
    }
  }

  const toml::node* find(const std::string& section, const std::string& key) const {
    const auto* t = root_[section].as_table();
    return t ? t->get(key) : nullptr;
  }

  bool number(const std::string& s, const std::string& k, double& out, double scale = 1.0) const {
    const auto* n = find(s, k);
    if (!n) return false;
    out = scale * as_number(*n, s + "." + k);
    return true;
  }

  bool integer(const std::string& s, const std::string& k, int& out) const {
    const auto* n = find(s, k);
    if (!n) return false;
    const auto v = n->value<int64_t>();
    if (!n->is_integer() || !v) throw ConfigError(where(origin_, s + "." + k) + " must be an integer");
    out = int(*v);
    return true;
  }

  bool boolean(const std::string& s, const std::string& k, bool& out) const {
    const auto* n = find(s, k);
    if (!n) return false;
    if (!n->is_boolean()) throw ConfigError(where(origin_, s + "." + k) + " must be true or false");
    out = *n->value<bool>();
    return true;
  }

  bool string(const std::string& s, const std::string& k, std::string& out) const {
    const auto* n = find(s, k);
    if (!n) return false;
    if (!n->is_string()) throw ConfigError(where(origin_, s + "." + k) + " must be a string");
    out = *n->value<std::string>();
    return true;
  }

  bool numbers(const std::string& s, const std::string& k, std::vector<double>& out, double scale = 1.0) const {
    const auto* n = find(s, k);
    if (!n) return false;
    const auto* a = n->as_array();
    if (!a) throw ConfigError(where(origin_, s + "." + k) + " must be an array of numbers");
    out.clear();
    for (const auto& e : *a) out.push_back(scale * as_number(e, s + "." + k));
    return true;
  }

  bool strings(const std::string& s, const std::string& k, std::vector<std::string>& out) const {
    const auto* n = find(s, k);
    if (!n) return false;
    const auto* a = n->as_array();
    if (!a) throw ConfigError(where(origin_, s + "." + k) + " must be an array of strings");
    out.clear();
    for (const auto& e : *a) {
      if (!e.is_string()) throw ConfigError(where(origin_, s + "." + k) + " must be an array of strings");
      out.push_back(*e.value<std::string>());
    }
    return true;
  }

  bool has_section(const std::string& s) const { return root_[s].as_table() != nullptr; }

 private:
  double as_number(const toml::node& n, const std::string& key) const {
    if (!n.is_number()) throw ConfigError(where(origin_, key) + " must be a number");
    const double v = *n.value<double>();
    if (!std::isfinite(v)) throw ConfigError(where(origin_, key) + " must be finite");
    return v;
  }

  const toml::table& root_;
  std::string origin_;
};

const std::map<std::string, std::set<std::string>> schema = {
    {"device", {"omega_a_GHz", "omega_b_GHz", "alpha_a_GHz", "alpha_b_GHz", "J1_MHz", "J2_MHz", "charge_cutoff"}},
    {"control",
     {"family", "T_ns", "samples", "t_wait_ns", "detuning_MHz", "n_max", "order", "invariant_free",
      "slepian_free"}},
    {"lindblad", {"T1_us", "T2_star_us", "apply_a", "apply_b"}},
    {"filter", {"cutoff_MHz"}},
    {"integrator",
     {"rel_tol", "abs_tol", "max_step_ns", "truncation", "transmon_levels", "subspace_states",
      "dissipator_step_ns"}},
    {"optimize",
     {"t_wait_max_ns", "max_evals", "tol_wait_ns", "tol_detuning_kHz", "optimize_slepian", "lossy_evals",
      "window_MHz"}},
    {"sweep", {"T_ns", "families", "t_wait_ns", "detuning_MHz"}},
    {"output", {"dir"}},
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(os.str());
  }
  const Reader r(root, origin);
  r.check_schema(schema);

  RunConfig c;
  auto& t = c.targets;
  r.number("device", "omega_a_GHz", t.omega_a, two_pi);
  r.number("device", "omega_b_GHz", t.omega_b, two_pi);
  r.number("device", "alpha_a_GHz", t.alpha_a, two_pi);
  r.number("device", "alpha_b_GHz", t.alpha_b, two_pi);
  r.number("device", "J1_MHz", t.J1, mhz(1.0));
  r.number("device", "J2_MHz", t.J2, mhz(1.0));
  r.integer("device", "charge_cutoff", c.charge_cutoff);

  std::string fam;
  if (r.string("control", "family", fam)) c.family = family_from_string(fam);
  double T;
  if (r.number("control", "T_ns", T)) c.T = T;
  r.integer("control", "samples", c.samples);
  r.number("control", "t_wait_ns", c.t_wait);
  r.number("control", "detuning_MHz", c.detuning, mhz(1.0));
  r.integer("control", "n_max", c.invariant.n_max);
  r.integer("control", "order", c.invariant.order);
  r.numbers("control", "invariant_free", c.invariant.free);
  r.numbers("control", "slepian_free", c.slepian_free);

  if (r.has_section("lindblad")) {
    LindbladSpec ls;
    if (!r.number("lindblad", "T1_us", ls.T1_us)) throw ConfigError(where(origin, "lindblad.T1_us") + " is required");
    if (!r.number("lindblad", "T2_star_us", ls.T2_star_us))
      throw ConfigError(where(origin, "lindblad.T2_star_us") + " is required");
    r.boolean("lindblad", "apply_a", ls.apply_a);
    r.boolean("lindblad", "apply_b", ls.apply_b);
    c.lindblad = ls;
  }
  r.number("filter", "cutoff_MHz", c.filter.omega_c, mhz(1.0));

  auto& p = c.propagation;
  r.number("integrator", "rel_tol", p.rel_tol);
  r.number("integrator", "abs_tol", p.abs_tol);
  r.number("integrator", "max_step_ns", p.max_step);
  r.integer("integrator", "truncation", p.truncation);
  r.integer("integrator", "transmon_levels", p.transmon_levels);
  r.integer("integrator", "subspace_states", p.subspace_states);
  r.number("integrator", "dissipator_step_ns", p.dissipator_step);

  auto& o = c.optimize;
  r.number("optimize", "t_wait_max_ns", o.t_wait_max);
  r.integer("optimize", "max_evals", o.max_evals);
  r.number("optimize", "tol_wait_ns", o.tol_wait);
  r.number("optimize", "tol_detuning_kHz", o.tol_detuning, khz(1.0));
  r.boolean("optimize", "optimize_slepian", o.optimize_slepian);
  r.integer("optimize", "lossy_evals", o.lossy_evals);
  r.number("optimize", "window_MHz", c.window, mhz(1.0));

  r.numbers("sweep", "T_ns", c.sweep_T);
  std::vector<std::string> fams;
  if (r.strings("sweep", "families", fams))
    for (const auto& f : fams)
      if (f != "all") c.sweep_families.push_back(family_from_string(f));
  r.numbers("sweep", "t_wait_ns", c.sweep_t_wait);
  r.numbers("sweep", "detuning_MHz", c.sweep_detuning, mhz(1.0));
  r.string("output", "dir", c.output_dir);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void RunConfig::validate() const {
  targets.validate();
  if (charge_cutoff < 10) throw ConfigError("device.charge_cutoff must be at least 10");
  if (T && !(*T > 0)) throw ConfigError("control.T_ns must be positive");
  if (samples < 64) throw ConfigError("control.samples must be at least 64");
  if (!(t_wait >= 0)) throw ConfigError("control.t_wait_ns must be non-negative");
  if (!(std::abs(detuning) <= window)) throw ConfigError("control.detuning_MHz outside the optimize.window_MHz band");
  invariant.validate();
  if (slepian_free.empty()) throw ConfigError("control.slepian_free needs at least one entry");
  if (lindblad) lindblad->validate();
  filter.validate();
  propagation.validate();
  if (!(optimize.t_wait_max > 0)) throw ConfigError("optimize.t_wait_max_ns must be positive");
  if (optimize.max_evals < 10) throw ConfigError("optimize.max_evals must be at least 10");
  if (!(optimize.tol_wait > 0)) throw ConfigError("optimize.tol_wait_ns must be positive");
  if (!(optimize.tol_detuning > 0)) throw ConfigError("optimize.tol_detuning_kHz must be positive");
  if (optimize.lossy_evals < 1) throw ConfigError("optimize.lossy_evals must be positive");
  if (!(window > 0 && window < ghz(0.2))) throw ConfigError("optimize.window_MHz must lie in (0, 200)");
  for (size_t i = 0; i < sweep_T.size(); ++i) {
    if (!(sweep_T[i] > 0)) throw ConfigError("sweep.T_ns entries must be positive");
    if (i && !(sweep_T[i] > sweep_T[i - 1])) throw ConfigError("sweep.T_ns must be strictly increasing");
  }
  for (size_t i = 0; i < sweep_t_wait.size(); ++i) {
    if (!(sweep_t_wait[i] >= 0)) throw ConfigError("sweep.t_wait_ns entries must be non-negative");
    if (i && !(sweep_t_wait[i] > sweep_t_wait[i - 1])) throw ConfigError("sweep.t_wait_ns must be strictly increasing");
  }
  for (size_t i = 0; i < sweep_detuning.size(); ++i) {
    if (!(std::abs(sweep_detuning[i]) <= window)) throw ConfigError("sweep.detuning_MHz outside the window");
    if (i && !(sweep_detuning[i] > sweep_detuning[i - 1]))
      throw ConfigError("sweep.detuning_MHz must be strictly increasing");
  }
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
}

Family RunConfig::require_family() const {
  if (!family) throw ConfigError("missing required key 'control.family'");
  return *family;
}

double RunConfig::require_T() const {
  if (!T) throw ConfigError("missing required key 'control.T_ns'");
  return *T;
}

GateControl RunConfig::control() const {
  GateControl g;
  g.family = require_family();
  g.T = require_T();
  g.samples = samples;
  g.invariant = invariant;
  g.slepian_free = slepian_free;
  return g;
}

std::vector<Family> RunConfig::families() const {
  if (!sweep_families.empty()) return sweep_families;
  return {std::begin(all_families), std::end(all_families)};
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os << std::setprecision(17);
  auto list = [&](const char* k, const std::vector<double>& v) {
    os << k << " =";
    for (double x : v) os << ' ' << x;
    os << '\n';
  };
  os << "targets = " << targets.omega_a << ' ' << targets.omega_b << ' ' << targets.alpha_a << ' ' << targets.alpha_b
     << ' ' << targets.J1 << ' ' << targets.J2 << '\n';
  os << "charge_cutoff = " << charge_cutoff << '\n';
  os << "family = " << (family ? to_string(*family) : "-") << '\n';
  os << "T = ";
  if (T)
    os << *T;
  else
    os << '-';
  os << '\n' << "samples = " << samples << "\nt_wait = " << t_wait << "\ndetuning = " << detuning << '\n';
  os << "invariant = " << invariant.n_max << ' ' << invariant.order << '\n';
  list("invariant_free", invariant.free);
  list("slepian_free", slepian_free);
  if (lindblad)
    os << "lindblad = " << lindblad->T1_us << ' ' << lindblad->T2_star_us << ' ' << lindblad->apply_a << ' '
       << lindblad->apply_b << '\n';
  else
    os << "lindblad = -\n";
  os << "filter = " << filter.omega_c << '\n';
  const auto& p = propagation;
  os << "integrator = " << p.rel_tol << ' ' << p.abs_tol << ' ' << p.max_step << ' ' << p.truncation << ' '
     << p.transmon_levels << ' ' << p.subspace_states << ' ' << p.dissipator_step << '\n';
  const auto& o = optimize;
  os << "optimize = " << o.t_wait_max << ' ' << o.max_evals << ' ' << o.tol_wait << ' ' << o.tol_detuning << ' '
     << o.optimize_slepian << ' ' << o.lossy_evals << ' ' << window << '\n';
  list("sweep_T", sweep_T);
  os << "sweep_families =";
  for (Family f : families()) os << ' ' << to_string(f);
  os << '\n';
  list("sweep_t_wait", sweep_t_wait);
  list("sweep_detuning", sweep_detuning);
  return os.str();
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("sha256: digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string RunConfig::hash() const { return sha256_hex(canonical()); }

}  // namespace tcz
