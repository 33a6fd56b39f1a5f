#include "tcz/calibration.hpp"
#include "tcz/config.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>

using namespace tcz;

namespace {

const GateSetup& setup() {
  static const GateSetup s(calibrate_device(SpectralTargets::reference()));
  return s;
}

GateControl control(Family f, double T) {
  GateControl c;
  c.family = f;
  c.T = T;
  return c;
}

}  // namespace

TEST_CASE("resonance and setup") {
  const auto& s = setup();
  CHECK(to_ghz(s.resonance.omega_a_star) == doctest::Approx(6.028).epsilon(2e-3));
  CHECK(s.destination(mhz(1.0)) - s.destination(0.0) == doctest::Approx(mhz(1.0)));
  CHECK(s.omega_park > s.resonance.omega_a_star);
}

TEST_CASE("slow ramp follows the pseudospin eigenstate") {
  // Adiabatic limit: |11> lands on one dressed state of the pair.
  const RampPropagation rp(setup(), design_down_ramp(setup(), control(Family::slepian, 100.0), 0.0));
  const auto& a = rp.analysis();
  CHECK(std::min(std::norm(a.alpha), std::norm(a.beta)) < 1e-4);
  CHECK(!a.leaky);
  CHECK(a.gap == doctest::Approx(2 * mhz(20.2)).epsilon(0.1));
}

TEST_CASE("wait-time closed form matches direct propagation") {
  const Pulse down = design_down_ramp(setup(), control(Family::invariant, 2.0), 0.0);
  const RampPropagation rp(setup(), down);
  for (double tw : {0.0, 7.3, 20.0}) {
    const Pulse g = assemble_gate_pulse(down, tw);
    const auto direct = project_computational(propagate_unitary(setup().basis, g), setup().basis).block;
    CHECK((rp.block(rp.quantized_wait(tw)) - direct).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(rp.quantized_wait(tw) == doctest::Approx(g.param("t_wait")));
  }
}

TEST_CASE("optimization improves on its grid and is deterministic") {
  OptimizeOptions opt;
  const auto a = optimize_gate(setup(), control(Family::invariant, 2.0), opt);
  const auto b = optimize_gate(setup(), control(Family::invariant, 2.0), opt);
  const double err = 1 - a.report.F_avg_cz;
  CHECK(err <= a.coarse_best_error);
  CHECK(err < 1e-3);
  CHECK(a.T_gate == doctest::Approx(2 * a.T + a.t_wait));
  CHECK(std::abs(a.detuning) <= setup().window);
  CHECK(a.t_wait == b.t_wait);
  CHECK(a.detuning == b.detuning);
  CHECK(a.report.F_avg_cz == b.report.F_avg_cz);

  const auto fixed = optimize_fixed_duration(setup(), control(Family::invariant, 2.0), 30.0, opt);
  CHECK(1 - fixed.report.F_avg_cz <= fixed.coarse_best_error);
  CHECK(std::abs(fixed.T_gate - 30.0) < 2 * (fixed.T / (control(Family::invariant, 2.0).samples - 1)) + 1e-9);
}

TEST_CASE("single-transmon ramp errors") {
  CHECK(single_transmon_ramp_error(Family::invariant, 1.0, setup()) < 1e-6);
  CHECK(single_transmon_ramp_error(Family::invariant, 5.0, setup()) < 1e-6);
  for (Family f : {Family::linear, Family::faquad, Family::slepian})
    CHECK(single_transmon_ramp_error(f, 1.0, setup()) > 10 * single_transmon_ramp_error(Family::invariant, 1.0, setup()));
}

TEST_CASE("lossy objective equals the channel report") {
  const auto seed = optimize_gate(setup(), control(Family::invariant, 2.0));
  LindbladSpec spec;
  spec.T1_us = spec.T2_star_us = 17.0;
  OptimizeOptions opt;
  opt.lossy_evals = 4;
  const auto r = refine_lossy(setup(), control(Family::invariant, 2.0), seed, spec, opt);
  const Pulse g = assemble_gate_pulse(design_down_ramp(setup(), control(Family::invariant, 2.0), r.detuning), r.t_wait);
  CHECK(lossy_report(setup(), g, spec).F_avg_cz == doctest::Approx(r.report.F_avg_cz).epsilon(1e-10));
  CHECK(r.report.F_avg_cz < seed.report.F_avg_cz);
}

TEST_CASE("sweep curves") {
  SweepCurve c;
  c.abscissa = "x";
  c.x = {1, 2, 3};
  c.names = {"a"};
  c.series = {{4, 5, 6}};
  CHECK_NOTHROW(c.validate());
  const std::string csv = c.csv("note");
  CHECK(csv.find("# note") == 0);
  CHECK(csv.find("x,a\n") != std::string::npos);
  c.series[0].pop_back();
  CHECK_THROWS(c.validate());
  c.series[0] = {4, 5, 6};
  c.x = {1, 3, 2};
  CHECK_THROWS(c.validate());
}

TEST_CASE("parallel_for: every index once, first failure by index") {
  std::vector<std::atomic<int>> hits(50);
  parallel_for(50, 4, [&](int i) { hits[size_t(i)]++; });
  for (auto& h : hits) CHECK(h.load() == 1);

  try {
    parallel_for(20, 4, [](int i) {
      if (i == 13) throw std::runtime_error("thirteen");
      if (i == 5) throw std::runtime_error("five");
    });
    FAIL("no exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "five");
  }
}

TEST_CASE("configuration parsing") {
  const std::string base = "[control]\nfamily = \"invariant\"\nT_ns = 2.0\n";
  const RunConfig c = parse_config(base);
  CHECK(c.require_family() == Family::invariant);
  CHECK(c.require_T() == 2.0);
  CHECK(c.hash() == parse_config(base).hash());
  CHECK(c.hash().size() == 64);
  CHECK(c.hash() != parse_config("[control]\nfamily = \"invariant\"\nT_ns = 2.5\n").hash());
  CHECK(c.hash() == parse_config(base + "[output]\ndir = \"elsewhere\"\n").hash());
  CHECK(parse_config("[device]\nJ2_MHz = 21\n").targets.J2 == doctest::Approx(mhz(21.0)));
  CHECK(parse_config("[lindblad]\nT1_us = 17\nT2_star_us = 300\n").lindblad->T2_star_us == 300.0);

  CHECK_THROWS_AS(parse_config("[control]\nfamly = \"invariant\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[controls]\nfamily = \"invariant\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[control]\nT_ns = \"two\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[control]\nfamily = \"gaussian\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sweep]\nT_ns = [2.0, 1.0]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[filter]\ncutoff_MHz = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[lindblad]\nT1_us = 17\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[control\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig{}.require_family(), ConfigError);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
