#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;  // stdout and stderr
};

std::string cli() {
  const char* p = std::getenv("TCZ_CLI");
  REQUIRE_MESSAGE(p != nullptr, "TCZ_CLI must point at the tcz binary");
  return p;
}

Result run(const std::string& args) {
  Result r;
  const std::string cmd = "\"" + cli() + "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("tcz_cli_test_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("self-test reports an ideal CZ") {
  const auto d = scratch("self");
  const auto r = run("simulate --self-test-cz -o " + d.string());
  CHECK(r.code == 0);
  const std::string report = slurp(d / "simulate" / "report.csv");
  CHECK(report.find("# config_hash ") != std::string::npos);
  CHECK(fs::exists(d / "simulate_manifest.json"));
}

TEST_CASE("configuration errors exit with code 2") {
  const auto d = scratch("errors");
  auto r = run("design -o " + d.string());
  CHECK(r.code == 2);
  CHECK(r.out.find("control.family") != std::string::npos);

  CHECK(run("sweep fig2 --T-list -o " + d.string()).code == 2);
  CHECK(run("distort --family invariant --T 2 --cutoff 0 -o " + d.string()).code == 2);
  CHECK(run("distort --family invariant --T 2 --cutoff -5 -o " + d.string()).code == 2);
  CHECK(run("simulate --family invariant --T 2 --T1 soon -o " + d.string()).code == 2);
  CHECK(run("design --family gaussian --T 2 -o " + d.string()).code == 2);
  CHECK(run("design --family invariant --T -1 -o " + d.string()).code == 2);
  CHECK(run("frobnicate").code == 2);

  const fs::path cfg = d / "bad.toml";
  fs::create_directories(d);
  std::ofstream(cfg) << "[control]\nfamily = \"invariant\"\nramp_time = 2\n";
  r = run("design -c " + cfg.string() + " -o " + d.string());
  CHECK(r.code == 2);
  CHECK(r.out.find("ramp_time") != std::string::npos);
  CHECK(run("design -c " + (d / "missing.toml").string()).code == 2);
}

TEST_CASE("design output: duration, hash, determinism") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  CHECK(run("design --family invariant --T 5 --t-wait 10 --plot -o " + a.string()).code == 0);
  CHECK(run("design --family invariant --T 5 --t-wait 10 --plot -o " + b.string()).code == 0);
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().filename().string().ends_with("_manifest.json")) continue;
    ++files;
    const std::string content = slurp(e.path());
    CHECK(content == slurp(b / fs::relative(e.path(), a)));
    CHECK(content.find("config_hash") != std::string::npos);
  }
  CHECK(files == 4);

  // Last sample of the gate sits at 2T + t_wait.
  std::istringstream gate(slurp(a / "design" / "gate.csv"));
  std::string line, last;
  while (std::getline(gate, line))
    if (!line.empty() && line[0] != '#') last = line;
  CHECK(std::stod(last.substr(0, last.find(','))) == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("config file, flag override and output directory from the environment") {
  const auto d = scratch("env");
  fs::create_directories(d);
  const fs::path cfg = d / "run.toml";
  std::ofstream(cfg) << "[control]\nfamily = \"linear\"\nT_ns = 3.0\nt_wait_ns = 4.0\n";
  const auto out = d / "out";
  const auto r = run("design -c " + cfg.string() + " --T 2 -o " + out.string());
  CHECK(r.code == 0);
  CHECK(slurp(out / "design" / "gate.csv").find("family linear T=2 ns t_wait=4 ns") != std::string::npos);

  const auto envdir = d / "from_env";
  const std::string cmd = "TCZ_OUTPUT_DIR=" + envdir.string() + " \"" + cli() + "\" design --family linear --T 1 > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(envdir / "design" / "gate.csv"));
}
