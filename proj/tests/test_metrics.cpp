#include "tcz/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace tcz;

namespace {

std::mt19937 rng(2024);

// Haar unitary through QR of a complex Gaussian matrix.
MatrixXcd random_unitary(int n) {
  std::normal_distribution<double> g;
  MatrixXcd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<MatrixXcd> qr(A);
  MatrixXcd Q = qr.householderQ();
  const MatrixXcd R = qr.matrixQR();
  for (int j = 0; j < n; ++j) Q.col(j) *= std::polar(1.0, std::arg(R(j, j)));
  return Q;
}

// exp(i eps H) times a random diagonal: close to a phase gate.
MatrixXcd near_diagonal(int n, double eps) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> ph(-std::numbers::pi, std::numbers::pi);
  MatrixXcd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cplx(g(rng), g(rng));
  const MatrixXcd H = 0.5 * (A + A.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(H);
  VectorXcd e(n);
  for (int i = 0; i < n; ++i) e(i) = std::polar(1.0, eps * es.eigenvalues()(i));
  VectorXcd d(n);
  for (int i = 0; i < n; ++i) d(i) = std::polar(1.0, ph(rng));
  return es.eigenvectors() * e.asDiagonal() * es.eigenvectors().adjoint() * d.asDiagonal();
}

MatrixXcd local_z(double a, double b) {
  const double za[] = {1, 1, -1, -1}, zb[] = {1, -1, 1, -1};
  MatrixXcd D = MatrixXcd::Zero(4, 4);
  for (int s = 0; s < 4; ++s) D(s, s) = std::polar(1.0, a * za[s] + b * zb[s]);
  return D;
}

// Channel of conjugation by U on an n-level space; computational states at comp.
ChannelImage unitary_channel(const MatrixXcd& U, std::array<int, 4> comp) {
  ChannelImage ch;
  ch.comp = comp;
  for (int s = 0; s < 4; ++s)
    for (int sp = 0; sp < 4; ++sp)
      ch.images[size_t(4 * s + sp)] = U.col(comp[size_t(s)]) * U.col(comp[size_t(sp)]).adjoint();
  return ch;
}

MatrixXcd comp_block(const MatrixXcd& U, std::array<int, 4> c) {
  MatrixXcd b(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) b(i, j) = U(c[size_t(i)], c[size_t(j)]);
  return b;
}

const MatrixXcd CZ = PhaseGate::cz().matrix();

}  // namespace

TEST_CASE("leakage bookkeeping") {
  CHECK(leakage(MatrixXcd::Identity(4, 4)) == 0.0);
  MatrixXcd b = MatrixXcd::Identity(4, 4);
  b(2, 2) = std::sqrt(1 - 0.2);
  CHECK(leakage(b) == doctest::Approx(0.05).epsilon(1e-13));
  for (int k = 0; k < 50; ++k) {
    const MatrixXcd blk = random_unitary(6).topLeftCorner(4, 4);
    CHECK(leakage(blk) + blk.squaredNorm() / 4.0 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(leakage(blk) >= 0.0);
  }
}

TEST_CASE("phase extraction") {
  const auto cz = extract_phases(CZ);
  CHECK(cz.phi12 == doctest::Approx(std::numbers::pi / 4).epsilon(1e-14));
  CHECK(std::abs(cz.phi1) < 1e-14);
  const MatrixXcd Zmat = VectorXd(Eigen::Vector4d(1, 1, 1, -1)).cast<cplx>().asDiagonal();
  CHECK(entanglement_fidelity_unitary(Zmat, CZ) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(extract_phases(Zmat).phi12 == doctest::Approx(std::numbers::pi / 4).epsilon(1e-14));

  const auto id = extract_phases(MatrixXcd::Identity(4, 4));
  CHECK(std::abs(id.phi0) + std::abs(id.phi1) + std::abs(id.phi2) + std::abs(id.phi12) < 1e-15);

  const double a = 0.8;
  MatrixXcd loc = MatrixXcd::Identity(4, 4);
  loc(1, 1) = loc(3, 3) = std::polar(1.0, a);
  CHECK(std::abs(extract_phases(loc).phi12) < 1e-15);

  // Round trip through the matrix form for phases in the principal branch.
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int k = 0; k < 20; ++k) {
    const PhaseGate p{u(rng), u(rng), u(rng), u(rng)};
    const auto q = extract_phases(p.matrix());
    CHECK(q.phi0 == doctest::Approx(p.phi0).epsilon(1e-12));
    CHECK(q.phi1 == doctest::Approx(p.phi1).epsilon(1e-12));
    CHECK(q.phi2 == doctest::Approx(p.phi2).epsilon(1e-12));
    CHECK(q.phi12 == doctest::Approx(p.phi12).epsilon(1e-12));
  }
  CHECK_THROWS_AS(extract_phases(random_unitary(4)), NumericalError);
}

TEST_CASE("local correction") {
  const MatrixXcd Zmat = VectorXd(Eigen::Vector4d(1, 1, 1, -1)).cast<cplx>().asDiagonal();
  CHECK((local_correction(CZ).adjoint() * CZ - Zmat).cwiseAbs().maxCoeff() < 1e-14);
  std::uniform_real_distribution<double> ph(-std::numbers::pi, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int k = 0; k < 100; ++k) {
    // Near-CZ diagonal block dressed with arbitrary local Z rotations.
    VectorXcd d(4);
    for (int s = 0; s < 4; ++s) d(s) = std::polar(1.0, noise(rng));
    const MatrixXcd b = local_z(ph(rng), ph(rng)) * CZ * MatrixXcd(d.asDiagonal()) * std::polar(1.0, ph(rng));
    const MatrixXcd c = local_correction(b).adjoint() * b;
    CHECK(std::abs(std::arg(c(0, 0))) < 1e-12);
    CHECK(std::abs(std::arg(c(1, 1))) < 1e-12);
    CHECK(std::abs(std::arg(c(2, 2))) < 1e-12);
    // Entangling phase untouched.
    CHECK(std::abs(std::polar(1.0, 4 * extract_phases(c).phi12) - std::polar(1.0, 4 * extract_phases(b).phi12)) < 1e-12);
    CHECK(entanglement_fidelity_unitary(b, CZ, true) >= entanglement_fidelity_unitary(b, CZ, false) - 1e-15);
  }
}

TEST_CASE("entanglement and average fidelity") {
  CHECK(entanglement_fidelity_unitary(CZ, CZ) == doctest::Approx(1.0));
  CHECK(entanglement_fidelity_unitary(std::polar(1.0, 0.7) * CZ, CZ) == doctest::Approx(1.0).epsilon(1e-14));

  MatrixXcd u = MatrixXcd::Identity(4, 4);
  u(3, 3) = std::polar(1.0, std::numbers::pi / 2);
  // Brute force over the 16 entries of U_id^dagger U.
  const MatrixXcd W = CZ.adjoint() * u;
  cplx tr = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i == j) tr += W(i, j);
  const double brute = std::norm(tr / 4.0);
  const double formula = std::norm((3.0 + std::polar(1.0, std::numbers::pi / 2 - std::numbers::pi)) / 4.0);
  CHECK(brute == doctest::Approx(formula).epsilon(1e-14));
  CHECK(entanglement_fidelity_unitary(u, CZ, false) == doctest::Approx(formula).epsilon(1e-14));
  CHECK(entanglement_fidelity_unitary(u, CZ, true) == doctest::Approx(formula).epsilon(1e-14));

  CHECK(average_fidelity(1.0) == 1.0);
  CHECK(average_fidelity(0.0) == doctest::Approx(0.2));
  CHECK(average_fidelity(0.99) == doctest::Approx(0.992).epsilon(1e-14));
  CHECK(average_fidelity(0.5, 2) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS(average_fidelity(1.5));
}

TEST_CASE("global-phase and local-Z invariance on 100 random unitaries") {
  std::uniform_real_distribution<double> ph(-std::numbers::pi, std::numbers::pi);
  for (int k = 0; k < 100; ++k) {
    const MatrixXcd U = random_unitary(4);
    const double F = entanglement_fidelity_unitary(U, CZ);
    CHECK(std::abs(entanglement_fidelity_unitary(std::polar(1.0, ph(rng)) * U, CZ) - F) < 1e-12);
    const MatrixXcd V = local_z(ph(rng), ph(rng)) * U * local_z(ph(rng), ph(rng));
    CHECK(std::abs(average_fidelity(entanglement_fidelity_unitary(V, CZ)) - average_fidelity(F)) < 1e-10);
    CHECK(F >= 0.0);
    CHECK(F <= 1.0 + 1e-12);
  }
}

TEST_CASE("channel fidelity") {
  const std::array<int, 4> comp{0, 1, 2, 4};
  // Conjugation by the target itself.
  MatrixXcd U = MatrixXcd::Identity(6, 6);
  U(4, 4) = -1.0;
  CHECK(entanglement_fidelity_channel(unitary_channel(U, comp), CZ) == doctest::Approx(1.0).epsilon(1e-14));

  // Complete depolarization of the computational block.
  ChannelImage dep;
  dep.comp = comp;
  for (int s = 0; s < 4; ++s)
    for (int sp = 0; sp < 4; ++sp) {
      MatrixXcd m = MatrixXcd::Zero(6, 6);
      if (s == sp)
        for (int c : comp) m(c, c) = 0.25;
      dep.images[size_t(4 * s + sp)] = m;
    }
  CHECK(entanglement_fidelity_channel(dep, CZ) == doctest::Approx(1.0 / 16.0).epsilon(1e-14));

  // Closed-system limit agrees with the unitary path.
  for (int k = 0; k < 20; ++k) {
    const MatrixXcd V = near_diagonal(6, 0.05);
    const MatrixXcd b = comp_block(V, comp);
    const auto ch = unitary_channel(V, comp);
    CHECK(std::abs(entanglement_fidelity_channel(ch, CZ) - entanglement_fidelity_unitary(b, CZ)) < 1e-7);
    const auto ru = gate_report(b, 1.0), rc = gate_report(ch, 1.0);
    CHECK(std::abs(ru.F_avg_cz - rc.F_avg_cz) < 1e-7);
    CHECK(std::abs(ru.F_avg_best_phase_gate - rc.F_avg_best_phase_gate) < 1e-7);
    CHECK(std::abs(ru.leakage - rc.leakage) < 1e-12);
    CHECK(ru.F_avg_best_phase_gate >= ru.F_avg_cz - 1e-12);
    CHECK(ru.leakage >= 0.0);
    CHECK(ru.leakage <= 1.0);
  }
}

TEST_CASE("report formatting") {
  const auto r = gate_report(CZ, 30.0);
  CHECK(r.F_avg_cz == doctest::Approx(1.0));
  CHECK(r.leakage == 0.0);
  const std::string row = r.csv_row(), head = GateReport::csv_header();
  CHECK(row.find(',') != std::string::npos);
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(head.begin(), head.end(), ','));
}
