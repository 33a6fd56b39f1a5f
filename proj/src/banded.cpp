#include "tcz/hamiltonian.hpp"

#include <lapacke.h>

#include <vector>

namespace tcz {

RealSpectrum coupled_lowest(const DeviceSpec& dev, double E_J_a, int count, bool vectors) {
  const int ma = dev.tunable.charge_cutoff, mb = dev.parked.charge_cutoff;
  const int na = 2 * ma + 1, nb = 2 * mb + 1, n = na * nb;
  count = std::min(count, n);
  // Upper band storage, column major: ab[kd + i - j + j*ldab] = A(i, j).
  const int kd = nb, ldab = kd + 1;
  std::vector<double> ab(size_t(ldab) * n, 0.0);
  auto at = [&](int i, int j) -> double& { return ab[size_t(kd + i - j) + size_t(j) * ldab]; };
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) {
      const double qa = i - ma, qb = j - mb;
      const int k = i * nb + j;
      at(k, k) = 4.0 * dev.tunable.E_C * qa * qa + 4.0 * dev.parked.E_C * qb * qb - dev.g_C * qa * qb;
      if (i + 1 < na) at(k, k + nb) = -0.5 * E_J_a;
      if (j + 1 < nb) at(k, k + 1) = -0.5 * dev.parked_EJ();
    }
  std::vector<double> q(vectors ? size_t(n) * n : 1), w(n), z(vectors ? size_t(n) * count : 1);
  std::vector<lapack_int> ifail(n);
  lapack_int found = 0;
  const double abstol = 2 * LAPACKE_dlamch('S');
  const lapack_int info = LAPACKE_dsbevx(
      LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'I', 'U', n, kd, ab.data(), ldab, q.data(),
      vectors ? n : 1, 0.0, 0.0, 1, count, abstol, &found, w.data(), z.data(), vectors ? n : 1,
      ifail.data());
  if (info != 0 || found != count)
    throw NumericalError("coupled_lowest: banded eigensolver failed (info " + std::to_string(info) + ")");
  RealSpectrum s{Eigen::Map<VectorXd>(w.data(), count), {}};
  if (vectors) {
    s.vectors = Eigen::Map<MatrixXd>(z.data(), n, count);
    fix_phases(s.vectors);
  }
  return s;
}

}  // namespace tcz
