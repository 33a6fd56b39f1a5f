#include "tcz/propagation.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <sstream>

namespace tcz {

void LindbladSpec::validate() const {
  if (!(T1_us > 0)) throw ConfigError("lindblad: T1 must be positive");
  if (!(T2_star_us > 0)) throw ConfigError("lindblad: T2_star must be positive");
}

std::vector<MatrixXd> lindblad_operators(const JointBasis& basis, const LindbladSpec& spec,
                                         Eigen::Index n) {
  spec.validate();
  const int K = basis.local_levels();
  MatrixXd decay = MatrixXd::Zero(K, K), dephase = MatrixXd::Zero(K, K);
  for (int k = 0; k + 1 < K; ++k) decay(k, k + 1) = std::sqrt((k + 1) * spec.gamma1());
  for (int k = 0; k < K; ++k) dephase(k, k) = std::sqrt(k * spec.gamma2());
  std::vector<MatrixXd> L;
  auto add = [&](bool on, auto embed) {
    if (!on) return;
    if (spec.gamma1() > 0) L.push_back(embed(decay));
    if (spec.gamma2() > 0) L.push_back(embed(dephase));
  };
  add(spec.apply_a, [&](const MatrixXd& O) { return basis.embed_a(O, n); });
  add(spec.apply_b, [&](const MatrixXd& O) { return basis.embed_b(O, n); });
  return L;
}

std::vector<LindbladStep> lindblad_steps(const AffineModel& model, const Pulse& pulse,
                                         const PropagationConfig& cfg) {
  std::vector<LindbladStep> steps;
  const Eigen::Index N = pulse.size() > 1 ? pulse.size() - 1 : 0;
  const double dt = pulse.dt;
  const Eigen::Index len = std::max<Eigen::Index>(1, Eigen::Index(std::llround(cfg.dissipator_step / dt)));
  std::shared_ptr<const MatrixXcd> cached;
  double cached_value = std::numeric_limits<double>::quiet_NaN();
  Eigen::Index cached_len = -1;
  for (Eigen::Index k0 = 0; k0 < N; k0 += len) {
    const Eigen::Index k1 = std::min(N, k0 + len), n = k1 - k0;
    bool flat = true;
    for (Eigen::Index k = k0; k < k1 && flat; ++k) flat = pulse.E_J(k + 1) == pulse.E_J(k0);
    if (!(flat && n == cached_len && pulse.E_J(k0) == cached_value)) {
      MatrixXcd U = MatrixXcd::Identity(model.dim(), model.dim());
      detail::advance(model, pulse, k0, k1, U, cfg);
      cached = std::make_shared<const MatrixXcd>(std::move(U));
      cached_len = flat ? n : -1;
      cached_value = pulse.E_J(k0);
    }
    steps.push_back({cached, dt * double(n)});
  }
  return steps;
}

std::vector<MatrixXcd> apply_lindblad_steps(const std::vector<MatrixXd>& L,
                                            const std::vector<LindbladStep>& steps,
                                            std::vector<MatrixXcd> rho) {
  if (steps.empty() || rho.empty()) return rho;
  const Eigen::Index d = steps.front().U->rows();
  for (const auto& l : L)
    if (l.rows() != d || l.cols() != d) throw std::invalid_argument("apply_lindblad_steps: dissipator dimension");
  for (const auto& r : rho)
    if (r.rows() != d || r.cols() != d) throw std::invalid_argument("apply_lindblad_steps: state dimension");

  // Kraus pair K0 = (1 - tau G)^(1/2), K_k = sqrt(tau) L_k: first order in tau
  // and trace preserving at every step.
  MatrixXd G = MatrixXd::Zero(d, d);
  for (const auto& l : L) G += l.transpose() * l;
  const Eigen::SelfAdjointEigenSolver<MatrixXd> gs(0.5 * (G + G.transpose()));
  std::map<double, MatrixXd> no_jump;
  MatrixXcd tmp(d, d), next(d, d);
  auto dissipate = [&](double tau) {
    if (L.empty() || tau <= 0) return;
    auto it = no_jump.find(tau);
    if (it == no_jump.end()) {
      const VectorXd keep = 1.0 - tau * gs.eigenvalues().array();
      if (keep.minCoeff() < 0) throw NumericalError("dissipator step too long for the decay rates");
      const VectorXd decay = keep.array().sqrt();
      it = no_jump.emplace(tau, gs.eigenvectors() * decay.asDiagonal() * gs.eigenvectors().transpose()).first;
    }
    const MatrixXd& K0 = it->second;
    for (auto& r : rho) {
      tmp.noalias() = K0 * r;
      next.noalias() = tmp * K0;
      for (const auto& l : L) {
        tmp.noalias() = l * r;
        next.noalias() += tau * (tmp * l.transpose());
      }
      r.swap(next);
    }
  };
  double prev = 0.0;
  for (const auto& st : steps) {
    dissipate(0.5 * (prev + st.tau));
    const MatrixXcd& U = *st.U;
    for (auto& r : rho) {
      tmp.noalias() = U * r;
      r.noalias() = tmp * U.adjoint();
    }
    prev = st.tau;
  }
  dissipate(0.5 * prev);
  return rho;
}

std::vector<MatrixXcd> evolve_lindblad(const AffineModel& model, const std::vector<MatrixXd>& L,
                                       const Pulse& pulse, const std::vector<MatrixXcd>& rho0,
                                       const PropagationConfig& cfg) {
  for (const auto& r : rho0)
    if (r.rows() != model.dim() || r.cols() != model.dim())
      throw std::invalid_argument("evolve_lindblad: state dimension");
  return apply_lindblad_steps(L, lindblad_steps(model, pulse, cfg), rho0);
}

LindbladChannel::LindbladChannel(const JointBasis& basis, const LindbladSpec& spec, double E_J_low,
                                 const PropagationConfig& cfg)
    : red_(reduce(basis, {basis.device().park_EJ(), E_J_low}, cfg.subspace_states)), comp_(basis.computational()) {
  for (int s = 0; s < 4; ++s) {
    Eigen::Index i;
    if (red_.Q.row(comp_[size_t(s)]).cwiseAbs().maxCoeff(&i) < 1 - 1e-12)
      throw NumericalError("lindblad: computational state not resolved by the subspace");
    local_[size_t(s)] = int(i);
  }
  for (const auto& l : lindblad_operators(basis, spec, basis.dim())) L_.push_back(red_.Q.transpose() * l * red_.Q);
}

ChannelImage LindbladChannel::run(const std::vector<LindbladStep>& steps) const {
  ChannelImage ch;
  ch.comp = comp_;
  const Eigen::Index d = red_.model.dim();
  std::vector<MatrixXcd> rho0;
  std::vector<std::pair<int, int>> which;
  for (int s = 0; s < 4; ++s)
    for (int sp = s; sp < 4; ++sp) {
      MatrixXcd r = MatrixXcd::Zero(d, d);
      r(local_[size_t(s)], local_[size_t(sp)]) =
          red_.Q(comp_[size_t(s)], local_[size_t(s)]) * red_.Q(comp_[size_t(sp)], local_[size_t(sp)]);
      rho0.push_back(std::move(r));
      which.emplace_back(s, sp);
    }
  const auto out = apply_lindblad_steps(L_, steps, std::move(rho0));
  const MatrixXcd Q = red_.Q.cast<cplx>();
  for (size_t j = 0; j < out.size(); ++j) {
    const auto [s, sp] = which[j];
    MatrixXcd img = Q * out[j] * Q.transpose();
    const double expected = s == sp ? 1.0 : 0.0;
    ch.max_trace_drift = std::max(ch.max_trace_drift, std::abs(out[j].trace() - expected));
    if (s != sp) ch.images[size_t(4 * sp + s)] = img.adjoint();
    ch.images[size_t(4 * s + sp)] = std::move(img);
  }
  if (ch.max_trace_drift > 1e-5) {
    std::ostringstream os;
    os << "lindblad: trace drift " << ch.max_trace_drift;
    throw NumericalError(os.str());
  }
  return ch;
}

ChannelImage propagate_lindblad(const JointBasis& basis, const Pulse& pulse, const LindbladSpec& spec,
                                const PropagationConfig& cfg) {
  cfg.validate();
  const double lo = pulse.size() > 0 ? pulse.E_J.minCoeff() : basis.device().park_EJ();
  const LindbladChannel channel(basis, spec, lo, cfg);
  return channel.run(lindblad_steps(channel.reduced().model, pulse, cfg));
}

}  // namespace tcz
