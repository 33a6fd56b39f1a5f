#pragma once

#include "tcz/controls.hpp"

#include <array>
#include <limits>
#include <memory>
#include <vector>

namespace tcz {

struct PropagationConfig {
  double rel_tol = 1e-10;     // Taylor truncation per step
  double abs_tol = 1e-14;
  double max_step = 0.01;     // ns, upper bound on a Magnus step
  int truncation = 60;        // joint eigenstates kept in unitary runs
  int transmon_levels = 12;   // levels kept in single-transmon runs
  int subspace_states = 15;   // per anchor point of a reduced model
  double dissipator_step = 0.1;  // ns, Strang splitting interval

  void validate() const;
};

// H(E_J) = H0 + E_J V on a fixed real basis. C = [H0, V] is kept for the
// fourth-order Magnus commutator.
struct AffineModel {
  MatrixXd H0, V, C;
  Basis basis = Basis::joint_eigen;

  AffineModel() = default;
  AffineModel(MatrixXd h0, MatrixXd v, Basis b);
  Eigen::Index dim() const { return H0.rows(); }
  MatrixXd at(double E_J) const { return H0 + E_J * V; }
  AffineModel truncated(Eigen::Index n) const;
};

// Single transmon in its eigenbasis at E_J_ref.
AffineModel transmon_model(const TransmonSpec& spec, double E_J_ref, int levels);

// t = 0 dressed eigenbasis of the coupled device at the parking point.
class JointBasis {
 public:
  JointBasis(const DeviceSpec& device, int states);

  const DeviceSpec& device() const { return device_; }
  const AffineModel& model() const { return model_; }
  Eigen::Index dim() const { return model_.dim(); }
  const VectorXd& energies() const { return energies_; }
  // Product label (i_a, j_b) of each retained state.
  const std::vector<std::array<int, 2>>& labels() const { return labels_; }
  int index(int ia, int jb) const;       // throws if the label is absent
  std::array<int, 4> computational() const;  // |00>, |01>, |10>, |11>

  // Operator O_a x 1 (O_a given in the local eigenbasis of qubit a at the
  // parking point, `levels` x `levels`) expressed on the first n states.
  MatrixXd embed_a(const MatrixXd& O_local, Eigen::Index n) const;
  MatrixXd embed_b(const MatrixXd& O_local, Eigen::Index n) const;
  int local_levels() const { return K_; }

 private:
  DeviceSpec device_;
  AffineModel model_;
  VectorXd energies_;
  MatrixXd P_;   // product-charge columns
  MatrixXd Ua_, Ub_;  // local eigenvectors, charge basis
  int K_ = 10;
  std::vector<std::array<int, 2>> labels_;
};

// Galerkin restriction of the joint model to the span of the lowest
// `per_anchor` eigenstates of H(E_J) at each anchor. The first anchor should be
// the parking point: the leading columns of Q are then unit vectors, so t = 0
// eigenstates are represented exactly. Q maps subspace coordinates to the
// joint basis.
struct ReducedModel {
  AffineModel model;
  MatrixXd Q;
};
ReducedModel reduce(const JointBasis& basis, const std::vector<double>& anchors, int per_anchor);

// Evolves the columns X0 under the pulse's E_J(t). Piecewise-linear control,
// one fourth-order Magnus step per sample interval (subdivided to respect
// max_step); constant stretches are applied exactly.
MatrixXcd propagate(const AffineModel& model, const Pulse& pulse, const MatrixXcd& X0,
                    const PropagationConfig& cfg = {});

OperatorMatrix propagate_unitary(const JointBasis& basis, const Pulse& pulse,
                                 const PropagationConfig& cfg = {});
// In the eigenbasis of the transmon at the pulse's first sample.
OperatorMatrix propagate_unitary(const TransmonSpec& spec, const Pulse& pulse,
                                 const PropagationConfig& cfg = {});

double unitarity_defect(const MatrixXcd& U);

namespace detail {
// Advances X over sample intervals [k0, k1) of the pulse.
void advance(const AffineModel& m, const Pulse& pulse, Eigen::Index k0, Eigen::Index k1,
             MatrixXcd& X, const PropagationConfig& cfg);
}

struct BlockProjection {
  MatrixXcd block;          // 4x4 over |00>,|01>,|10>,|11>
  std::array<double, 4> leaked;  // 1 - column norm^2
};
BlockProjection project_computational(const OperatorMatrix& U, const JointBasis& basis);
BlockProjection project_computational(const MatrixXcd& U, const std::array<int, 4>& comp);

// ---- Lindblad ----

struct LindbladSpec {
  double T1_us = std::numeric_limits<double>::infinity();
  double T2_star_us = std::numeric_limits<double>::infinity();
  bool apply_a = true, apply_b = true;

  void validate() const;
  double gamma1() const { return 1.0 / (T1_us * 1e3); }      // 1/ns
  double gamma2() const { return 1.0 / (T2_star_us * 1e3); }
};

// Images of the 16 computational dyads |s><s'|, index 4 s + s'.
struct ChannelImage {
  std::array<MatrixXcd, 16> images;
  std::array<int, 4> comp{};
  double max_trace_drift = 0.0;

  const MatrixXcd& operator()(int s, int sp) const { return images[size_t(4 * s + sp)]; }
};

// Dissipators of both qubits on the first n joint states.
std::vector<MatrixXd> lindblad_operators(const JointBasis& basis, const LindbladSpec& spec,
                                         Eigen::Index n);

// Generic solver on a fixed basis; rho0 are initial density matrices.
std::vector<MatrixXcd> evolve_lindblad(const AffineModel& model, const std::vector<MatrixXd>& L,
                                       const Pulse& pulse, const std::vector<MatrixXcd>& rho0,
                                       const PropagationConfig& cfg = {});

// One coarse interval of a split run: the unitary over the interval and its
// length. Identical flat intervals share one matrix.
struct LindbladStep {
  std::shared_ptr<const MatrixXcd> U;
  double tau = 0.0;
};
std::vector<LindbladStep> lindblad_steps(const AffineModel& model, const Pulse& pulse,
                                         const PropagationConfig& cfg = {});
// Strang splitting: half dissipator steps around each unitary, adjacent
// halves merged. The dissipator step is rho -> K0 rho K0 + tau sum L rho L^T
// with K0 = (1 - tau G)^(1/2), G = sum L^T L: trace preserving.
std::vector<MatrixXcd> apply_lindblad_steps(const std::vector<MatrixXd>& L,
                                            const std::vector<LindbladStep>& steps,
                                            std::vector<MatrixXcd> rho);

// Channel on the reduced model spanned at the parking point and at E_J_low,
// for pulses that stay within [E_J_low, park].
class LindbladChannel {
 public:
  LindbladChannel(const JointBasis& basis, const LindbladSpec& spec, double E_J_low,
                  const PropagationConfig& cfg = {});
  const ReducedModel& reduced() const { return red_; }
  ChannelImage run(const std::vector<LindbladStep>& steps) const;

 private:
  ReducedModel red_;
  std::vector<MatrixXd> L_;
  std::array<int, 4> comp_{}, local_{};
};

ChannelImage propagate_lindblad(const JointBasis& basis, const Pulse& pulse,
                                const LindbladSpec& spec, const PropagationConfig& cfg = {});

}  // namespace tcz
