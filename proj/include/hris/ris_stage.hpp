// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hris/channel.hpp"
#include "hris/config.hpp"
#include "hris/conic.hpp"
#include "hris/metrics.hpp"
#include "hris/ris.hpp"

namespace hris {

/// Lifted data of the RIS subproblem for fixed beamformers, with
/// v = [phi; 1] and phi_n = beta_n exp(j theta_n):
///   v^H rbar_tar[l] v            = beampattern gain toward target l
///   v^H rbar_cu[k][j] v + |s|^2  = |h_CU,k^H w_j|^2,  s = h_bu,k^H w_j
struct P12Matrices {
  std::vector<CMat> rbar_tar;               // (N+1) x (N+1)
  std::vector<std::vector<CMat>> rbar_cu;   // [k][j], (N+1) x (N+1)
  CMat p_ris;                               // G R G^H + sigma_ris^2 I
  std::vector<RVec> sigma_ris;              // diagonal, sigma_ris^2 |h_iu,k|^2
  std::vector<RVec> p_tar;                  // diagonal, sigma_ris^2 |a_l|^2
  std::vector<double> c;                    // SINR constants (W)
  std::vector<double> sinr_min;             // Gamma_k
  int num_elements() const { return static_cast<int>(p_ris.rows()); }
};

P12Matrices build_p12_matrices(const SystemConfig& cfg, const ChannelSet& ch,
                               const BeamformingSolution& bf);

// SCA surrogate of sum_n q_n (1 - q_n), tangent at q_prev.
double penalty_exact(const RVec& q);
double penalty_surrogate(const RVec& q, const RVec& q_prev);

struct P12Layout {
  int v_block = 0;
  int q_first = 0;
  int rho_index = 0;
  double gain_scale = 1.0;  // rho'' [W] = rho_hat * gain_scale
  double mu = 0.0;          // penalty weight in rho_hat units
  RVec q_prev;
  std::optional<Eigen::VectorXi> frozen;  // fixed modes, no q variables
};

// Relaxed program with q in [0,1]^N and penalty weight mu (in units of the
// normalised gain, see P12Layout::gain_scale).
std::pair<conic::SdpProblem, P12Layout> build_p12(const SystemConfig& cfg, const P12Matrices& mats,
                                                  const RVec& q_prev, double mu);
// Same program with the modes fixed.
std::pair<conic::SdpProblem, P12Layout> build_p12_frozen(const SystemConfig& cfg,
                                                         const P12Matrices& mats,
                                                         const Eigen::VectorXi& modes);

struct P12Solution {
  conic::SolveStatus status = conic::SolveStatus::numerical_failure;
  double rho_dd = 0.0;  // relaxed min gain (W), penalty excluded
  double penalized_objective = 0.0;
  CMat v;               // (N+1) x (N+1) Hermitian PSD
  CMat z;               // N x N
  RVec q;
  conic::Residuals residuals;
  int iterations = 0;
};

P12Solution solve_p12(const SystemConfig& cfg, const P12Matrices& mats, const RVec& q_prev, double mu,
                      const conic::SolverOptions& opts = {});
P12Solution solve_p12_frozen(const SystemConfig& cfg, const P12Matrices& mats,
                             const Eigen::VectorXi& modes, const conic::SolverOptions& opts = {});

// Optimal, or stopped early with every KKT residual at most 1e-4; such
// iterates still carry a meaningful V for randomization.
bool is_usable(const P12Solution& s);

struct ModeRounding {
  Eigen::VectorXi modes;
  double gap = 0.0;  // max_n min(q_n, 1 - q_n)
};
// q_n >= 0.5 -> active.
ModeRounding round_modes(const RVec& q);
// Passive elements have V_nn = 1 exactly, so any element whose relaxed
// squared amplitude leaves [1 - tol, 1 + tol] is marked active.
Eigen::VectorXi amplitude_modes(const CMat& v, double tol = 0.05);

struct ScaStep {
  double mu = 0.0;
  double rho_dd = 0.0;
  double gap = 0.0;
  conic::SolveStatus status = conic::SolveStatus::numerical_failure;
};

struct ScaOptions {
  double gap_tol = 0.01;
  int max_solves = 20;
  double mu_init_factor = 1e-2;  // times the unpenalised rho scale
  double mu_growth = 10.0;
  double mu_cap_factor = 1e6;    // times the initial mu
  conic::SolverOptions solver;
};

struct ScaResult {
  P12Solution solution;
  P12Solution relaxed;  // the unpenalised first solve
  std::vector<ScaStep> steps;
  double gap = 1.0;
};

// Penalised SCA loop: one unpenalised solve to fix the scale, then solves
// with q_prev updated and mu escalated until the binarity gap is small.
ScaResult solve_p12_sca(const SystemConfig& cfg, const P12Matrices& mats, const ScaOptions& opts = {});

struct RandomizationDiagnostics {
  int samples = 0;
  int discarded = 0;  // last entry too small to normalise
  int feasible = 0;
  int rank = 0;       // eigenvalues above 1e-7 lambda_max
  bool eigen_shortcut = false;
  double selected_objective = 0.0;
  int selected_index = -1;
  double binarity_gap = 0.0;
  nlohmann::json to_json() const;
};

struct RandomizationResult {
  std::optional<RisConfiguration> ris;
  RandomizationDiagnostics diagnostics;
};

// Project one lifted vector onto the reflection set for the given modes:
// passive elements keep the phase at unit amplitude, active ones clamp the
// amplitude to [0, beta_max]. Returns nullopt when |v_{N+1}| < 1e-9.
std::optional<RisConfiguration> project_candidate(const CVec& v, const Eigen::VectorXi& modes,
                                                  double beta_max);

// Draws samples ~ CN(0, V), projects each one and keeps the feasible
// candidate with the largest min-gain (lowest index on ties).
RandomizationResult gaussian_randomize(const CMat& v, const Eigen::VectorXi& modes,
                                       const SystemConfig& cfg, const ChannelSet& ch,
                                       const BeamformingSolution& bf, int num_samples,
                                       std::uint64_t seed, double feas_tol = 1e-6);

}  // namespace hris
