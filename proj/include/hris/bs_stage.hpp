// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "hris/channel.hpp"
#include "hris/config.hpp"
#include "hris/conic.hpp"
#include "hris/metrics.hpp"
#include "hris/ris.hpp"

namespace hris {

/// Data of the BS beamforming subproblem for one fixed RIS state. Channel
/// quantities are in SI units; the SDP itself is assembled in milliwatts
/// with the gain rows normalised by gain_scale.
struct P11Context {
  std::vector<CVec> user_channel;    // h_CU,k (M)
  std::vector<CVec> target_channel;  // h_l (M)
  std::vector<double> noise;         // b_k: RIS noise at CU k plus receiver noise (W)
  CMat ris_power_map;                // C with RIS signal power = tr(C R)
  double frob_const = 0.0;           // sigma_ris^2 sum_n q_n beta_n^2 (W)
  std::vector<bool> constrained;     // CU has an SINR row (Gamma_k > 0)

  // SDP layout
  std::vector<int> beam_block;
  int sensing_block = -1;
  int rho_index = 0;
  double gain_scale = 1.0;  // rho_hat = rho[mW] / gain_scale
  static constexpr double kPowerUnit = 1e-3;  // W per SDP power unit
};

std::pair<conic::SdpProblem, P11Context> build_p11(const SystemConfig& cfg, const ChannelSet& ch,
                                                   const RisConfiguration& ris);

struct P11Result {
  conic::SolveStatus status = conic::SolveStatus::numerical_failure;
  std::vector<CMat> beam_cov;  // W_k* (W)
  CMat sensing_cov;            // R0* (W)
  double rho = 0.0;            // min_l h_l^H R h_l (W)
  conic::Residuals residuals;
  int iterations = 0;
  P11Context ctx;
};

P11Result solve_p11(const SystemConfig& cfg, const ChannelSet& ch, const RisConfiguration& ris,
                    const conic::SolverOptions& opts = {});

// w_k = W_k h_k / sqrt(h_k^H W_k h_k),  R0 = R0* + sum W_k* - sum w_k w_k^H.
// Users flagged unconstrained have W_k folded into R0 and w_k = 0. Throws
// DomainError when a constrained user receives no power (h^H W h <= tol).
BeamformingSolution rank_one_construct(const std::vector<CMat>& beam_cov, const CMat& sensing_cov,
                                       const std::vector<CVec>& user_channel,
                                       const std::vector<bool>& constrained = {});

}  // namespace hris
