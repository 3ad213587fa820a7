// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hris/channel.hpp"
#include "hris/config.hpp"
#include "hris/ris.hpp"
#include "hris/types.hpp"

namespace hris {

/// BS transmit design: one beamformer per user plus the dedicated
/// sensing covariance.
struct BeamformingSolution {
  std::vector<CVec> beams;  // per user, M
  CMat sensing_cov;         // M x M Hermitian PSD

  // R0 + sum_k w_k w_k^H
  CMat total_covariance() const;
  // tr(R0) + sum_k |w_k|^2
  double transmit_power() const;
  void validate(const SystemConfig& cfg) const;

  static BeamformingSolution zero(const SystemConfig& cfg);
};

// G^H Phi^H a: cascaded BS->RIS->direction channel.
CVec cascaded_target_channel(const ChannelSet& ch, const RisConfiguration& ris,
                             const CVec& steering);
// G^H Phi h_iu,k + h_bu,k
CVec equivalent_user_channel(const ChannelSet& ch, const RisConfiguration& ris, int user);

double beampattern_gain(const ChannelSet& ch, const RisConfiguration& ris,
                        const BeamformingSolution& bf, int target);
// Gain toward an arbitrary steering vector (used for beampattern grids).
double beampattern_gain_toward(const ChannelSet& ch, const RisConfiguration& ris,
                               const BeamformingSolution& bf, const CVec& steering);

double cu_sinr(const SystemConfig& cfg, const ChannelSet& ch, const RisConfiguration& ris,
               const BeamformingSolution& bf, int user);

// Expected output power of the active elements, signal plus amplified noise.
double ris_output_power(const SystemConfig& cfg, const ChannelSet& ch,
                        const RisConfiguration& ris, const BeamformingSolution& bf);

// Active-element noise power reaching a target.
double ris_noise_at_target(const SystemConfig& cfg, const RisConfiguration& ris,
                           const ChannelSet& ch, int target);

enum class Relation { at_most, at_least };

struct ConstraintRecord {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  Relation relation = Relation::at_most;
  double slack = 0.0;      // rhs - lhs (at_most) or lhs - rhs (at_least)
  double tolerance = 0.0;  // absolute slack tolerance applied
  bool satisfied = false;
};

struct ConstraintReport {
  std::vector<ConstraintRecord> records;
  double objective = 0.0;  // min over targets of the beampattern gain
  std::vector<double> target_gains;

  bool feasible() const;
  const ConstraintRecord& at(const std::string& name) const;
  nlohmann::json to_json() const;
  static ConstraintReport from_json(const nlohmann::json& j);
};

// Evaluates every constraint of the joint problem plus the max-min
// objective. tol_feas is relative to each constraint's natural scale.
ConstraintReport audit(const SystemConfig& cfg, const ChannelSet& ch,
                       const RisConfiguration& ris, const BeamformingSolution& bf,
                       double tol_feas);

/// Evaluates the same quantities as the free functions above for many RIS
/// candidates under one fixed beamforming design. Products that do not
/// depend on the RIS are computed once; per-candidate work runs on the
/// dispatched SIMD kernels.
class CandidateEvaluator {
 public:
  struct Result {
    std::vector<double> gains;
    double min_gain = 0.0;
    std::vector<double> sinr;
    double ris_power = 0.0;
    std::vector<double> ris_noise;
  };

  CandidateEvaluator(const SystemConfig& cfg, const ChannelSet& ch,
                     const BeamformingSolution& bf);

  // coeffs: beta_n exp(j theta_n); mode: 0/1 per element.
  Result evaluate(const CVec& coeffs, const Eigen::VectorXi& mode) const;

  // Constraint check of SINR, RIS power and RIS noise at relative tolerance.
  bool feasible(const Result& r, double rel_tol) const;

 private:
  SystemConfig cfg_;
  ChannelSet ch_;
  BeamformingSolution bf_;
  CMat total_cov_;
  RVec incident_power_;  // diag(G R G^H)
  std::vector<RVec> user_gain2_;  // |h_iu,k|^2
};

}  // namespace hris
