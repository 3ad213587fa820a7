// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hris/channel.hpp"
#include "hris/config.hpp"
#include "hris/conic.hpp"
#include "hris/metrics.hpp"
#include "hris/ris.hpp"
#include "hris/ris_stage.hpp"

namespace hris {

enum class Scheme { proposed, fixed_mode, full_passive, full_active };

std::string to_string(Scheme s);
// Accepts the names printed by to_string; throws ValidationError otherwise.
Scheme scheme_from_string(const std::string& name);

struct RunOptions {
  double eps_conv = 1e-3;  // relative change of the audited objective
  int max_outer_iter = 30;
  int max_init_retries = 5;
  int num_gaussian = 10000;
  int fixed_active = 12;  // active elements of the fixed-mode baseline
  std::uint64_t seed = 0;
  ScaOptions sca;
  conic::SolverOptions solver;  // BS stage and frozen-mode RIS stage

  void validate() const;
};

// Keys as the field names; sca and solver are nested objects. Missing keys
// keep the values of `base`; unknown keys throw ValidationError. The seed is
// not part of the JSON form.
nlohmann::json run_options_to_json(const RunOptions& o);
RunOptions run_options_from_json(const nlohmann::json& j, const RunOptions& base = {});

enum class RunStatus { converged, max_iter, stalled, infeasible, failed };
std::string to_string(RunStatus s);

struct IterationRecord {
  int iter = 0;
  double rho_after_p11 = 0.0;  // audited objective after the BS update
  double rho_after_p12 = 0.0;  // audited objective after the RIS update
  double binarity_gap = 0.0;
  int ris_active_count = 0;
  double wall_time = 0.0;  // seconds
  bool ris_updated = false;
  std::vector<RandomizationDiagnostics> randomization;
};

struct SolveTrace {
  Scheme scheme = Scheme::proposed;
  SystemConfig config;
  std::uint64_t seed = 0;
  std::uint64_t channel_seed = 0;
  RunOptions options;
  RunStatus status = RunStatus::failed;
  std::string message;
  int init_retries = 0;
  std::vector<IterationRecord> iterations;
  BeamformingSolution bf;
  RisConfiguration ris;
  ConstraintReport report;
  double objective = 0.0;
  double wall_time = 0.0;

  bool converged() const { return status == RunStatus::converged; }
  int outer_iterations() const { return static_cast<int>(iterations.size()); }
  nlohmann::json to_json() const;
  static SolveTrace from_json(const nlohmann::json& j);
};

// All-passive start with i.i.d. uniform phases.
RisConfiguration initialize(const SystemConfig& cfg, const ChannelSet& ch, std::uint64_t seed);

// Modes pinned by a baseline scheme (empty for the proposed scheme).
std::optional<Eigen::VectorXi> frozen_modes(Scheme s, const SystemConfig& cfg, int fixed_active);

SolveTrace run_algorithm1(const SystemConfig& cfg, const ChannelSet& ch, const RunOptions& opts);
SolveTrace run_baseline(Scheme scheme, const SystemConfig& cfg, const ChannelSet& ch,
                        const RunOptions& opts);
// Dispatches to run_algorithm1 or run_baseline.
SolveTrace run_scheme(Scheme scheme, const SystemConfig& cfg, const ChannelSet& ch,
                      const RunOptions& opts);

}  // namespace hris
