// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hris/channel.hpp"
#include "hris/config.hpp"
#include "hris/metrics.hpp"
#include "hris/optimizer.hpp"
#include "hris/ris.hpp"

namespace hris::bench {

/// System parameters plus algorithm options, read from one JSON file: the
/// system keys at top level and the options under "run".
struct Scenario {
  SystemConfig cfg;
  RunOptions options;
};
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);

// N: element count; P_ris_max: dBm; Gamma: dB, all users; M: antennas;
// L: number of targets (the first L of the configured list).
enum class SweepParam { N, P_ris_max, Gamma, M, L };
std::string to_string(SweepParam p);
SweepParam sweep_param_from_string(const std::string& name);
SystemConfig apply_param(const SystemConfig& base, SweepParam p, double value);

struct SweepSpec {
  Scenario base;
  SweepParam param = SweepParam::N;
  std::vector<double> grid;
  int trials = 1;
  std::vector<Scheme> schemes{Scheme::proposed};
  std::uint64_t seed_base = 0;
  int workers = 1;

  void validate() const;
};

struct SweepRow {
  int grid_index = 0;
  double value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::proposed;
  double objective = 0.0;
  bool converged = false;
  std::string status;
  int iterations = 0;
  int active_count = 0;
  double wall_time = 0.0;
  std::string message;  // set for "error" rows; not written to CSV
};

// Called once per finished run from the worker that ran it.
using TraceSink = std::function<void(const SweepRow&, const SolveTrace&)>;

// Trial t uses channel and algorithm seed seed_base + t for every scheme
// and grid value. Rows are ordered by (grid index, trial, scheme). A run
// that throws becomes a row with status "error".
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const TraceSink& sink = {});

// Fixed header; wall_time only when with_timing (it breaks byte-identity).
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, SweepParam p, bool with_timing);

struct SummaryRow {
  int grid_index = 0;
  double value = 0.0;
  Scheme scheme = Scheme::proposed;
  int runs = 0;
  int converged = 0;
  double mean_objective = 0.0;
  double stderr_objective = 0.0;
  double mean_active = 0.0;
  double mean_iterations = 0.0;
};
// Statistics over rows whose run finished with a feasible solution.
std::vector<SummaryRow> summarize(const std::vector<SweepRow>& rows);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows, SweepParam p);

struct ActiveRatioRow {
  double p_ris_max_dbm = 0.0;
  double mean_active = 0.0;
  double mean_passive = 0.0;
  double ratio = 0.0;  // mean_active / mean_passive, +inf when no passive element remains
};
std::vector<ActiveRatioRow> active_ratio_sweep(const Scenario& base, const std::vector<double>& p_ris_dbm,
                                               int trials, std::uint64_t seed_base, int workers = 1);
// Aggregates the proposed-scheme rows of a P_ris_max sweep.
std::vector<ActiveRatioRow> active_ratio(const std::vector<SweepRow>& p_ris_rows, int num_elements);
void write_active_ratio_csv(std::ostream& os, const std::vector<ActiveRatioRow>& rows);

/// Normalised gain over azimuth x elevation, both on grid_res points
/// evenly spaced over [-pi/2, pi/2] (2 degree cells for 91 points).
struct BeampatternGrid {
  std::vector<double> azimuth;    // rad
  std::vector<double> elevation;  // rad
  RMat gain;                      // gain(i, j) at (azimuth[i], elevation[j]); max = 1
};
BeampatternGrid beampattern_grid(const SystemConfig& cfg, const ChannelSet& ch, const RisConfiguration& ris,
                                 const BeamformingSolution& bf, int grid_res);
void write_beampattern_csv(std::ostream& os, const BeampatternGrid& g);

struct Peak {
  int i = 0;
  int j = 0;
  double value = 0.0;
};
// Strict-or-equal local maxima over the 8-neighbourhood, largest first.
std::vector<Peak> local_maxima(const RMat& g, int count);

struct OracleOptions {
  int phase_points = 64;
  int beta_points = 8;  // beta = beta_max * i / beta_points, i = 1..beta_points
  bool passive_only = false;
  conic::SolverOptions solver;
};

struct OracleResult {
  bool feasible = false;
  double objective = 0.0;
  RisConfiguration ris;
  BeamformingSolution bf;
  long candidates = 0;  // grid points after the RIS-only constraint checks
  long solves = 0;      // BS-stage SDPs actually solved
  nlohmann::json to_json() const;
};

// Exhaustive search over modes, the phase grid and (for active elements)
// the amplitude grid, solving the BS stage exactly for each RIS candidate.
// Candidates are visited in decreasing order of the bound P0 min_l |h_l|^2
// and the search stops once the bound cannot beat the best audited
// objective, so the result equals full enumeration. Requires N <= 3.
OracleResult brute_force_oracle(const SystemConfig& cfg, const ChannelSet& ch, const OracleOptions& opts = {});

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace hris::bench
