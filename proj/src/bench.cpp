// SPDX-License-Identifier: Apache-2.0
#include "hris/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "hris/bs_stage.hpp"
#include "hris/serialize.hpp"

namespace hris::bench {

using nlohmann::json;

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
  json sys = j;
  Scenario s;
  if (sys.contains("run")) {
    s.options = run_options_from_json(sys["run"]);
    sys.erase("run");
  }
  s.cfg = config_from_json(sys);
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j = config_to_json(s.cfg);
  j["run"] = run_options_to_json(s.options);
  return j;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("scenario file '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::N: return "N";
    case SweepParam::P_ris_max: return "P_ris_max";
    case SweepParam::Gamma: return "Gamma";
    case SweepParam::M: return "M";
    case SweepParam::L: return "L";
  }
  return "unknown";
}

SweepParam sweep_param_from_string(const std::string& name) {
  for (SweepParam p : {SweepParam::N, SweepParam::P_ris_max, SweepParam::Gamma, SweepParam::M, SweepParam::L})
    if (to_string(p) == name) return p;
  throw ValidationError("unknown sweep parameter '" + name + "' (expected N, P_ris_max, Gamma, M or L)");
}

namespace {

int as_count(double v, const char* what) {
  if (!(v >= 1) || std::round(v) != v || v > 1e6)
    throw ValidationError(std::string(what) + " must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace

SystemConfig apply_param(const SystemConfig& base, SweepParam p, double value) {
  SystemConfig cfg = base;
  switch (p) {
    case SweepParam::N: set_num_elements(cfg, as_count(value, "N")); break;
    case SweepParam::P_ris_max: cfg.ris_power_max = dbm_to_watts(value); break;
    case SweepParam::Gamma:
      for (double& g : cfg.sinr_min) g = db_to_linear(value);
      break;
    case SweepParam::M: cfg.num_antennas = as_count(value, "M"); break;
    case SweepParam::L: {
      const int l = as_count(value, "L");
      if (l > static_cast<int>(cfg.targets.size()))
        throw ValidationError("L exceeds the number of configured targets");
      cfg.targets.resize(l);
      cfg.num_targets = l;
      break;
    }
  }
  cfg.validate();
  return cfg;
}

void SweepSpec::validate() const {
  if (grid.empty()) throw ValidationError("sweep grid must not be empty");
  if (trials < 1) throw ValidationError("sweep trials must be >= 1");
  if (schemes.empty()) throw ValidationError("sweep needs at least one scheme");
  if (workers < 1) throw ValidationError("sweep workers must be >= 1");
  base.options.validate();
  for (double v : grid) apply_param(base.cfg, param, v);
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  workers = std::clamp(workers, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const TraceSink& sink) {
  spec.validate();
  const int g = static_cast<int>(spec.grid.size());
  const int s = static_cast<int>(spec.schemes.size());
  std::vector<SweepRow> rows(static_cast<std::size_t>(g) * spec.trials * s);
  parallel_for(static_cast<int>(rows.size()), spec.workers, [&](int idx) {
    SweepRow& row = rows[idx];
    row.grid_index = idx / (spec.trials * s);
    row.trial = (idx / s) % spec.trials;
    row.scheme = spec.schemes[idx % s];
    row.value = spec.grid[row.grid_index];
    row.seed = spec.seed_base + static_cast<std::uint64_t>(row.trial);
    try {
      const SystemConfig cfg = apply_param(spec.base.cfg, spec.param, row.value);
      const ChannelSet ch = generate_channels(cfg, row.seed);
      RunOptions opts = spec.base.options;
      opts.seed = row.seed;
      const SolveTrace tr = run_scheme(row.scheme, cfg, ch, opts);
      row.objective = tr.objective;
      row.converged = tr.converged();
      row.status = to_string(tr.status);
      row.iterations = tr.outer_iterations();
      row.active_count = tr.ris.active_count();
      row.wall_time = tr.wall_time;
      if (sink) sink(row, tr);
    } catch (const std::exception& e) {
      row.status = "error";
      row.message = e.what();
      row.converged = false;
    }
  });
  return rows;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// RFC 4180 quoting.
std::string field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

bool usable_row(const SweepRow& r) {
  return r.status == "converged" || r.status == "max_iter" || r.status == "stalled";
}

}  // namespace

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, SweepParam p, bool with_timing) {
  os << "param,value,trial,seed,scheme,objective,converged,status,iterations,active_count";
  if (with_timing) os << ",wall_time";
  os << "\r\n";
  for (const auto& r : rows) {
    os << field(to_string(p)) << ',' << num(r.value) << ',' << r.trial << ',' << r.seed << ','
       << field(to_string(r.scheme)) << ',' << num(r.objective) << ',' << (r.converged ? 1 : 0) << ','
       << field(r.status) << ',' << r.iterations << ',' << r.active_count;
    if (with_timing) os << ',' << num(r.wall_time);
    os << "\r\n";
  }
}

std::vector<SummaryRow> summarize(const std::vector<SweepRow>& rows) {
  std::vector<SummaryRow> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
      return s.grid_index == r.grid_index && s.scheme == r.scheme;
    });
    if (it == out.end()) {
      out.push_back({});
      it = out.end() - 1;
      it->grid_index = r.grid_index;
      it->value = r.value;
      it->scheme = r.scheme;
    }
  }
  for (auto& s : out) {
    std::vector<double> obj;
    double active = 0.0, iters = 0.0;
    for (const auto& r : rows) {
      if (r.grid_index != s.grid_index || r.scheme != s.scheme || !usable_row(r)) continue;
      obj.push_back(r.objective);
      active += r.active_count;
      iters += r.iterations;
      s.converged += r.converged ? 1 : 0;
    }
    s.runs = static_cast<int>(obj.size());
    if (obj.empty()) {
      s.mean_objective = s.stderr_objective = s.mean_active = s.mean_iterations =
          std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double mean = 0.0;
    for (double v : obj) mean += v;
    mean /= s.runs;
    double var = 0.0;
    for (double v : obj) var += (v - mean) * (v - mean);
    s.mean_objective = mean;
    s.stderr_objective = s.runs > 1 ? std::sqrt(var / (s.runs - 1) / s.runs) : 0.0;
    s.mean_active = active / s.runs;
    s.mean_iterations = iters / s.runs;
  }
  std::stable_sort(out.begin(), out.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return a.grid_index < b.grid_index;
  });
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows, SweepParam p) {
  os << "param,value,scheme,runs,converged,mean_objective,stderr_objective,mean_active,mean_iterations\r\n";
  for (const auto& r : rows)
    os << field(to_string(p)) << ',' << num(r.value) << ',' << field(to_string(r.scheme)) << ',' << r.runs << ','
       << r.converged << ',' << num(r.mean_objective) << ',' << num(r.stderr_objective) << ','
       << num(r.mean_active) << ',' << num(r.mean_iterations) << "\r\n";
}

std::vector<ActiveRatioRow> active_ratio(const std::vector<SweepRow>& rows, int num_elements) {
  std::vector<ActiveRatioRow> out;
  std::vector<int> counts;
  for (const auto& r : rows) {
    if (r.scheme != Scheme::proposed) continue;
    if (r.grid_index >= static_cast<int>(out.size())) {
      out.resize(r.grid_index + 1);
      counts.resize(r.grid_index + 1, 0);
    }
    out[r.grid_index].p_ris_max_dbm = r.value;
    if (!usable_row(r)) continue;
    out[r.grid_index].mean_active += r.active_count;
    ++counts[r.grid_index];
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (counts[i] == 0) {
      out[i].mean_active = out[i].mean_passive = out[i].ratio = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    out[i].mean_active /= counts[i];
    out[i].mean_passive = num_elements - out[i].mean_active;
    out[i].ratio = out[i].mean_passive > 0 ? out[i].mean_active / out[i].mean_passive
                                           : std::numeric_limits<double>::infinity();
  }
  return out;
}

std::vector<ActiveRatioRow> active_ratio_sweep(const Scenario& base, const std::vector<double>& p_ris_dbm,
                                               int trials, std::uint64_t seed_base, int workers) {
  SweepSpec spec;
  spec.base = base;
  spec.param = SweepParam::P_ris_max;
  spec.grid = p_ris_dbm;
  spec.trials = trials;
  spec.schemes = {Scheme::proposed};
  spec.seed_base = seed_base;
  spec.workers = workers;
  return active_ratio(run_sweep(spec), base.cfg.num_elements());
}

void write_active_ratio_csv(std::ostream& os, const std::vector<ActiveRatioRow>& rows) {
  os << "p_ris_max_dbm,mean_active,mean_passive,ratio\r\n";
  for (const auto& r : rows)
    os << num(r.p_ris_max_dbm) << ',' << num(r.mean_active) << ',' << num(r.mean_passive) << ',' << num(r.ratio)
       << "\r\n";
}

BeampatternGrid beampattern_grid(const SystemConfig& cfg, const ChannelSet& ch, const RisConfiguration& ris,
                                 const BeamformingSolution& bf, int grid_res) {
  if (grid_res < 2) throw ValidationError("beampattern grid needs at least 2 points per axis");
  BeampatternGrid g;
  for (int i = 0; i < grid_res; ++i) {
    const double a = -kPi / 2 + kPi * i / (grid_res - 1);
    g.azimuth.push_back(a);
    g.elevation.push_back(a);
  }
  g.gain.resize(grid_res, grid_res);
  for (int i = 0; i < grid_res; ++i)
    for (int j = 0; j < grid_res; ++j)
      g.gain(i, j) = beampattern_gain_toward(ch, ris, bf, steering_vector(g.azimuth[i], g.elevation[j], cfg));
  const double peak = g.gain.maxCoeff();
  if (peak > 0) g.gain /= peak;
  return g;
}

void write_beampattern_csv(std::ostream& os, const BeampatternGrid& g) {
  os << "azimuth_deg,elevation_deg,gain\r\n";
  for (std::size_t i = 0; i < g.azimuth.size(); ++i)
    for (std::size_t j = 0; j < g.elevation.size(); ++j)
      os << num(g.azimuth[i] * 180.0 / kPi) << ',' << num(g.elevation[j] * 180.0 / kPi) << ','
         << num(g.gain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << "\r\n";
}

std::vector<Peak> local_maxima(const RMat& g, int count) {
  std::vector<Peak> peaks;
  const int r = static_cast<int>(g.rows()), c = static_cast<int>(g.cols());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      bool is_max = true;
      for (int di = -1; di <= 1 && is_max; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const int a = i + di, b = j + dj;
          if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= r || b >= c) continue;
          if (g(a, b) > g(i, j)) {
            is_max = false;
            break;
          }
        }
      if (is_max) peaks.push_back({i, j, g(i, j)});
    }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.value > b.value; });
  if (static_cast<int>(peaks.size()) > count) peaks.resize(count);
  return peaks;
}

json OracleResult::to_json() const {
  json j = {{"feasible", feasible}, {"objective", objective}, {"candidates", candidates}, {"solves", solves}};
  if (feasible) {
    j["ris"] = ris_to_json(ris);
    j["beamforming"] = beamforming_to_json(bf);
  }
  return j;
}

namespace {

struct GridPoint {
  double bound;
  int mask;
  long combo;
};

void decode(int n, int mask, long combo, const OracleOptions& o, double beta_max, RisConfiguration& r) {
  for (int i = 0; i < n; ++i) {
    r.mode(i) = (mask >> i) & 1;
    r.phase(i) = kTwoPi * static_cast<double>(1 + combo % o.phase_points) / o.phase_points;
    combo /= o.phase_points;
    if (r.mode(i)) {
      r.amplitude(i) = beta_max * static_cast<double>(1 + combo % o.beta_points) / o.beta_points;
      combo /= o.beta_points;
    } else {
      r.amplitude(i) = 1.0;
    }
  }
}

}  // namespace

OracleResult brute_force_oracle(const SystemConfig& cfg, const ChannelSet& ch, const OracleOptions& opts) {
  cfg.validate();
  ch.validate(cfg);
  const int n = cfg.num_elements();
  if (n > 3) throw ValidationError("brute_force_oracle: N must be <= 3");
  if (opts.phase_points < 1 || opts.beta_points < 1) throw ValidationError("brute_force_oracle: empty grid");

  RisConfiguration r;
  r.mode.resize(n);
  r.amplitude.resize(n);
  r.phase.resize(n);
  std::vector<GridPoint> pts;
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (opts.passive_only && mask != 0) continue;
    long combos = 1;
    for (int i = 0; i < n; ++i) combos *= opts.phase_points * (((mask >> i) & 1) ? opts.beta_points : 1);
    for (long c = 0; c < combos; ++c) {
      decode(n, mask, c, opts, cfg.beta_max, r);
      // the noise rows depend on the RIS alone
      bool ok = true;
      if (mask != 0)
        for (int l = 0; l < cfg.num_targets && ok; ++l)
          ok = ris_noise_at_target(cfg, r, ch, l) <= cfg.ris_noise_max * (1 + cfg.tol_feas);
      if (!ok) continue;
      double bound = std::numeric_limits<double>::infinity();
      for (int l = 0; l < cfg.num_targets; ++l)
        bound = std::min(bound, cfg.bs_power * cascaded_target_channel(ch, r, ch.target_steering[l]).squaredNorm());
      pts.push_back({bound, mask, c});
    }
  }
  std::stable_sort(pts.begin(), pts.end(), [](const GridPoint& a, const GridPoint& b) { return a.bound > b.bound; });

  OracleResult out;
  out.candidates = static_cast<long>(pts.size());
  for (const auto& p : pts) {
    if (out.feasible && p.bound <= out.objective) break;
    decode(n, p.mask, p.combo, opts, cfg.beta_max, r);
    ++out.solves;
    const P11Result s = solve_p11(cfg, ch, r, opts.solver);
    const bool solved = s.status == conic::SolveStatus::optimal ||
                        (s.status == conic::SolveStatus::numerical_failure && s.residuals.max() <= 1e-5);
    if (!solved) continue;
    BeamformingSolution bf;
    try {
      bf = rank_one_construct(s.beam_cov, s.sensing_cov, s.ctx.user_channel, s.ctx.constrained);
    } catch (const DomainError&) {
      continue;
    }
    const ConstraintReport rep = audit(cfg, ch, r, bf, cfg.tol_feas);
    if (!rep.feasible() || (out.feasible && rep.objective <= out.objective)) continue;
    out.feasible = true;
    out.objective = rep.objective;
    out.ris = r;
    out.bf = std::move(bf);
  }
  return out;
}

}  // namespace hris::bench
