// SPDX-License-Identifier: Apache-2.0
#include "hris/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

#include "hris/bs_stage.hpp"
#include "hris/serialize.hpp"

namespace hris {

namespace {

constexpr std::uint32_t kInitStream = 1;
constexpr std::uint32_t kRetryStream = 2;
constexpr std::uint32_t kRandomizeStream = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct BsUpdate {
  bool ok = false;
  BeamformingSolution bf;
  ConstraintReport report;
  std::string why;
};

BsUpdate bs_update(const SystemConfig& cfg, const ChannelSet& ch, const RisConfiguration& ris,
                   const RunOptions& opts) {
  BsUpdate u;
  const P11Result r = solve_p11(cfg, ch, ris, opts.solver);
  const bool solved = r.status == conic::SolveStatus::optimal ||
                      (r.status == conic::SolveStatus::numerical_failure && r.residuals.max() <= 1e-5);
  if (!solved) {
    u.why = std::string("BS stage returned ") + conic::to_string(r.status);
    return u;
  }
  try {
    u.bf = rank_one_construct(r.beam_cov, r.sensing_cov, r.ctx.user_channel, r.ctx.constrained);
  } catch (const DomainError& e) {
    u.why = e.what();
    return u;
  }
  u.report = audit(cfg, ch, ris, u.bf, cfg.tol_feas);
  if (!u.report.feasible()) {
    u.why = "constructed beamformers fail the audit";
    return u;
  }
  u.ok = true;
  return u;
}

// Noise of the initially active elements alone uses at most half of the
// RIS power budget and of every per-target noise budget.
double initial_active_amplitude(const SystemConfig& cfg, const ChannelSet& ch,
                                const Eigen::VectorXi& modes) {
  const int na = modes.sum();
  if (na == 0 || cfg.ris_noise_power <= 0.0) return 1.0;
  double b2 = 0.5 * cfg.ris_power_max / (cfg.ris_noise_power * na);
  for (const auto& a : ch.target_steering) {
    double s = 0.0;
    for (int i = 0; i < modes.size(); ++i)
      if (modes(i)) s += std::norm(a(i));
    if (s > 0) b2 = std::min(b2, 0.5 * cfg.ris_noise_max / (cfg.ris_noise_power * s));
  }
  return std::sqrt(std::min(1.0, b2));
}

SolveTrace run_loop(Scheme scheme, const SystemConfig& cfg, const ChannelSet& ch, const RunOptions& opts) {
  cfg.validate();
  ch.validate(cfg);
  opts.validate();
  const auto t0 = Clock::now();
  SolveTrace tr;
  tr.scheme = scheme;
  tr.config = cfg;
  tr.seed = opts.seed;
  tr.channel_seed = ch.seed;
  tr.options = opts;
  const auto frozen = frozen_modes(scheme, cfg, opts.fixed_active);

  // Iteration 1's BS update doubles as the feasibility check of the start.
  RisConfiguration ris;
  BsUpdate cur;
  for (int attempt = 0; attempt <= opts.max_init_retries; ++attempt) {
    const std::uint64_t s = attempt == 0 ? opts.seed : derive_seed(opts.seed, kRetryStream, attempt);
    ris = initialize(cfg, ch, s);
    if (frozen) {
      ris.mode = *frozen;
      const double beta = initial_active_amplitude(cfg, ch, *frozen);
      for (int i = 0; i < ris.num_elements(); ++i)
        if (ris.mode(i)) ris.amplitude(i) = beta;
    }
    tr.init_retries = attempt;
    cur = bs_update(cfg, ch, ris, opts);
    if (cur.ok) break;
  }
  if (!cur.ok) {
    tr.status = RunStatus::infeasible;
    tr.message = "no feasible start after " + std::to_string(opts.max_init_retries) + " retries: " + cur.why;
    tr.ris = ris;
    tr.bf = BeamformingSolution::zero(cfg);
    tr.report = audit(cfg, ch, tr.ris, tr.bf, cfg.tol_feas);
    tr.objective = tr.report.objective;
    tr.wall_time = seconds_since(t0);
    return tr;
  }

  BeamformingSolution bf = cur.bf;
  ConstraintReport rep = cur.report;
  double prev = 0.0;
  tr.status = RunStatus::max_iter;
  for (int it = 1; it <= opts.max_outer_iter; ++it) {
    const auto ti = Clock::now();
    IterationRecord rec;
    rec.iter = it;
    if (it > 1) {
      BsUpdate u = bs_update(cfg, ch, ris, opts);
      if (!u.ok) {
        // the current pair is the last audited state; keep it
        tr.status = RunStatus::stalled;
        tr.message = "BS stage failed after a RIS update: " + u.why;
        break;
      }
      if (u.report.objective >= rep.objective) {
        bf = std::move(u.bf);
        rep = std::move(u.report);
      }
    }
    rec.rho_after_p11 = rep.objective;

    // RIS update: candidates are (relaxed V, modes) pairs.
    const P12Matrices mats = build_p12_matrices(cfg, ch, bf);
    std::vector<std::pair<CMat, Eigen::VectorXi>> cands;
    std::vector<double> cand_gap;
    if (!frozen) {
      const ScaResult sca = solve_p12_sca(cfg, mats, opts.sca);
      std::vector<Eigen::VectorXi> tried;
      if (is_usable(sca.solution)) {
        const Eigen::VectorXi rounded = round_modes(sca.solution.q).modes;
        rec.binarity_gap = sca.gap;
        cands.emplace_back(sca.solution.v, rounded);
        cand_gap.push_back(sca.gap);
        tried.push_back(rounded);
      }
      // The big-M relaxation lets small q carry large amplitudes, so the
      // penalty can round amplifying elements to passive. The modes implied
      // by the relaxed amplitudes and the current modes are re-solved with
      // the modes fixed.
      std::vector<Eigen::VectorXi> extra;
      if (is_usable(sca.relaxed)) extra.push_back(amplitude_modes(sca.relaxed.v));
      extra.push_back(ris.mode);
      for (const auto& m : extra) {
        if (std::find(tried.begin(), tried.end(), m) != tried.end()) continue;
        tried.push_back(m);
        const P12Solution fz = solve_p12_frozen(cfg, mats, m, opts.solver);
        if (is_usable(fz)) {
          cands.emplace_back(fz.v, m);
          cand_gap.push_back(0.0);
        }
      }
    } else {
      const P12Solution fz = solve_p12_frozen(cfg, mats, *frozen, opts.solver);
      if (is_usable(fz)) {
        cands.emplace_back(fz.v, *frozen);
        cand_gap.push_back(0.0);
      }
    }

    int feasible = 0;
    std::optional<RisConfiguration> best_ris;
    ConstraintReport best_rep;
    double best = rep.objective;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const auto seed = derive_seed(opts.seed, kRandomizeStream, static_cast<std::uint32_t>(16 * it + c));
      RandomizationResult rr =
          gaussian_randomize(cands[c].first, cands[c].second, cfg, ch, bf, opts.num_gaussian, seed);
      rr.diagnostics.binarity_gap = cand_gap[c];
      rec.randomization.push_back(rr.diagnostics);
      if (!rr.ris) continue;
      ++feasible;
      ConstraintReport r = audit(cfg, ch, *rr.ris, bf, cfg.tol_feas);
      if (r.feasible() && r.objective > best) {
        best = r.objective;
        best_ris = std::move(rr.ris);
        best_rep = std::move(r);
      }
    }
    if (best_ris) {
      ris = std::move(*best_ris);
      rep = std::move(best_rep);
      rec.ris_updated = true;
    }
    rec.rho_after_p12 = rep.objective;
    rec.ris_active_count = ris.active_count();
    rec.wall_time = seconds_since(ti);
    tr.iterations.push_back(std::move(rec));

    if (feasible == 0) {
      tr.status = RunStatus::stalled;
      tr.message = "no feasible randomization candidate; previous RIS state kept";
      break;
    }
    if (it > 1 && std::abs(rep.objective - prev) <= opts.eps_conv * std::abs(prev)) {
      tr.status = RunStatus::converged;
      break;
    }
    prev = rep.objective;
  }

  tr.bf = std::move(bf);
  tr.ris = std::move(ris);
  tr.report = audit(cfg, ch, tr.ris, tr.bf, cfg.tol_feas);
  tr.objective = tr.report.objective;
  if (!tr.report.feasible()) {
    tr.status = RunStatus::failed;
    tr.message = "final state fails the constraint audit";
  }
  tr.wall_time = seconds_since(t0);
  return tr;
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::proposed: return "proposed";
    case Scheme::fixed_mode: return "fixed_mode";
    case Scheme::full_passive: return "full_passive";
    case Scheme::full_active: return "full_active";
  }
  return "unknown";
}

Scheme scheme_from_string(const std::string& name) {
  for (Scheme s : {Scheme::proposed, Scheme::fixed_mode, Scheme::full_passive, Scheme::full_active})
    if (to_string(s) == name) return s;
  throw ValidationError("unknown scheme '" + name + "'");
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iter: return "max_iter";
    case RunStatus::stalled: return "stalled";
    case RunStatus::infeasible: return "infeasible";
    case RunStatus::failed: return "failed";
  }
  return "unknown";
}

void RunOptions::validate() const {
  if (!(eps_conv > 0)) throw ValidationError("RunOptions: eps_conv must be > 0");
  if (max_outer_iter < 1) throw ValidationError("RunOptions: max_outer_iter must be >= 1");
  if (max_init_retries < 0) throw ValidationError("RunOptions: max_init_retries must be >= 0");
  if (num_gaussian < 1) throw ValidationError("RunOptions: num_gaussian must be >= 1");
  if (fixed_active < 0) throw ValidationError("RunOptions: fixed_active must be >= 0");
  if (!(sca.gap_tol > 0) || sca.max_solves < 1) throw ValidationError("RunOptions: invalid SCA stopping rule");
  if (!(sca.mu_init_factor > 0) || !(sca.mu_growth > 1) || !(sca.mu_cap_factor >= 1))
    throw ValidationError("RunOptions: invalid SCA penalty schedule");
  if (!(solver.tol > 0) || solver.max_iter < 1) throw ValidationError("RunOptions: invalid solver options");
}

nlohmann::json run_options_to_json(const RunOptions& o) {
  return {{"eps_conv", o.eps_conv},
          {"max_outer_iter", o.max_outer_iter},
          {"max_init_retries", o.max_init_retries},
          {"num_gaussian", o.num_gaussian},
          {"fixed_active", o.fixed_active},
          {"sca",
           {{"gap_tol", o.sca.gap_tol},
            {"max_solves", o.sca.max_solves},
            {"mu_init_factor", o.sca.mu_init_factor},
            {"mu_growth", o.sca.mu_growth},
            {"mu_cap_factor", o.sca.mu_cap_factor}}},
          {"solver", {{"tol", o.solver.tol}, {"max_iter", o.solver.max_iter}}}};
}

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::none_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; }))
      throw ValidationError(std::string("unknown key '") + k + "' in " + where);
  }
}

}  // namespace

RunOptions run_options_from_json(const nlohmann::json& j, const RunOptions& base) {
  check_keys(j, {"eps_conv", "max_outer_iter", "max_init_retries", "num_gaussian", "fixed_active", "sca", "solver"},
             "run options");
  RunOptions o = base;
  o.eps_conv = j.value("eps_conv", o.eps_conv);
  o.max_outer_iter = j.value("max_outer_iter", o.max_outer_iter);
  o.max_init_retries = j.value("max_init_retries", o.max_init_retries);
  o.num_gaussian = j.value("num_gaussian", o.num_gaussian);
  o.fixed_active = j.value("fixed_active", o.fixed_active);
  if (j.contains("sca")) {
    const auto& s = j["sca"];
    check_keys(s, {"gap_tol", "max_solves", "mu_init_factor", "mu_growth", "mu_cap_factor"}, "run.sca");
    o.sca.gap_tol = s.value("gap_tol", o.sca.gap_tol);
    o.sca.max_solves = s.value("max_solves", o.sca.max_solves);
    o.sca.mu_init_factor = s.value("mu_init_factor", o.sca.mu_init_factor);
    o.sca.mu_growth = s.value("mu_growth", o.sca.mu_growth);
    o.sca.mu_cap_factor = s.value("mu_cap_factor", o.sca.mu_cap_factor);
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, {"tol", "max_iter"}, "run.solver");
    o.solver.tol = s.value("tol", o.solver.tol);
    o.solver.max_iter = s.value("max_iter", o.solver.max_iter);
  }
  o.sca.solver.tol = o.solver.tol;
  o.sca.solver.max_iter = o.solver.max_iter;
  o.validate();
  return o;
}

RisConfiguration initialize(const SystemConfig& cfg, const ChannelSet& ch, std::uint64_t seed) {
  (void)ch;
  return RisConfiguration::all_passive(random_phases(cfg.num_elements(), derive_seed(seed, kInitStream)));
}

std::optional<Eigen::VectorXi> frozen_modes(Scheme s, const SystemConfig& cfg, int fixed_active) {
  const int n = cfg.num_elements();
  switch (s) {
    case Scheme::proposed: return std::nullopt;
    case Scheme::full_passive: return Eigen::VectorXi::Zero(n);
    case Scheme::full_active: return Eigen::VectorXi::Ones(n);
    case Scheme::fixed_mode: {
      if (fixed_active < 0 || fixed_active > n)
        throw ValidationError("fixed_mode: active count must lie in [0, N]");
      Eigen::VectorXi m = Eigen::VectorXi::Zero(n);
      m.head(fixed_active).setOnes();
      return m;
    }
  }
  return std::nullopt;
}

SolveTrace run_algorithm1(const SystemConfig& cfg, const ChannelSet& ch, const RunOptions& opts) {
  return run_loop(Scheme::proposed, cfg, ch, opts);
}

SolveTrace run_baseline(Scheme scheme, const SystemConfig& cfg, const ChannelSet& ch,
                        const RunOptions& opts) {
  if (scheme == Scheme::proposed) throw ValidationError("run_baseline: 'proposed' is not a baseline");
  return run_loop(scheme, cfg, ch, opts);
}

SolveTrace run_scheme(Scheme scheme, const SystemConfig& cfg, const ChannelSet& ch,
                      const RunOptions& opts) {
  return scheme == Scheme::proposed ? run_algorithm1(cfg, ch, opts) : run_baseline(scheme, cfg, ch, opts);
}

nlohmann::json SolveTrace::to_json() const {
  nlohmann::json its = nlohmann::json::array();
  for (const auto& r : iterations) {
    nlohmann::json diag = nlohmann::json::array();
    for (const auto& d : r.randomization) diag.push_back(d.to_json());
    its.push_back({{"iter", r.iter},
                   {"rho_after_p11", r.rho_after_p11},
                   {"rho_after_p12", r.rho_after_p12},
                   {"binarity_gap", r.binarity_gap},
                   {"ris_active_count", r.ris_active_count},
                   {"ris_updated", r.ris_updated},
                   {"wall_time", r.wall_time},
                   {"randomization", diag}});
  }
  nlohmann::json prov = provenance(config, seed);
  prov["channel_seed"] = channel_seed;
  return {{"provenance", prov},
          {"options", run_options_to_json(options)},
          {"scheme", to_string(scheme)},
          {"status", to_string(status)},
          {"message", message},
          {"init_retries", init_retries},
          {"wall_time", wall_time},
          {"config", config_to_json(config)},
          {"iterations", its},
          {"objective", objective},
          {"solution", {{"beamforming", beamforming_to_json(bf)}, {"ris", ris_to_json(ris)}}},
          {"report", report.to_json()}};
}

SolveTrace SolveTrace::from_json(const nlohmann::json& j) {
  SolveTrace t;
  t.scheme = scheme_from_string(j.at("scheme").get<std::string>());
  t.seed = j.at("provenance").at("seed").get<std::uint64_t>();
  t.channel_seed = j.at("provenance").at("channel_seed").get<std::uint64_t>();
  t.options = run_options_from_json(j.at("options"));
  t.options.seed = t.seed;
  const auto st = j.at("status").get<std::string>();
  bool known = false;
  for (RunStatus s : {RunStatus::converged, RunStatus::max_iter, RunStatus::stalled, RunStatus::infeasible,
                      RunStatus::failed})
    if (to_string(s) == st) {
      t.status = s;
      known = true;
    }
  if (!known) throw ValidationError("SolveTrace: unknown status '" + st + "'");
  t.message = j.at("message").get<std::string>();
  t.init_retries = j.at("init_retries").get<int>();
  t.wall_time = j.at("wall_time").get<double>();
  t.config = config_from_json(j.at("config"));
  for (const auto& r : j.at("iterations")) {
    IterationRecord rec;
    rec.iter = r.at("iter").get<int>();
    rec.rho_after_p11 = r.at("rho_after_p11").get<double>();
    rec.rho_after_p12 = r.at("rho_after_p12").get<double>();
    rec.binarity_gap = r.at("binarity_gap").get<double>();
    rec.ris_active_count = r.at("ris_active_count").get<int>();
    rec.ris_updated = r.at("ris_updated").get<bool>();
    rec.wall_time = r.at("wall_time").get<double>();
    for (const auto& d : r.at("randomization")) {
      RandomizationDiagnostics rd;
      rd.samples = d.at("samples").get<int>();
      rd.discarded = d.at("discarded").get<int>();
      rd.feasible = d.at("feasible_candidates").get<int>();
      rd.rank = d.at("rank").get<int>();
      rd.eigen_shortcut = d.at("eigen_shortcut").get<bool>();
      rd.selected_objective = d.at("selected_objective").get<double>();
      rd.selected_index = d.at("selected_index").get<int>();
      rd.binarity_gap = d.at("binarity_gap").get<double>();
      rec.randomization.push_back(rd);
    }
    t.iterations.push_back(std::move(rec));
  }
  t.objective = j.at("objective").get<double>();
  t.bf = beamforming_from_json(j.at("solution").at("beamforming"));
  t.ris = ris_from_json(j.at("solution").at("ris"));
  t.report = ConstraintReport::from_json(j.at("report"));
  return t;
}

}  // namespace hris
