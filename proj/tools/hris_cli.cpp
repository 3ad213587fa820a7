// SPDX-License-Identifier: Apache-2.0
// Command-line front end: run, sweep, beampattern, oracle, audit.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hris/bench.hpp"
#include "hris/bs_stage.hpp"
#include "hris/optimizer.hpp"
#include "hris/ris_stage.hpp"
#include "hris/serialize.hpp"

namespace fs = std::filesystem;
using namespace hris;
using nlohmann::json;

namespace {

constexpr int kExitAuditFailed = 1;
constexpr int kExitHarness = 2;

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out = ".";
  int workers = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Scenario JSON (defaults to the built-in scenario)");
  cmd->add_option("--seed", c.seed, "Channel and algorithm seed (seed base for sweeps)");
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--workers", c.workers, "Worker threads for independent runs")->check(CLI::PositiveNumber);
}

bench::Scenario scenario(const Common& c) {
  return c.config.empty() ? bench::Scenario{default_config(), RunOptions{}} : bench::load_scenario(c.config);
}

fs::path out_dir(const Common& c) {
  fs::path p(c.out);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ValidationError("grid value '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("grid must list at least one value");
  return out;
}

std::string run_tag(Scheme s, std::uint64_t seed) { return to_string(s) + "_seed" + std::to_string(seed); }

json randomization_json(const SolveTrace& t) {
  json out = json::array();
  for (const auto& r : t.iterations) {
    json d = json::array();
    for (const auto& x : r.randomization) d.push_back(x.to_json());
    out.push_back({{"iter", r.iter}, {"candidates", d}});
  }
  return out;
}

void print_summary(const SolveTrace& t) {
  std::printf("%s seed=%llu status=%s objective=%.9g iterations=%d active=%d time=%.2fs%s%s\n",
              to_string(t.scheme).c_str(), static_cast<unsigned long long>(t.seed), to_string(t.status).c_str(),
              t.objective, t.outer_iterations(), t.ris.active_count(), t.wall_time, t.message.empty() ? "" : " : ",
              t.message.c_str());
}

SolveTrace run_one(const bench::Scenario& sc, Scheme scheme, std::uint64_t seed, ChannelSet* ch_out = nullptr) {
  const ChannelSet ch = generate_channels(sc.cfg, seed);
  RunOptions opts = sc.options;
  opts.seed = seed;
  SolveTrace t = run_scheme(scheme, sc.cfg, ch, opts);
  if (ch_out) *ch_out = ch;
  return t;
}

int cmd_run(const Common& c, const std::string& scheme_name, int trials, bool dump_sdp) {
  const bench::Scenario sc = scenario(c);
  const Scheme scheme = scheme_from_string(scheme_name);
  const fs::path dir = out_dir(c);
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(t);
    ChannelSet ch;
    const SolveTrace tr = run_one(sc, scheme, seed, &ch);
    const std::string tag = run_tag(scheme, seed);
    write_json(dir / ("trace_" + tag + ".json"), tr.to_json());
    write_json(dir / ("report_" + tag + ".json"), tr.report.to_json());
    write_json(dir / ("randomization_" + tag + ".json"), randomization_json(tr));
    if (dump_sdp) {
      std::ostringstream p11, p12;
      build_p11(sc.cfg, ch, tr.ris).first.dump(p11);
      const P12Matrices mats = build_p12_matrices(sc.cfg, ch, tr.bf);
      build_p12(sc.cfg, mats, RVec::Constant(sc.cfg.num_elements(), 0.5), 0.0).first.dump(p12);
      write_text(dir / ("p11_" + tag + ".sdp"), p11.str());
      write_text(dir / ("p12_" + tag + ".sdp"), p12.str());
    }
    print_summary(tr);
  }
  return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& grid, int trials,
              const std::string& schemes, bool timing, bool traces) {
  bench::SweepSpec spec;
  spec.base = scenario(c);
  spec.param = bench::sweep_param_from_string(param);
  spec.grid = parse_grid(grid);
  spec.trials = trials;
  spec.schemes.clear();
  for (const auto& s : split(schemes)) spec.schemes.push_back(scheme_from_string(s));
  spec.seed_base = c.seed;
  spec.workers = c.workers;
  spec.validate();

  const fs::path dir = out_dir(c);
  bench::TraceSink sink;
  if (traces) {
    fs::create_directories(dir / "traces");
    sink = [&](const bench::SweepRow& r, const SolveTrace& t) {
      std::ostringstream name;
      name << "trace_g" << r.grid_index << "_" << run_tag(r.scheme, r.seed) << ".json";
      write_json(dir / "traces" / name.str(), t.to_json());
    };
  }
  const auto rows = bench::run_sweep(spec, sink);
  std::ostringstream csv, summary;
  bench::write_sweep_csv(csv, rows, spec.param, timing);
  write_text(dir / "sweep.csv", csv.str());
  const auto stats = bench::summarize(rows);
  bench::write_summary_csv(summary, stats, spec.param);
  write_text(dir / "summary.csv", summary.str());
  if (spec.param == bench::SweepParam::P_ris_max &&
      std::find(spec.schemes.begin(), spec.schemes.end(), Scheme::proposed) != spec.schemes.end()) {
    std::ostringstream ratio;
    bench::write_active_ratio_csv(ratio, bench::active_ratio(rows, spec.base.cfg.num_elements()));
    write_text(dir / "active_ratio.csv", ratio.str());
  }
  std::cout << summary.str();
  int errors = 0;
  for (const auto& r : rows) {
    if (r.status != "error") continue;
    if (errors++ == 0)
      std::fprintf(stderr, "%s=%g trial %d %s: %s\n", bench::to_string(spec.param).c_str(), r.value, r.trial,
                   to_string(r.scheme).c_str(), r.message.c_str());
  }
  if (errors > 0) {
    std::fprintf(stderr, "%d run(s) failed with an error\n", errors);
    return kExitHarness;
  }
  return 0;
}

int cmd_beampattern(const Common& c, const std::string& scheme_name, int grid_res) {
  const bench::Scenario sc = scenario(c);
  const Scheme scheme = scheme_from_string(scheme_name);
  ChannelSet ch;
  const SolveTrace tr = run_one(sc, scheme, c.seed, &ch);
  print_summary(tr);
  if (!tr.report.feasible()) {
    std::fprintf(stderr, "run has no audited feasible solution; no beampattern written\n");
    return kExitHarness;
  }
  const fs::path dir = out_dir(c);
  const bench::BeampatternGrid g = bench::beampattern_grid(sc.cfg, ch, tr.ris, tr.bf, grid_res);
  std::ostringstream csv;
  bench::write_beampattern_csv(csv, g);
  const std::string tag = run_tag(scheme, c.seed);
  write_text(dir / ("beampattern_" + tag + ".csv"), csv.str());
  write_json(dir / ("trace_" + tag + ".json"), tr.to_json());
  for (const auto& p : bench::local_maxima(g.gain, sc.cfg.num_targets))
    std::printf("peak azimuth=%.1f deg elevation=%.1f deg gain=%.4f\n", g.azimuth[p.i] * 180.0 / kPi,
                g.elevation[p.j] * 180.0 / kPi, p.value);
  return 0;
}

int cmd_oracle(const Common& c, const std::string& grid, bool passive_only, const std::string& compare) {
  const bench::Scenario sc = scenario(c);
  const auto pts = parse_grid(grid);
  if (pts.size() != 2) throw ValidationError("oracle --grid takes PHASE_POINTS,BETA_POINTS");
  bench::OracleOptions o;
  o.phase_points = static_cast<int>(pts[0]);
  o.beta_points = static_cast<int>(pts[1]);
  o.passive_only = passive_only;
  if (o.phase_points != pts[0] || o.beta_points != pts[1]) throw ValidationError("oracle grid sizes must be integers");
  const ChannelSet ch = generate_channels(sc.cfg, c.seed);
  const bench::OracleResult r = bench::brute_force_oracle(sc.cfg, ch, o);
  json j = r.to_json();
  j["provenance"] = provenance(sc.cfg, c.seed);
  j["phase_points"] = o.phase_points;
  j["beta_points"] = o.beta_points;
  j["passive_only"] = passive_only;
  std::printf("oracle seed=%llu feasible=%d objective=%.9g candidates=%ld solves=%ld\n",
              static_cast<unsigned long long>(c.seed), r.feasible ? 1 : 0, r.objective, r.candidates, r.solves);
  if (!compare.empty()) {
    const Scheme scheme = scheme_from_string(compare);
    RunOptions opts = sc.options;
    opts.seed = c.seed;
    const SolveTrace t = run_scheme(scheme, sc.cfg, ch, opts);
    print_summary(t);
    const double ratio = r.feasible && r.objective > 0 ? t.objective / r.objective : 0.0;
    j["comparison"] = {{"scheme", to_string(scheme)}, {"objective", t.objective}, {"ratio", ratio}};
    std::printf("ratio=%.6f\n", ratio);
  }
  write_json(out_dir(c) / ("oracle_seed" + std::to_string(c.seed) + ".json"), j);
  return 0;
}

int cmd_audit(const std::string& trace_path, const std::string& out) {
  std::ifstream in(trace_path);
  if (!in) throw ValidationError("cannot open trace '" + trace_path + "'");
  json j;
  in >> j;
  const SolveTrace t = SolveTrace::from_json(j);
  const ChannelSet ch = generate_channels(t.config, t.channel_seed);
  const ConstraintReport rep = audit(t.config, ch, t.ris, t.bf, t.config.tol_feas);
  const double diff = std::abs(rep.objective - t.objective);
  const bool reproduced = diff <= 1e-9 * std::max(std::abs(t.objective), 1e-300);
  json r = rep.to_json();
  r["recorded_objective"] = t.objective;
  r["objective_reproduced"] = reproduced;
  if (out.empty())
    std::cout << r.dump(2) << "\n";
  else
    write_json(out, r);
  std::fprintf(stderr, "audit: feasible=%d objective=%.9g recorded=%.9g reproduced=%d\n", rep.feasible() ? 1 : 0,
               rep.objective, t.objective, reproduced ? 1 : 0);
  return rep.feasible() && reproduced ? 0 : kExitAuditFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid active/passive RIS ISAC design: runs, sweeps and audits"};
  app.require_subcommand(1);

  Common c;
  std::string scheme = "proposed";
  int trials = 1;
  bool dump_sdp = false;
  auto* run = app.add_subcommand("run", "Solve one scenario (one trace per trial)");
  add_common(run, c);
  run->add_option("--scheme", scheme, "proposed, fixed_mode, full_passive or full_active")->capture_default_str();
  run->add_option("--trials", trials, "Consecutive seeds to run")->check(CLI::PositiveNumber);
  run->add_flag("--dump-sdp", dump_sdp, "Write the final BS and RIS stage programs as sparse triplets");

  std::string param = "N", grid, schemes = "proposed,fixed_mode,full_passive,full_active";
  bool timing = false, traces = false;
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over one parameter");
  add_common(sweep, c);
  sweep->add_option("--param", param, "N, P_ris_max (dBm), Gamma (dB), M or L")->capture_default_str();
  sweep->add_option("--grid", grid, "Comma-separated parameter values")->required();
  sweep->add_option("--trials", trials, "Trials per grid value")->check(CLI::PositiveNumber);
  sweep->add_option("--scheme", schemes, "Comma-separated schemes")->capture_default_str();
  sweep->add_flag("--timing", timing, "Add a wall_time column (output is then not byte-reproducible)");
  sweep->add_flag("--traces", traces, "Write one JSON trace per run under traces/");

  int grid_res = 91;
  auto* beam = app.add_subcommand("beampattern", "Solve, then tabulate the normalised beampattern");
  add_common(beam, c);
  beam->add_option("--scheme", scheme, "Scheme to solve with")->capture_default_str();
  beam->add_option("--grid", grid_res, "Points per angle axis")->check(CLI::Range(2, 10000))->capture_default_str();

  std::string oracle_grid = "64,8", compare;
  bool passive_only = false;
  auto* oracle = app.add_subcommand("oracle", "Enumeration oracle for N <= 3");
  add_common(oracle, c);
  oracle->add_option("--grid", oracle_grid, "PHASE_POINTS,BETA_POINTS")->capture_default_str();
  oracle->add_option("--scheme", compare, "Also run this scheme and report the ratio");
  oracle->add_flag("--passive-only", passive_only, "Restrict the search to passive elements");

  std::string trace_path, audit_out;
  auto* aud = app.add_subcommand("audit", "Re-audit a saved trace against regenerated channels");
  aud->add_option("trace", trace_path, "Trace JSON written by run, sweep or beampattern")->required();
  aud->add_option("--out", audit_out, "Write the report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(c, scheme, trials, dump_sdp);
    if (sweep->parsed()) return cmd_sweep(c, param, grid, trials, schemes, timing, traces);
    if (beam->parsed()) return cmd_beampattern(c, scheme, grid_res);
    if (oracle->parsed()) return cmd_oracle(c, oracle_grid, passive_only, compare);
    if (aud->parsed()) return cmd_audit(trace_path, audit_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitHarness;
  }
  return kExitHarness;
}
