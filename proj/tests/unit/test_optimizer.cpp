// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "helpers.hpp"
#include "hris/optimizer.hpp"
#include "hris/serialize.hpp"

using namespace hris;

namespace {

SystemConfig opt_config() { return test::small_config(3, 2, 2, 2, 2); }

RunOptions quick_options(std::uint64_t seed) {
  RunOptions o;
  o.seed = seed;
  o.num_gaussian = 2000;
  o.fixed_active = 2;
  return o;
}

void check_monotone(const SolveTrace& t) {
  double prev = -1.0;
  for (const auto& r : t.iterations) {
    CHECK(r.rho_after_p11 >= prev - 1e-6);
    CHECK(r.rho_after_p12 >= r.rho_after_p11 - 1e-6);
    prev = r.rho_after_p12;
  }
}

}  // namespace

TEST_CASE("initialization") {
  const SystemConfig cfg = default_config();
  const ChannelSet ch = generate_channels(cfg, 1);
  const RisConfiguration a = initialize(cfg, ch, 5);
  const RisConfiguration b = initialize(cfg, ch, 5);
  const RisConfiguration c = initialize(cfg, ch, 6);
  CHECK(a.phase == b.phase);
  CHECK(a.phase != c.phase);
  CHECK(a.active_count() == 0);
  CHECK((a.amplitude.array() == 1.0).all());
  CHECK(a.phase.minCoeff() > 0.0);
  CHECK(a.phase.maxCoeff() <= kTwoPi);
  const ConstraintReport rep = audit(cfg, ch, a, BeamformingSolution::zero(cfg), cfg.tol_feas);
  CHECK(rep.at("ris_power").lhs == 0.0);
  CHECK(rep.at("ris_noise[0]").lhs == 0.0);
  CHECK(rep.at("ris_noise[1]").lhs == 0.0);
}

TEST_CASE("scheme modes and option validation") {
  const SystemConfig cfg = default_config();
  CHECK(!frozen_modes(Scheme::proposed, cfg, 12));
  CHECK(frozen_modes(Scheme::full_passive, cfg, 12)->sum() == 0);
  CHECK(frozen_modes(Scheme::full_active, cfg, 12)->sum() == 64);
  const auto fixed = *frozen_modes(Scheme::fixed_mode, cfg, 12);
  CHECK(fixed.head(12).sum() == 12);
  CHECK(fixed.tail(52).sum() == 0);
  CHECK_THROWS_AS(frozen_modes(Scheme::fixed_mode, cfg, 65), ValidationError);

  for (Scheme s : {Scheme::proposed, Scheme::fixed_mode, Scheme::full_passive, Scheme::full_active})
    CHECK(scheme_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(scheme_from_string("hybrid"), ValidationError);

  RunOptions o;
  o.eps_conv = 0.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o = {};
  o.max_outer_iter = 0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
}

TEST_CASE("proposed scheme is monotone, audited and deterministic") {
  const SystemConfig cfg = opt_config();
  for (int seed = 0; seed < 2; ++seed) {
    const ChannelSet ch = generate_channels(cfg, 80 + seed);
    const SolveTrace t = run_algorithm1(cfg, ch, quick_options(seed));
    REQUIRE(t.status != RunStatus::infeasible);
    CHECK(t.status != RunStatus::failed);
    CHECK(t.outer_iterations() >= 1);
    CHECK(t.outer_iterations() <= 30);
    check_monotone(t);
    const ConstraintReport rep = audit(cfg, ch, t.ris, t.bf, cfg.tol_feas);
    CHECK(rep.feasible());
    CHECK(rep.objective == t.objective);
    CHECK(t.iterations.back().rho_after_p12 == doctest::Approx(t.objective).epsilon(1e-12));

    const SolveTrace again = run_algorithm1(cfg, ch, quick_options(seed));
    CHECK(test::rel_err(again.objective, t.objective) < 1e-4);
  }
}

TEST_CASE("trace JSON round trip re-audits to the recorded objective") {
  const SystemConfig cfg = opt_config();
  const ChannelSet ch = generate_channels(cfg, 90);
  const SolveTrace t = run_algorithm1(cfg, ch, quick_options(3));
  const nlohmann::json j = t.to_json();
  CHECK(j.at("provenance").at("config_hash") == config_hash(cfg));
  CHECK(j.at("provenance").at("seed") == 3);
  CHECK(j.at("provenance").at("versions").contains("eigen"));
  const SolveTrace back = SolveTrace::from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.status == t.status);
  CHECK(back.scheme == t.scheme);
  CHECK(back.outer_iterations() == t.outer_iterations());
  CHECK(config_hash(back.config) == config_hash(cfg));
  const ConstraintReport rep = audit(back.config, ch, back.ris, back.bf, cfg.tol_feas);
  CHECK(std::abs(rep.objective - t.objective) <= 1e-9 * t.objective);
  CHECK(back.report.feasible() == t.report.feasible());
  CHECK(back.to_json() == j);
}

TEST_CASE("baseline schemes respect their frozen modes") {
  const SystemConfig cfg = opt_config();
  const ChannelSet ch = generate_channels(cfg, 100);
  const RunOptions o = quick_options(4);

  const SolveTrace passive = run_baseline(Scheme::full_passive, cfg, ch, o);
  REQUIRE(passive.status != RunStatus::infeasible);
  CHECK(passive.ris.active_count() == 0);
  CHECK(passive.report.at("ris_power").lhs == 0.0);
  check_monotone(passive);

  const SolveTrace active = run_baseline(Scheme::full_active, cfg, ch, o);
  CHECK(active.ris.active_count() == 4);
  CHECK(active.report.feasible());
  check_monotone(active);

  const SolveTrace fixed = run_baseline(Scheme::fixed_mode, cfg, ch, o);
  CHECK(fixed.ris.mode == (Eigen::VectorXi(4) << 1, 1, 0, 0).finished());
  CHECK(fixed.report.feasible());

  CHECK_THROWS_AS(run_baseline(Scheme::proposed, cfg, ch, o), ValidationError);
}

TEST_CASE("full active RIS with a vanishing power budget loses its gain") {
  SystemConfig cfg = opt_config();
  const ChannelSet ch = generate_channels(cfg, 110);
  const SolveTrace passive = run_baseline(Scheme::full_passive, cfg, ch, quick_options(5));
  cfg.ris_power_max = 1e-12;
  const SolveTrace active = run_baseline(Scheme::full_active, cfg, ch, quick_options(5));
  REQUIRE(passive.report.feasible());
  REQUIRE(active.report.feasible());
  CHECK(active.ris.amplitude.maxCoeff() < 0.1);
  CHECK(active.objective < 1e-2 * passive.objective);
}

TEST_CASE("unreachable SINR targets exhaust the initialization retries") {
  SystemConfig cfg = opt_config();
  for (double& g : cfg.sinr_min) g = 1e9;
  const ChannelSet ch = generate_channels(cfg, 120);
  RunOptions o = quick_options(6);
  o.max_init_retries = 2;
  const SolveTrace t = run_algorithm1(cfg, ch, o);
  CHECK(t.status == RunStatus::infeasible);
  CHECK(t.init_retries == 2);
  CHECK(t.iterations.empty());
  CHECK(!t.message.empty());
}

TEST_CASE("serialization round trips exactly") {
  std::mt19937_64 rng(7);
  const CVec v = test::random_cvec(5, rng);
  CHECK(cvec_from_json(nlohmann::json::parse(cvec_to_json(v).dump())) == v);
  const CMat m = test::random_cmat(3, 4, rng);
  CHECK(cmat_from_json(nlohmann::json::parse(cmat_to_json(m).dump())) == m);
  const RisConfiguration r = test::random_ris(6, 10.0, rng);
  const RisConfiguration rb = ris_from_json(nlohmann::json::parse(ris_to_json(r).dump()));
  CHECK(rb.mode == r.mode);
  CHECK(rb.amplitude == r.amplitude);
  CHECK(rb.phase == r.phase);
  const SystemConfig cfg = opt_config();
  const BeamformingSolution bf = test::random_bf(cfg, 0.1, rng);
  const BeamformingSolution bb = beamforming_from_json(nlohmann::json::parse(beamforming_to_json(bf).dump()));
  CHECK(bb.beams.size() == bf.beams.size());
  for (std::size_t k = 0; k < bf.beams.size(); ++k) CHECK(bb.beams[k] == bf.beams[k]);
  CHECK(bb.sensing_cov == bf.sensing_cov);

  CHECK_THROWS_AS(cvec_from_json(nlohmann::json{{"re", {1.0}}, {"im", {1.0, 2.0}}}), ValidationError);
  CHECK_THROWS_AS(ris_from_json(nlohmann::json{{"mode", {1}}, {"amplitude", {1.0, 2.0}}, {"phase", {1.0}}}),
                  ValidationError);
}
