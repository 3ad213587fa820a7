// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "hris/bs_stage.hpp"
#include "hris/ris_stage.hpp"

using namespace hris;

namespace {

BeamformingSolution solved_bf(const SystemConfig& cfg, const ChannelSet& ch, std::uint64_t seed) {
  const P11Result r = solve_p11(cfg, ch, RisConfiguration::all_passive(random_phases(cfg.num_elements(), seed)));
  REQUIRE(r.status == conic::SolveStatus::optimal);
  return rank_one_construct(r.beam_cov, r.sensing_cov, r.ctx.user_channel, r.ctx.constrained);
}

CVec lifted(const RisConfiguration& ris) {
  const int n = ris.num_elements();
  CVec v(n + 1);
  v.head(n) = ris.coefficients();
  v(n) = 1.0;
  return v;
}

// Exhaustive search over modes, a phase grid and an amplitude grid for
// active elements, with the beamformers held fixed. Uses only the
// free-function evaluators.
double enumerate_ris(const SystemConfig& cfg, const ChannelSet& ch, const BeamformingSolution& bf,
                     int phase_points, int beta_points) {
  const int n = cfg.num_elements();
  double best = -1.0;
  RisConfiguration r;
  r.mode.resize(n);
  r.amplitude.resize(n);
  r.phase.resize(n);
  for (int mask = 0; mask < (1 << n); ++mask) {
    int na = 0;
    for (int i = 0; i < n; ++i) {
      r.mode(i) = (mask >> i) & 1;
      na += r.mode(i);
    }
    long combos = 1;
    for (int i = 0; i < n; ++i) combos *= phase_points * (r.mode(i) ? beta_points : 1);
    for (long c = 0; c < combos; ++c) {
      long rest = c;
      for (int i = 0; i < n; ++i) {
        r.phase(i) = kTwoPi * (1 + rest % phase_points) / phase_points;
        rest /= phase_points;
        if (r.mode(i)) {
          r.amplitude(i) = cfg.beta_max * (1 + rest % beta_points) / beta_points;
          rest /= beta_points;
        } else {
          r.amplitude(i) = 1.0;
        }
      }
      bool ok = true;
      for (int k = 0; k < cfg.num_users && ok; ++k)
        ok = cu_sinr(cfg, ch, r, bf, k) >= cfg.sinr_min[k] * (1 - 1e-6);
      if (na > 0) {
        ok = ok && ris_output_power(cfg, ch, r, bf) <= cfg.ris_power_max * (1 + 1e-6);
        for (int l = 0; l < cfg.num_targets && ok; ++l)
          ok = ris_noise_at_target(cfg, r, ch, l) <= cfg.ris_noise_max * (1 + 1e-6);
      }
      if (!ok) continue;
      double g = std::numeric_limits<double>::infinity();
      for (int l = 0; l < cfg.num_targets; ++l) g = std::min(g, beampattern_gain(ch, r, bf, l));
      best = std::max(best, g);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("P1.2 matrices with zero channels") {
  const SystemConfig cfg = test::small_config(3, 2, 2, 2, 2);
  ChannelSet ch = generate_channels(cfg, 1);
  ch.bs_ris.setZero();
  for (auto& h : ch.bs_user) h.setZero();
  for (auto& h : ch.ris_user) h.setZero();
  std::mt19937_64 rng(1);
  const P12Matrices m = build_p12_matrices(cfg, ch, test::random_bf(cfg, 0.1, rng));
  for (const auto& r : m.rbar_tar) CHECK(r.norm() == 0.0);
  for (const auto& row : m.rbar_cu)
    for (const auto& r : row) CHECK(r.norm() == 0.0);
  CHECK((m.p_ris - cfg.ris_noise_power * CMat::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("P1.2 lifting reproduces the metrics evaluators") {
  const SystemConfig cfg = test::small_config(4, 2, 3, 3, 2);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const ChannelSet ch = generate_channels(cfg, 10 + t);
    const BeamformingSolution bf = test::random_bf(cfg, 0.1, rng);
    const P12Matrices m = build_p12_matrices(cfg, ch, bf);
    const RisConfiguration ris = test::random_ris(6, cfg.beta_max, rng);
    const CVec v = lifted(ris);
    for (int l = 0; l < 2; ++l) {
      CHECK(test::rel_err(v.dot(m.rbar_tar[l] * v).real(), beampattern_gain(ch, ris, bf, l)) < 1e-10);
      const RVec ptar = m.p_tar[l];
      CHECK((ptar.array() - cfg.ris_noise_power).abs().maxCoeff() <= 1e-15 * cfg.ris_noise_power);
    }
    for (int k = 0; k < 3; ++k) {
      const CVec h = equivalent_user_channel(ch, ris, k);
      for (int j = 0; j < 3; ++j) {
        const double direct = std::norm(ch.bs_user[k].dot(bf.beams[j]));
        CHECK(test::rel_err(v.dot(m.rbar_cu[k][j] * v).real() + direct, std::norm(h.dot(bf.beams[j]))) <
              1e-10);
      }
      CHECK(m.sigma_ris[k].minCoeff() >= 0.0);
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(m.p_ris - cfg.ris_noise_power * CMat::Identity(6, 6));
    CHECK(es.eigenvalues()(0) >= -1e-12 * m.p_ris.norm());
  }
}

TEST_CASE("SCA penalty majorizes the binarity measure") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + t % 16;
    RVec q(n), qp(n);
    for (int i = 0; i < n; ++i) {
      q(i) = u(rng);
      qp(i) = u(rng);
    }
    CHECK(penalty_surrogate(q, qp) >= penalty_exact(q) - 1e-15);
    CHECK(std::abs(penalty_surrogate(qp, qp) - penalty_exact(qp)) <= 1e-12);
  }
  const RVec b = (RVec(3) << 1.0, 0.0, 1.0).finished();
  CHECK(penalty_surrogate(b, b) == 0.0);
}

TEST_CASE("mode rounding") {
  ModeRounding r = round_modes((RVec(2) << 0.98, 0.02).finished());
  CHECK(r.modes == (Eigen::VectorXi(2) << 1, 0).finished());
  CHECK(r.gap == doctest::Approx(0.02).epsilon(1e-12));
  r = round_modes((RVec(1) << 0.5).finished());
  CHECK(r.modes(0) == 1);
  CHECK(r.gap == 0.5);

  CMat v = CMat::Identity(4, 4);
  v(0, 0) = 4.0;
  v(2, 2) = 1.02;
  CHECK(amplitude_modes(v) == (Eigen::VectorXi(3) << 1, 0, 0).finished());
  CHECK(amplitude_modes(v, 0.01) == (Eigen::VectorXi(3) << 1, 0, 1).finished());
}

TEST_CASE("frozen passive program equals a hand-built passive SDP") {
  const SystemConfig cfg = test::small_config(3, 2, 2, 2, 2);
  for (int seed = 0; seed < 3; ++seed) {
    const ChannelSet ch = generate_channels(cfg, 30 + seed);
    const BeamformingSolution bf = solved_bf(cfg, ch, seed);
    const P12Matrices m = build_p12_matrices(cfg, ch, bf);
    const int n = 4, n1 = 5;
    const P12Solution fz = solve_p12_frozen(cfg, m, Eigen::VectorXi::Zero(n));
    REQUIRE(is_usable(fz));

    conic::SdpProblem p;
    const int vb = p.add_psd_block(2 * n1);
    const int rho = p.add_free(1);
    double scale = 0.0;
    for (const auto& r : m.rbar_tar) scale = std::max(scale, r.cwiseAbs().maxCoeff());
    p.objective.free_var(rho, 1.0);
    for (const auto& r : m.rbar_tar) {
      conic::LinearExpr e;
      e.psd_inner(vb, conic::herm_to_real(r / (2 * scale)));
      e.free_var(rho, -1.0);
      p.add_constraint(std::move(e), conic::Sense::ge, 0.0);
    }
    for (int k = 0; k < 2; ++k) {
      CMat a = m.rbar_cu[k][k] / m.sinr_min[k];
      for (int j = 0; j < 2; ++j)
        if (j != k) a -= m.rbar_cu[k][j];
      const double unit = cfg.user_noise_power[k];
      conic::LinearExpr e;
      e.psd_inner(vb, conic::herm_to_real((a + a.adjoint()) / (4 * unit)));
      p.add_constraint(std::move(e), conic::Sense::ge, m.c[k] / unit);
    }
    for (int i = 0; i < n1; ++i) {
      conic::LinearExpr e;
      e.psd(vb, i, i, 0.5).psd(vb, i + n1, i + n1, 0.5);
      p.add_constraint(std::move(e), conic::Sense::eq, 1.0);
    }
    const conic::SdpSolution s = conic::solve_sdp(p);
    REQUIRE(s.status == conic::SolveStatus::optimal);
    CHECK(test::rel_err(s.primal_objective * scale, fz.rho_dd) < 1e-6);
  }
}

TEST_CASE("relaxed solution invariants and upper bound on the N = 2 enumeration") {
  SystemConfig cfg = test::small_config(2, 1, 2, 1, 1);
  int checked = 0, randomized_ok = 0;
  for (int seed = 0; seed < 4; ++seed) {
    const ChannelSet ch = generate_channels(cfg, 40 + seed);
    const BeamformingSolution bf = solved_bf(cfg, ch, seed);
    const P12Matrices m = build_p12_matrices(cfg, ch, bf);
    const P12Solution s = solve_p12(cfg, m, RVec::Constant(2, 0.5), 0.0);
    REQUIRE(is_usable(s));
    CHECK(std::abs(s.v(2, 2).real() - 1.0) < 1e-6);
    for (int i = 0; i < 2; ++i) {
      CHECK(s.v(i, i).real() <= cfg.beta_max * cfg.beta_max * (1 + 1e-6));
      CHECK(std::abs(s.v(i, i).real() - s.z(i, i).real() - (1.0 - s.q(i))) < 1e-9);
      CHECK(s.q(i) >= -1e-9);
      CHECK(s.q(i) <= 1 + 1e-6);
    }
    const double oracle = enumerate_ris(cfg, ch, bf, 64, 8);
    REQUIRE(oracle > 0.0);
    CHECK(s.rho_dd >= oracle * (1 - 1e-6));
    ++checked;

    const ScaResult sca = solve_p12_sca(cfg, m);
    const RandomizationResult rr = gaussian_randomize(sca.solution.v, round_modes(sca.solution.q).modes, cfg,
                                                      ch, bf, 10000, seed);
    if (rr.ris && audit(cfg, ch, *rr.ris, bf, cfg.tol_feas).objective >= 0.95 * oracle) ++randomized_ok;
  }
  CHECK(checked == 4);
  CHECK(randomized_ok >= 3);
}

TEST_CASE("SCA drives the modes to binary and couples Z") {
  const SystemConfig cfg = test::small_config(3, 2, 2, 2, 2);
  for (int seed = 0; seed < 3; ++seed) {
    const ChannelSet ch = generate_channels(cfg, 50 + seed);
    const P12Matrices m = build_p12_matrices(cfg, ch, solved_bf(cfg, ch, seed));
    const ScaResult sca = solve_p12_sca(cfg, m);
    REQUIRE(is_usable(sca.solution));
    CHECK(sca.gap <= 0.01);
    CHECK(is_usable(sca.relaxed));
    CHECK(sca.relaxed.rho_dd >= sca.solution.rho_dd * (1 - 1e-6));
    if (sca.gap <= 1e-3) {
      const RVec& q = sca.solution.q;
      const CMat& v = sca.solution.v;
      const double cbig = cfg.beta_max * cfg.beta_max;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(std::abs(sca.solution.z(i, j) - q(i) * v(i, j) * q(j)) <= 1e-4 * cbig);
    }
  }
}

TEST_CASE("unattainable SINR targets make P1.2 infeasible") {
  SystemConfig cfg = test::small_config(3, 2, 2, 1, 1);
  const ChannelSet ch = generate_channels(cfg, 60);
  const BeamformingSolution bf = solved_bf(cfg, ch, 1);
  cfg.sinr_min[0] = 1e6;
  const P12Matrices m = build_p12_matrices(cfg, ch, bf);
  CHECK(solve_p12(cfg, m, RVec::Constant(4, 0.5), 0.0).status == conic::SolveStatus::infeasible);
}

TEST_CASE("randomization shortcut, guard and determinism") {
  const SystemConfig cfg = test::small_config(3, 2, 2, 2, 2);
  const ChannelSet ch = generate_channels(cfg, 70);
  const BeamformingSolution bf = solved_bf(cfg, ch, 3);
  const P12Matrices m = build_p12_matrices(cfg, ch, bf);
  const Eigen::VectorXi passive = Eigen::VectorXi::Zero(4);

  // rank-one V from the passive configuration the beamformers were solved for
  const RisConfiguration ris = RisConfiguration::all_passive(random_phases(4, 3));
  const CVec v = lifted(ris);
  const RandomizationResult one = gaussian_randomize(v * v.adjoint(), passive, cfg, ch, bf, 100, 1);
  CHECK(one.diagnostics.eigen_shortcut);
  CHECK(one.diagnostics.rank == 1);
  REQUIRE(one.ris);
  CHECK(test::rel_err(audit(cfg, ch, *one.ris, bf, 1.0).objective,
                      std::min(v.dot(m.rbar_tar[0] * v).real(), v.dot(m.rbar_tar[1] * v).real())) < 1e-6);

  // last entry identically zero: every sample is discarded
  CMat z = CMat::Identity(5, 5);
  z(4, 4) = 0.0;
  const RandomizationResult none = gaussian_randomize(z, passive, cfg, ch, bf, 50, 2);
  CHECK(!none.ris);
  CHECK(none.diagnostics.discarded == 50);

  const P12Solution s = solve_p12(cfg, m, RVec::Constant(4, 0.5), 0.0);
  REQUIRE(is_usable(s));
  const Eigen::VectorXi modes = round_modes(s.q).modes;
  const RandomizationResult a = gaussian_randomize(s.v, modes, cfg, ch, bf, 500, 11);
  const RandomizationResult b = gaussian_randomize(s.v, modes, cfg, ch, bf, 500, 11);
  CHECK(a.diagnostics.selected_index == b.diagnostics.selected_index);
  CHECK(a.diagnostics.selected_objective == b.diagnostics.selected_objective);
  if (a.ris) CHECK(audit(cfg, ch, *a.ris, bf, cfg.tol_feas).feasible());

  const auto candidate = project_candidate(v * cd(0.0, 2.0), passive, cfg.beta_max);
  REQUIRE(candidate);
  CHECK((candidate->amplitude.array() == 1.0).all());
  CHECK(!project_candidate(CVec::Zero(5), passive, cfg.beta_max));
}
