// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "hris/bs_stage.hpp"

using namespace hris;

namespace {

double min_eig(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

SystemConfig bs_config(int k, int l) {
  SystemConfig cfg = test::small_config(4, 2, 3, k, l);
  for (double& g : cfg.sinr_min) g = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("P1.1 row structure") {
  for (int k : {1, 2, 3})
    for (int l : {1, 2}) {
      const SystemConfig cfg = bs_config(k, l);
      const ChannelSet ch = generate_channels(cfg, 5);
      const auto [p, ctx] = build_p11(cfg, ch, RisConfiguration::all_passive(random_phases(6, 1)));
      CHECK(static_cast<int>(p.constraints().size()) == 2 + k + l);
      CHECK(static_cast<int>(ctx.beam_block.size()) == k);
      for (int i = 0; i < k; ++i) CHECK(ctx.noise[i] >= cfg.user_noise_power[i]);
      CHECK(ctx.frob_const >= 0.0);
    }
}

TEST_CASE("single target without SINR rows aligns R0 with the target channel") {
  SystemConfig cfg = bs_config(1, 1);
  cfg.sinr_min[0] = 0.0;
  const ChannelSet ch = generate_channels(cfg, 7);
  const RisConfiguration ris = RisConfiguration::all_passive(random_phases(6, 2));
  const P11Result r = solve_p11(cfg, ch, ris);
  REQUIRE(r.status == conic::SolveStatus::optimal);
  const CVec h = cascaded_target_channel(ch, ris, ch.target_steering[0]);
  CHECK(test::rel_err(r.rho, cfg.bs_power * h.squaredNorm()) < 1e-6);

  // rank one, leading eigenvector parallel to h
  CMat total = r.sensing_cov;
  for (const auto& w : r.beam_cov) total += w;
  Eigen::SelfAdjointEigenSolver<CMat> es(total);
  const CVec u = es.eigenvectors().col(3);
  CHECK(std::abs(u.dot(h)) / h.norm() > 1 - 1e-6);
  CHECK(es.eigenvalues()(2) < 1e-6 * es.eigenvalues()(3));

  const BeamformingSolution bf = rank_one_construct(r.beam_cov, r.sensing_cov, r.ctx.user_channel,
                                                    r.ctx.constrained);
  CHECK(bf.beams[0].norm() == 0.0);
}

TEST_CASE("vanishing SINR threshold stays feasible") {
  SystemConfig cfg = bs_config(2, 2);
  for (double& g : cfg.sinr_min) g = 1e-6;
  const ChannelSet ch = generate_channels(cfg, 9);
  const P11Result r = solve_p11(cfg, ch, RisConfiguration::all_passive(random_phases(6, 3)));
  CHECK(r.status == conic::SolveStatus::optimal);
}

TEST_CASE("zero user channels make positive SINR targets infeasible") {
  const SystemConfig cfg = bs_config(2, 1);
  ChannelSet ch = generate_channels(cfg, 11);
  for (auto& h : ch.bs_user) h.setZero();
  for (auto& h : ch.ris_user) h.setZero();
  const P11Result r = solve_p11(cfg, ch, RisConfiguration::all_passive(random_phases(6, 4)));
  CHECK(r.status == conic::SolveStatus::infeasible);
}

TEST_CASE("constructed beamformers preserve the relaxed solution") {
  int solved = 0;
  for (int seed = 0; seed < 12; ++seed) {
    const SystemConfig cfg = bs_config(1 + seed % 3, 1 + seed % 2);
    const ChannelSet ch = generate_channels(cfg, 100 + seed);
    std::mt19937_64 rng(seed);
    RisConfiguration ris = test::random_ris(6, 2.0, rng);
    for (int i = 0; i < 6; ++i) ris.amplitude(i) = ris.mode(i) ? 1.0 + 0.5 * ris.amplitude(i) : 1.0;
    const P11Result r = solve_p11(cfg, ch, ris);
    if (r.status != conic::SolveStatus::optimal) continue;
    ++solved;
    const BeamformingSolution bf = rank_one_construct(r.beam_cov, r.sensing_cov, r.ctx.user_channel,
                                                      r.ctx.constrained);
    CMat relaxed = r.sensing_cov;
    for (const auto& w : r.beam_cov) relaxed += w;
    const double scale = relaxed.norm();
    CHECK((bf.total_covariance() - relaxed).norm() <= 1e-8 * scale);
    CHECK(min_eig(bf.sensing_cov) >= -1e-7 * bf.sensing_cov.trace().real());
    for (int k = 0; k < cfg.num_users; ++k) {
      const CVec& h = r.ctx.user_channel[k];
      const double num_relaxed = (h.adjoint() * r.beam_cov[k] * h)(0).real();
      CHECK(test::rel_err(std::norm(h.dot(bf.beams[k])), num_relaxed) < 1e-8);
      CHECK(cu_sinr(cfg, ch, ris, bf, k) >= cfg.sinr_min[k] * (1 - 1e-6));
    }
    const ConstraintReport rep = audit(cfg, ch, ris, bf, 1e-6);
    CHECK(rep.feasible());
    CHECK(test::rel_err(rep.objective, r.rho) < 1e-6);
  }
  CHECK(solved >= 8);
}

TEST_CASE("more BS power never lowers the relaxed optimum") {
  for (int seed = 0; seed < 4; ++seed) {
    SystemConfig cfg = bs_config(2, 2);
    const ChannelSet ch = generate_channels(cfg, 200 + seed);
    const RisConfiguration ris = RisConfiguration::all_passive(random_phases(6, seed));
    const P11Result a = solve_p11(cfg, ch, ris);
    cfg.bs_power *= 2;
    const P11Result b = solve_p11(cfg, ch, ris);
    REQUIRE(a.status == conic::SolveStatus::optimal);
    REQUIRE(b.status == conic::SolveStatus::optimal);
    CHECK(b.rho >= a.rho * (1 - 1e-7));
    const P11Result c = solve_p11(cfg, ch, ris);
    CHECK(test::rel_err(b.rho, c.rho) < 1e-9);
  }
}

TEST_CASE("rank one construction edge cases") {
  std::mt19937_64 rng(21);
  const CVec w = test::random_cvec(4, rng);
  const CVec h = test::random_cvec(4, rng);
  const CMat r0 = test::random_cmat(4, 2, rng) * test::random_cmat(4, 2, rng).adjoint();
  const CMat r0h = 0.5 * (r0 + r0.adjoint()) + 10.0 * CMat::Identity(4, 4);

  const BeamformingSolution bf = rank_one_construct({w * w.adjoint()}, r0h, {h});
  // fixed point up to a common phase
  const cd ph = w.dot(bf.beams[0]) / w.squaredNorm();
  CHECK(std::abs(std::abs(ph) - 1.0) < 1e-12);
  CHECK((bf.beams[0] - ph * w).norm() < 1e-12 * w.norm());
  CHECK((bf.sensing_cov - r0h).norm() < 1e-12 * r0h.norm());

  const BeamformingSolution none = rank_one_construct({}, r0h, {});
  CHECK(none.beams.empty());
  CHECK((none.sensing_cov - r0h).norm() == 0.0);

  CVec hp = test::random_cvec(4, rng);
  CVec wp = test::random_cvec(4, rng);
  wp -= hp * (hp.dot(wp) / hp.squaredNorm());
  CHECK_THROWS_AS(rank_one_construct({wp * wp.adjoint()}, r0h, {hp}), DomainError);
}
