// SPDX-License-Identifier: Apache-2.0
#include "hris/bs_stage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hris {

using conic::LinearExpr;
using conic::Sense;

std::pair<conic::SdpProblem, P11Context> build_p11(const SystemConfig& cfg, const ChannelSet& ch,
                                                   const RisConfiguration& ris) {
  cfg.validate();
  ch.validate(cfg);
  ris.validate(cfg.beta_max);
  if (ris.num_elements() != cfg.num_elements())
    throw ValidationError("build_p11: RIS configuration has wrong length");

  const int m = cfg.num_antennas;
  const int n = cfg.num_elements();
  const double unit = P11Context::kPowerUnit;
  P11Context ctx;

  RVec active_gain2(n);  // q_n beta_n^2
  for (int i = 0; i < n; ++i) active_gain2(i) = ris.mode(i) ? ris.amplitude(i) * ris.amplitude(i) : 0.0;

  for (int k = 0; k < cfg.num_users; ++k) {
    ctx.user_channel.push_back(equivalent_user_channel(ch, ris, k));
    const double ris_noise = cfg.ris_noise_power * active_gain2.dot(ch.ris_user[k].cwiseAbs2());
    ctx.noise.push_back(ris_noise + cfg.user_noise_power[k]);
    ctx.constrained.push_back(cfg.sinr_min[k] > 0.0);
  }
  for (int l = 0; l < cfg.num_targets; ++l)
    ctx.target_channel.push_back(cascaded_target_channel(ch, ris, ch.target_steering[l]));
  ctx.ris_power_map = ch.bs_ris.adjoint() * active_gain2.asDiagonal() * ch.bs_ris;
  ctx.ris_power_map = 0.5 * (ctx.ris_power_map + ctx.ris_power_map.adjoint());
  ctx.frob_const = cfg.ris_noise_power * active_gain2.sum();

  double gmax = 0.0;
  for (const auto& h : ctx.target_channel) gmax = std::max(gmax, h.squaredNorm());
  ctx.gain_scale = gmax > 0 ? gmax * cfg.bs_power / unit : 1.0;

  conic::SdpProblem p;
  for (int k = 0; k < cfg.num_users; ++k) ctx.beam_block.push_back(p.add_psd_block(2 * m));
  ctx.sensing_block = p.add_psd_block(2 * m);
  ctx.rho_index = p.add_free(1);
  p.objective.free_var(ctx.rho_index, 1.0);

  // tr(E V) for Hermitian E is <herm_to_real(E)/2, X> on the embedding.
  auto herm_inner = [](LinearExpr& e, int block, const CMat& h, double scale) {
    e.psd_inner(block, (0.5 * scale) * conic::herm_to_real(h));
  };
  std::vector<int> all_blocks = ctx.beam_block;
  all_blocks.push_back(ctx.sensing_block);

  for (int l = 0; l < cfg.num_targets; ++l) {
    const CVec& h = ctx.target_channel[l];
    LinearExpr e;
    for (int b : all_blocks) herm_inner(e, b, h * h.adjoint(), 1.0 / ctx.gain_scale);
    e.free_var(ctx.rho_index, -1.0);
    p.add_constraint(std::move(e), Sense::ge, 0.0, "gain[" + std::to_string(l) + "]");
  }

  {
    LinearExpr e;
    const RMat half_eye = 0.5 * RMat::Identity(2 * m, 2 * m);
    for (int b : all_blocks) e.psd_inner(b, half_eye / (cfg.bs_power / unit));
    p.add_constraint(std::move(e), Sense::le, 1.0, "bs_power");
  }

  {
    // tr(C R) <= Pmax - frob, normalised by the budget
    LinearExpr e;
    const double budget = cfg.ris_power_max / unit;
    for (int b : all_blocks) herm_inner(e, b, ctx.ris_power_map, 1.0 / budget);
    const double rhs = (cfg.ris_power_max - ctx.frob_const) / cfg.ris_power_max;
    p.add_constraint(std::move(e), Sense::le, rhs, "ris_power");
  }

  for (int k = 0; k < cfg.num_users; ++k) {
    if (!ctx.constrained[k]) continue;
    const double g = cfg.sinr_min[k];
    const CVec& h = ctx.user_channel[k];
    const CMat hh = h * h.adjoint();
    const double scale = 1.0 / (ctx.noise[k] / unit);
    LinearExpr e;
    for (int i = 0; i < cfg.num_users; ++i) {
      const double coef = (i == k ? (1.0 + g) / g : 0.0) - 1.0;
      if (coef != 0.0) herm_inner(e, ctx.beam_block[i], hh, coef * scale);
    }
    p.add_constraint(std::move(e), Sense::ge, 1.0, "sinr[" + std::to_string(k) + "]");
  }
  return {std::move(p), std::move(ctx)};
}

P11Result solve_p11(const SystemConfig& cfg, const ChannelSet& ch, const RisConfiguration& ris,
                    const conic::SolverOptions& opts) {
  auto [p, ctx] = build_p11(cfg, ch, ris);
  const conic::SdpSolution s = conic::solve_sdp(p, opts);
  P11Result r;
  r.status = s.status;
  r.residuals = s.residuals;
  r.iterations = s.iterations;
  if (s.status == conic::SolveStatus::optimal || s.status == conic::SolveStatus::numerical_failure) {
    const double unit = P11Context::kPowerUnit;
    for (int b : ctx.beam_block) r.beam_cov.push_back(unit * conic::real_to_herm(s.psd[b]));
    r.sensing_cov = unit * conic::real_to_herm(s.psd[ctx.sensing_block]);
    CMat total = r.sensing_cov;
    for (const auto& w : r.beam_cov) total += w;
    r.rho = std::numeric_limits<double>::infinity();
    for (const auto& h : ctx.target_channel)
      r.rho = std::min(r.rho, (h.adjoint() * total * h)(0).real());
  }
  r.ctx = std::move(ctx);
  return r;
}

BeamformingSolution rank_one_construct(const std::vector<CMat>& beam_cov, const CMat& sensing_cov,
                                       const std::vector<CVec>& user_channel,
                                       const std::vector<bool>& constrained) {
  const std::size_t k_count = beam_cov.size();
  if (user_channel.size() != k_count || (!constrained.empty() && constrained.size() != k_count))
    throw ValidationError("rank_one_construct: one covariance and one channel per user required");
  const Eigen::Index m = sensing_cov.rows();
  BeamformingSolution bf;
  bf.sensing_cov = sensing_cov;
  for (std::size_t k = 0; k < k_count; ++k) {
    const CMat& w = beam_cov[k];
    const CVec& h = user_channel[k];
    if (w.rows() != m || w.cols() != m || h.size() != m)
      throw ValidationError("rank_one_construct: dimension mismatch");
    bf.sensing_cov += w;
    if (!constrained.empty() && !constrained[k]) {
      bf.beams.push_back(CVec::Zero(m));
      continue;
    }
    const CVec wh = w * h;
    const double q = h.dot(wh).real();
    const double tol = 1e-14 * std::max(w.trace().real(), 0.0) * h.squaredNorm();
    if (!(q > tol) || !std::isfinite(q))
      throw DomainError("rank_one_construct: user " + std::to_string(k) + " receives no power");
    bf.beams.push_back(wh / std::sqrt(q));
  }
  for (const auto& b : bf.beams) bf.sensing_cov -= b * b.adjoint();
  bf.sensing_cov = 0.5 * (bf.sensing_cov + bf.sensing_cov.adjoint());
  return bf;
}

}  // namespace hris
