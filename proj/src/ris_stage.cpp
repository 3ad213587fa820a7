// SPDX-License-Identifier: Apache-2.0
#include "hris/ris_stage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hris/kernels.hpp"

namespace hris {

using conic::LinearExpr;
using conic::Sense;

P12Matrices build_p12_matrices(const SystemConfig& cfg, const ChannelSet& ch,
                               const BeamformingSolution& bf) {
  cfg.validate();
  ch.validate(cfg);
  bf.validate(cfg);
  const int n = cfg.num_elements();
  const int n1 = n + 1;
  const CMat& g = ch.bs_ris;
  const CMat grg = g * bf.total_covariance() * g.adjoint();

  P12Matrices mats;
  mats.sinr_min = cfg.sinr_min;
  for (int l = 0; l < cfg.num_targets; ++l) {
    const CVec& a = ch.target_steering[l];
    CMat r = CMat::Zero(n1, n1);
    // conj(diag(a)^H G R G^H diag(a)) so that v^H r v is the gain at phi = v
    r.topLeftCorner(n, n) = (a.conjugate().asDiagonal() * grg * a.asDiagonal()).conjugate();
    mats.rbar_tar.push_back(0.5 * (r + r.adjoint()));
    mats.p_tar.push_back(cfg.ris_noise_power * a.cwiseAbs2());
  }
  mats.rbar_cu.resize(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    const CVec& hiu = ch.ris_user[k];
    double others = 0.0, own = 0.0;
    for (int j = 0; j < cfg.num_users; ++j) {
      const CVec& w = bf.beams[j];
      const CVec u = hiu.conjugate().cwiseProduct(g * w);
      const cd s = ch.bs_user[k].dot(w);
      CMat r = CMat::Zero(n1, n1);
      r.topLeftCorner(n, n) = u * u.adjoint();
      r.block(0, n, n, 1) = u * std::conj(s);
      r.block(n, 0, 1, n) = s * u.adjoint();
      mats.rbar_cu[k].push_back(std::move(r));
      if (j == k)
        own = std::norm(s);
      else
        others += std::norm(s);
    }
    const double gamma = cfg.sinr_min[k];
    mats.c.push_back(gamma > 0 ? others - own / gamma + cfg.user_noise_power[k] : 0.0);
    mats.sigma_ris.push_back(cfg.ris_noise_power * hiu.cwiseAbs2());
  }
  mats.p_ris = grg + cfg.ris_noise_power * CMat::Identity(n, n);
  mats.p_ris = 0.5 * (mats.p_ris + mats.p_ris.adjoint());
  return mats;
}

double penalty_exact(const RVec& q) { return (q.array() - q.array().square()).sum(); }

double penalty_surrogate(const RVec& q, const RVec& q_prev) {
  if (q.size() != q_prev.size()) throw ValidationError("penalty_surrogate: length mismatch");
  return (q.array() - q_prev.array().square() - 2.0 * q_prev.array() * (q.array() - q_prev.array()))
      .sum();
}

namespace {

double gain_scale(const P12Matrices& mats) {
  double s = 0.0;
  for (const auto& r : mats.rbar_tar) s = std::max(s, r.trace().real());
  s *= mats.num_elements();
  return s > 0 && std::isfinite(s) ? s : 1.0;
}

// V_nn on the real embedding of an (N+1)-order Hermitian block.
void add_vdiag(LinearExpr& e, int block, int n1, int i, double coef) {
  e.psd(block, i, i, 0.5 * coef).psd(block, i + n1, i + n1, 0.5 * coef);
}

std::pair<conic::SdpProblem, P12Layout> assemble(const SystemConfig& cfg, const P12Matrices& mats,
                                                 const RVec* q_prev, double mu,
                                                 const Eigen::VectorXi* frozen) {
  const int n = mats.num_elements();
  const int n1 = n + 1;
  if (n != cfg.num_elements()) throw ValidationError("build_p12: matrices do not match config");
  if (q_prev && q_prev->size() != n) throw ValidationError("build_p12: q_prev has wrong length");
  if (q_prev && (q_prev->minCoeff() < 0.0 || q_prev->maxCoeff() > 1.0))
    throw ValidationError("build_p12: q_prev must lie in [0,1]");
  if (frozen && frozen->size() != n) throw ValidationError("build_p12: modes have wrong length");

  P12Layout lay;
  lay.gain_scale = gain_scale(mats);
  lay.mu = mu;
  if (q_prev) lay.q_prev = *q_prev;
  if (frozen) lay.frozen = *frozen;
  const bool relaxed = frozen == nullptr;
  const double cbig = cfg.beta_max * cfg.beta_max;

  conic::SdpProblem p;
  lay.v_block = p.add_psd_block(2 * n1);
  lay.q_first = relaxed ? p.add_nonneg(n) : 0;
  lay.rho_index = p.add_free(1);
  const int vb = lay.v_block;
  auto qv = [&](LinearExpr& e, int i, double coef) {
    if (relaxed) e.nonneg(lay.q_first + i, coef);
  };
  // Z_nn = V_nn - 1 + q_n when relaxed; V_nn or 0 when frozen.
  auto active = [&](int i) { return relaxed || (*frozen)(i) == 1; };

  p.objective.free_var(lay.rho_index, 1.0);
  if (relaxed && mu != 0.0)
    for (int i = 0; i < n; ++i) p.objective.nonneg(lay.q_first + i, -mu * (1.0 - 2.0 * (*q_prev)(i)));

  for (int l = 0; l < cfg.num_targets; ++l) {
    LinearExpr e;
    e.psd_inner(vb, (0.5 / lay.gain_scale) * conic::herm_to_real(mats.rbar_tar[l]));
    e.free_var(lay.rho_index, -1.0);
    p.add_constraint(std::move(e), Sense::ge, 0.0, "gain[" + std::to_string(l) + "]");
  }

  for (int k = 0; k < cfg.num_users; ++k) {
    const double gamma = mats.sinr_min[k];
    if (!(gamma > 0)) continue;
    const double unit = cfg.user_noise_power[k];
    CMat mk = mats.rbar_cu[k][k] / gamma;
    for (int j = 0; j < cfg.num_users; ++j)
      if (j != k) mk -= mats.rbar_cu[k][j];
    LinearExpr e;
    e.psd_inner(vb, (0.5 / unit) * conic::herm_to_real(0.5 * (mk + mk.adjoint())));
    double rhs = mats.c[k];
    // The diagonal noise part goes through an auxiliary variable so the SINR
    // row keeps the low rank of mk.
    LinearExpr noise;
    for (int i = 0; i < n; ++i) {
      const double s = mats.sigma_ris[k](i);
      if (!active(i) || s == 0.0) continue;
      add_vdiag(noise, vb, n1, i, s / unit);
      qv(e, i, -s / unit);
      if (relaxed) rhs -= s;
    }
    if (!noise.terms.empty()) {
      const int t = p.add_free(1);
      noise.free_var(t, -1.0);
      e.free_var(t, -1.0);
      p.add_constraint(std::move(noise), Sense::eq, 0.0, "sinr_noise[" + std::to_string(k) + "]");
    }
    p.add_constraint(std::move(e), Sense::ge, rhs / unit, "sinr[" + std::to_string(k) + "]");
  }

  {
    LinearExpr e;
    const double unit = cfg.ris_power_max;
    double rhs = cfg.ris_power_max;
    for (int i = 0; i < n; ++i) {
      if (!active(i)) continue;
      const double pn = mats.p_ris(i, i).real();
      add_vdiag(e, vb, n1, i, pn / unit);
      qv(e, i, pn / unit);
      if (relaxed) rhs += pn;
    }
    p.add_constraint(std::move(e), Sense::le, rhs / unit, "ris_power");
  }

  for (int l = 0; l < cfg.num_targets; ++l) {
    LinearExpr e;
    const double unit = cfg.ris_noise_max;
    double rhs = cfg.ris_noise_max;
    for (int i = 0; i < n; ++i) {
      if (!active(i)) continue;
      const double pt = mats.p_tar[l](i);
      add_vdiag(e, vb, n1, i, pt / unit);
      qv(e, i, pt / unit);
      if (relaxed) rhs += pt;
    }
    p.add_constraint(std::move(e), Sense::le, rhs / unit, "ris_noise[" + std::to_string(l) + "]");
  }

  {
    LinearExpr e;
    add_vdiag(e, vb, n1, n, 1.0);
    p.add_constraint(std::move(e), Sense::eq, 1.0, "v_corner");
  }

  for (int i = 0; i < n; ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";
    if (!relaxed && (*frozen)(i) == 0) {
      LinearExpr e;
      add_vdiag(e, vb, n1, i, 1.0);
      p.add_constraint(std::move(e), Sense::eq, 1.0, "passive" + idx);
      continue;
    }
    LinearExpr amp;
    add_vdiag(amp, vb, n1, i, 1.0);
    p.add_constraint(std::move(amp), Sense::le, cbig, "amplitude" + idx);
    if (!relaxed) continue;
    LinearExpr up, lo, box;
    add_vdiag(up, vb, n1, i, 1.0);
    up.nonneg(lay.q_first + i, 1.0 - cbig);
    p.add_constraint(std::move(up), Sense::le, 1.0, "bigm_upper" + idx);
    add_vdiag(lo, vb, n1, i, 1.0);
    lo.nonneg(lay.q_first + i, 1.0 + cbig);
    p.add_constraint(std::move(lo), Sense::ge, 1.0, "bigm_lower" + idx);
    box.nonneg(lay.q_first + i, 1.0);
    p.add_constraint(std::move(box), Sense::le, 1.0, "mode_box" + idx);
  }
  return {std::move(p), std::move(lay)};
}

P12Solution extract(const P12Matrices& mats, const P12Layout& lay, const conic::SdpSolution& s) {
  P12Solution out;
  out.status = s.status;
  out.residuals = s.residuals;
  out.iterations = s.iterations;
  const int n = mats.num_elements();
  if (s.status != conic::SolveStatus::optimal && s.status != conic::SolveStatus::numerical_failure)
    return out;
  out.v = conic::real_to_herm(s.psd[lay.v_block]);
  if (lay.frozen)
    out.q = lay.frozen->cast<double>();
  else
    out.q = s.nonneg.segment(lay.q_first, n);
  out.rho_dd = std::numeric_limits<double>::infinity();
  for (const auto& r : mats.rbar_tar)
    out.rho_dd = std::min(out.rho_dd, (r.cwiseProduct(out.v.conjugate())).sum().real());
  out.penalized_objective = s.primal_objective;
  out.z.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      out.z(i, j) = i == j ? cd(out.v(i, i).real() - 1.0 + out.q(i), 0.0)
                           : out.q(i) * out.v(i, j) * out.q(j);
  if (lay.frozen)
    for (int i = 0; i < n; ++i) out.z(i, i) = (*lay.frozen)(i) ? out.v(i, i) : cd(0.0);
  return out;
}

}  // namespace

std::pair<conic::SdpProblem, P12Layout> build_p12(const SystemConfig& cfg, const P12Matrices& mats,
                                                  const RVec& q_prev, double mu) {
  if (!(mu >= 0) || !std::isfinite(mu)) throw ValidationError("build_p12: mu must be >= 0");
  return assemble(cfg, mats, &q_prev, mu, nullptr);
}

std::pair<conic::SdpProblem, P12Layout> build_p12_frozen(const SystemConfig& cfg,
                                                         const P12Matrices& mats,
                                                         const Eigen::VectorXi& modes) {
  for (int i = 0; i < modes.size(); ++i)
    if (modes(i) != 0 && modes(i) != 1) throw ValidationError("build_p12_frozen: modes must be 0/1");
  return assemble(cfg, mats, nullptr, 0.0, &modes);
}

P12Solution solve_p12(const SystemConfig& cfg, const P12Matrices& mats, const RVec& q_prev, double mu,
                      const conic::SolverOptions& opts) {
  auto [p, lay] = build_p12(cfg, mats, q_prev, mu);
  return extract(mats, lay, conic::solve_sdp(p, opts));
}

P12Solution solve_p12_frozen(const SystemConfig& cfg, const P12Matrices& mats,
                             const Eigen::VectorXi& modes, const conic::SolverOptions& opts) {
  auto [p, lay] = build_p12_frozen(cfg, mats, modes);
  return extract(mats, lay, conic::solve_sdp(p, opts));
}

ModeRounding round_modes(const RVec& q) {
  ModeRounding r;
  r.modes.resize(q.size());
  for (int i = 0; i < q.size(); ++i) {
    r.modes(i) = q(i) >= 0.5 ? 1 : 0;
    r.gap = std::max(r.gap, std::min(q(i), 1.0 - q(i)));
  }
  return r;
}

Eigen::VectorXi amplitude_modes(const CMat& v, double tol) {
  const int n = static_cast<int>(v.rows()) - 1;
  if (n < 0 || v.cols() != v.rows()) throw ValidationError("amplitude_modes: V must be square");
  if (!(tol >= 0)) throw ValidationError("amplitude_modes: tol must be >= 0");
  Eigen::VectorXi m(n);
  for (int i = 0; i < n; ++i) m(i) = std::abs(v(i, i).real() - 1.0) > tol ? 1 : 0;
  return m;
}

bool is_usable(const P12Solution& s) {
  return s.status == conic::SolveStatus::optimal ||
         (s.status == conic::SolveStatus::numerical_failure && s.residuals.max() <= 1e-4);
}

ScaResult solve_p12_sca(const SystemConfig& cfg, const P12Matrices& mats, const ScaOptions& opts) {
  const int n = mats.num_elements();
  ScaResult out;
  RVec q_prev = RVec::Constant(n, 0.5);
  out.solution = solve_p12(cfg, mats, q_prev, 0.0, opts.solver);
  out.steps.push_back({0.0, out.solution.rho_dd, 1.0, out.solution.status});
  if (!is_usable(out.solution)) return out;
  out.gap = round_modes(out.solution.q).gap;
  out.steps.back().gap = out.gap;
  out.relaxed = out.solution;

  const double scale = std::max(out.solution.rho_dd / gain_scale(mats), 1e-12);
  const double mu0 = opts.mu_init_factor * scale;
  double mu = mu0, mu_ok = 0.0;
  int solves = 1, failures = 0;
  while (out.gap > opts.gap_tol && solves < opts.max_solves) {
    q_prev = out.solution.q.cwiseMax(0.0).cwiseMin(1.0);
    P12Solution s = solve_p12(cfg, mats, q_prev, mu, opts.solver);
    ++solves;
    const double gap = is_usable(s) ? round_modes(s.q).gap : 1.0;
    out.steps.push_back({mu, s.rho_dd, gap, s.status});
    if (!is_usable(s)) {
      // back off toward the last weight that solved cleanly
      if (++failures >= 2) break;
      mu = 0.5 * (mu + mu_ok);
      continue;
    }
    failures = 0;
    out.solution = std::move(s);
    out.gap = gap;
    mu_ok = mu;
    mu = std::min(mu * opts.mu_growth, mu0 * opts.mu_cap_factor);
  }
  return out;
}

nlohmann::json RandomizationDiagnostics::to_json() const {
  return {{"samples", samples},
          {"discarded", discarded},
          {"feasible_candidates", feasible},
          {"rank", rank},
          {"eigen_shortcut", eigen_shortcut},
          {"selected_objective", selected_objective},
          {"selected_index", selected_index},
          {"binarity_gap", binarity_gap}};
}

std::optional<RisConfiguration> project_candidate(const CVec& v, const Eigen::VectorXi& modes,
                                                  double beta_max) {
  const int n = static_cast<int>(v.size()) - 1;
  if (n < 0 || modes.size() != n) throw ValidationError("project_candidate: length mismatch");
  const cd last = v(n);
  if (std::abs(last) < 1e-9) return std::nullopt;
  RisConfiguration r;
  r.mode = modes;
  r.amplitude.resize(n);
  r.phase.resize(n);
  for (int i = 0; i < n; ++i) {
    const cd phi = v(i) / last;
    r.phase(i) = wrap_phase(std::arg(phi));
    r.amplitude(i) = modes(i) ? std::clamp(std::abs(phi), 0.0, beta_max) : 1.0;
  }
  return r;
}

RandomizationResult gaussian_randomize(const CMat& v, const Eigen::VectorXi& modes,
                                       const SystemConfig& cfg, const ChannelSet& ch,
                                       const BeamformingSolution& bf, int num_samples,
                                       std::uint64_t seed, double feas_tol) {
  const int n1 = static_cast<int>(v.rows());
  if (v.cols() != n1 || n1 != cfg.num_elements() + 1)
    throw ValidationError("gaussian_randomize: V must be (N+1) x (N+1)");
  RandomizationResult out;
  auto& diag = out.diagnostics;

  const Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (v + v.adjoint()));
  const RVec& lam = eig.eigenvalues();
  const double lmax = lam(n1 - 1);
  if (!(lmax > 0)) return out;
  for (int i = 0; i < n1; ++i) diag.rank += lam(i) > 1e-7 * lmax ? 1 : 0;

  const CandidateEvaluator ev(cfg, ch, bf);
  double best = -std::numeric_limits<double>::infinity();
  auto consider = [&](const CVec& sample, int index) {
    auto cand = project_candidate(sample, modes, cfg.beta_max);
    if (!cand) {
      ++diag.discarded;
      return;
    }
    const auto r = ev.evaluate(cand->coefficients(), modes);
    if (!ev.feasible(r, feas_tol)) return;
    ++diag.feasible;
    if (r.min_gain > best) {
      best = r.min_gain;
      diag.selected_index = index;
      diag.selected_objective = r.min_gain;
      out.ris = std::move(*cand);
    }
  };

  if (n1 < 2 || lam(n1 - 2) <= 1e-7 * lmax) {
    consider(eig.eigenvectors().col(n1 - 1) * std::sqrt(lmax), 0);
    if (out.ris) {
      diag.eigen_shortcut = true;
      return out;
    }
  }

  // v = U_r Lambda_r^{1/2} xi over the numerically nonzero spectrum
  const int r = diag.rank;
  CMat f(n1, r);
  for (int i = 0; i < r; ++i)
    f.col(i) = eig.eigenvectors().col(n1 - 1 - i) * std::sqrt(lam(n1 - 1 - i));
  const auto& kt = kernels::table(kernels::active_backend());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  CVec xi(r), sample(n1);
  for (int s = 0; s < num_samples; ++s) {
    for (int i = 0; i < r; ++i) {
      const double re = nd(rng);
      const double im = nd(rng);
      xi(i) = cd(re, im) * std::sqrt(0.5);
    }
    kt.gemv(f.data(), n1, r, xi.data(), sample.data());
    ++diag.samples;
    consider(sample, s);
  }
  return out;
}

}  // namespace hris
