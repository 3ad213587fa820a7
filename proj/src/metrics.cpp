// SPDX-License-Identifier: Apache-2.0
#include "hris/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hris/kernels.hpp"

namespace hris {

CMat BeamformingSolution::total_covariance() const {
  CMat r = sensing_cov;
  for (const auto& w : beams) r.noalias() += w * w.adjoint();
  return r;
}

double BeamformingSolution::transmit_power() const {
  double p = sensing_cov.trace().real();
  for (const auto& w : beams) p += w.squaredNorm();
  return p;
}

void BeamformingSolution::validate(const SystemConfig& cfg) const {
  const int m = cfg.num_antennas;
  if (static_cast<int>(beams.size()) != cfg.num_users)
    throw ValidationError("BeamformingSolution: one beam per user required");
  for (const auto& w : beams)
    if (w.size() != m) throw ValidationError("BeamformingSolution: beams must have M entries");
  if (sensing_cov.rows() != m || sensing_cov.cols() != m)
    throw ValidationError("BeamformingSolution: sensing covariance must be M x M");
  const double scale = std::max(1.0, sensing_cov.cwiseAbs().maxCoeff());
  if ((sensing_cov - sensing_cov.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw ValidationError("BeamformingSolution: sensing covariance is not Hermitian");
}

BeamformingSolution BeamformingSolution::zero(const SystemConfig& cfg) {
  BeamformingSolution bf;
  bf.beams.assign(cfg.num_users, CVec::Zero(cfg.num_antennas));
  bf.sensing_cov = CMat::Zero(cfg.num_antennas, cfg.num_antennas);
  return bf;
}

CVec cascaded_target_channel(const ChannelSet& ch, const RisConfiguration& ris,
                             const CVec& steering) {
  const CVec u = ris.coefficients().conjugate().cwiseProduct(steering);
  return ch.bs_ris.adjoint() * u;
}

CVec equivalent_user_channel(const ChannelSet& ch, const RisConfiguration& ris, int user) {
  const CVec u = ris.coefficients().cwiseProduct(ch.ris_user.at(user));
  return ch.bs_ris.adjoint() * u + ch.bs_user.at(user);
}

double beampattern_gain_toward(const ChannelSet& ch, const RisConfiguration& ris,
                               const BeamformingSolution& bf, const CVec& steering) {
  const CVec h = cascaded_target_channel(ch, ris, steering);
  double g = (h.adjoint() * bf.sensing_cov * h)(0).real();
  for (const auto& w : bf.beams) g += std::norm(h.dot(w));
  return std::max(g, 0.0);
}

double beampattern_gain(const ChannelSet& ch, const RisConfiguration& ris,
                        const BeamformingSolution& bf, int target) {
  return beampattern_gain_toward(ch, ris, bf, ch.target_steering.at(target));
}

double cu_sinr(const SystemConfig& cfg, const ChannelSet& ch, const RisConfiguration& ris,
               const BeamformingSolution& bf, int user) {
  const CVec h = equivalent_user_channel(ch, ris, user);
  const int k = user;
  double signal = 0.0, interference = 0.0;
  for (int j = 0; j < static_cast<int>(bf.beams.size()); ++j) {
    const double p = std::norm(h.dot(bf.beams[j]));
    if (j == k)
      signal = p;
    else
      interference += p;
  }
  double ris_noise = 0.0;
  const CVec& hiu = ch.ris_user.at(user);
  for (int n = 0; n < ris.num_elements(); ++n)
    if (ris.mode(n))
      ris_noise += std::norm(hiu(n)) * ris.amplitude(n) * ris.amplitude(n);
  return signal / (interference + cfg.ris_noise_power * ris_noise + cfg.user_noise_power.at(user));
}

double ris_output_power(const SystemConfig& cfg, const ChannelSet& ch,
                        const RisConfiguration& ris, const BeamformingSolution& bf) {
  const CMat gr = ch.bs_ris * bf.total_covariance();
  double p = 0.0;
  for (int n = 0; n < ris.num_elements(); ++n) {
    if (!ris.mode(n)) continue;
    const double incident = gr.row(n).dot(ch.bs_ris.row(n)).real();
    p += ris.amplitude(n) * ris.amplitude(n) * (incident + cfg.ris_noise_power);
  }
  return p;
}

double ris_noise_at_target(const SystemConfig& cfg, const RisConfiguration& ris,
                           const ChannelSet& ch, int target) {
  const CVec& a = ch.target_steering.at(target);
  double s = 0.0;
  for (int n = 0; n < ris.num_elements(); ++n)
    if (ris.mode(n)) s += std::norm(a(n)) * ris.amplitude(n) * ris.amplitude(n);
  return cfg.ris_noise_power * s;
}

bool ConstraintReport::feasible() const {
  return std::all_of(records.begin(), records.end(),
                     [](const ConstraintRecord& r) { return r.satisfied; });
}

const ConstraintRecord& ConstraintReport::at(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return r;
  throw std::out_of_range("ConstraintReport: no record named " + name);
}

nlohmann::json ConstraintReport::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) {
    recs.push_back({{"name", r.name},
                    {"lhs", r.lhs},
                    {"rhs", r.rhs},
                    {"relation", r.relation == Relation::at_most ? "<=" : ">="},
                    {"slack", r.slack},
                    {"tolerance", r.tolerance},
                    {"satisfied", r.satisfied}});
  }
  return {{"objective", objective},
          {"target_gains", target_gains},
          {"feasible", feasible()},
          {"constraints", recs}};
}

ConstraintReport ConstraintReport::from_json(const nlohmann::json& j) {
  // JSON has no inf/nan; they are written as null
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  ConstraintReport r;
  r.objective = num(j.at("objective"));
  for (const auto& g : j.at("target_gains")) r.target_gains.push_back(num(g));
  for (const auto& c : j.at("constraints")) {
    ConstraintRecord rec;
    rec.name = c.at("name").get<std::string>();
    rec.lhs = num(c.at("lhs"));
    rec.rhs = num(c.at("rhs"));
    const auto rel = c.at("relation").get<std::string>();
    if (rel != "<=" && rel != ">=") throw ValidationError("ConstraintReport: unknown relation " + rel);
    rec.relation = rel == "<=" ? Relation::at_most : Relation::at_least;
    rec.slack = num(c.at("slack"));
    rec.tolerance = num(c.at("tolerance"));
    rec.satisfied = c.at("satisfied").get<bool>();
    r.records.push_back(std::move(rec));
  }
  return r;
}

namespace {

ConstraintRecord make_record(std::string name, double lhs, double rhs, Relation rel,
                             double tolerance) {
  ConstraintRecord r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.relation = rel;
  r.slack = rel == Relation::at_most ? rhs - lhs : lhs - rhs;
  r.tolerance = tolerance;
  r.satisfied = std::isfinite(r.slack) && r.slack >= -tolerance;
  return r;
}

}  // namespace

ConstraintReport audit(const SystemConfig& cfg, const ChannelSet& ch,
                       const RisConfiguration& ris, const BeamformingSolution& bf,
                       double tol_feas) {
  cfg.validate();
  ch.validate(cfg);
  bf.validate(cfg);
  if (ris.num_elements() != cfg.num_elements() || ris.amplitude.size() != ris.mode.size() ||
      ris.phase.size() != ris.mode.size())
    throw ValidationError("audit: RIS configuration has wrong dimensions");

  ConstraintReport rep;
  const int n = cfg.num_elements();

  rep.target_gains.resize(cfg.num_targets);
  for (int l = 0; l < cfg.num_targets; ++l) rep.target_gains[l] = beampattern_gain(ch, ris, bf, l);
  rep.objective = *std::min_element(rep.target_gains.begin(), rep.target_gains.end());

  rep.records.push_back(make_record("bs_power", bf.transmit_power(), cfg.bs_power,
                                    Relation::at_most, tol_feas * cfg.bs_power));

  const double total = std::max(bf.transmit_power(), std::numeric_limits<double>::min());
  const double lmin = Eigen::SelfAdjointEigenSolver<CMat>(
                          (bf.sensing_cov + bf.sensing_cov.adjoint()) * 0.5, Eigen::EigenvaluesOnly)
                          .eigenvalues()(0);
  rep.records.push_back(
      make_record("sensing_cov_psd", -lmin, 0.0, Relation::at_most, 1e-8 * total));

  for (int k = 0; k < cfg.num_users; ++k) {
    const double g = cfg.sinr_min[k];
    rep.records.push_back(make_record("sinr[" + std::to_string(k) + "]",
                                      cu_sinr(cfg, ch, ris, bf, k), g, Relation::at_least,
                                      tol_feas * g));
  }

  rep.records.push_back(make_record("ris_power", ris_output_power(cfg, ch, ris, bf),
                                    cfg.ris_power_max, Relation::at_most,
                                    tol_feas * cfg.ris_power_max));

  for (int l = 0; l < cfg.num_targets; ++l)
    rep.records.push_back(make_record("ris_noise[" + std::to_string(l) + "]",
                                      ris_noise_at_target(cfg, ris, ch, l), cfg.ris_noise_max,
                                      Relation::at_most, tol_feas * cfg.ris_noise_max));

  double phase_viol = 0.0, amp_viol = 0.0, mode_viol = 0.0;
  for (int i = 0; i < n; ++i) {
    const double th = ris.phase(i);
    if (!std::isfinite(th))
      phase_viol = std::numeric_limits<double>::infinity();
    else
      phase_viol = std::max({phase_viol, -th, th - kTwoPi});
    const int q = ris.mode(i);
    if (q != 0 && q != 1) mode_viol = std::max(mode_viol, 1.0);
    const double b = ris.amplitude(i);
    if (q == 1)
      amp_viol = std::max({amp_viol, -b, b - cfg.beta_max});
    else
      amp_viol = std::max(amp_viol, std::abs(b - 1.0));
  }
  // theta = 0 is outside (0, 2pi] but physically identical to 2pi, so the
  // tolerance absorbs it.
  rep.records.push_back(make_record("phase_range", phase_viol, 0.0, Relation::at_most, tol_feas));
  rep.records.push_back(
      make_record("amplitude_range", amp_viol, 0.0, Relation::at_most, tol_feas * cfg.beta_max));
  rep.records.push_back(make_record("mode_binary", mode_viol, 0.0, Relation::at_most, 0.0));
  return rep;
}

CandidateEvaluator::CandidateEvaluator(const SystemConfig& cfg, const ChannelSet& ch,
                                       const BeamformingSolution& bf)
    : cfg_(cfg), ch_(ch), bf_(bf) {
  ch_.validate(cfg_);
  bf_.validate(cfg_);
  total_cov_ = bf_.total_covariance();
  const CMat gr = ch_.bs_ris * total_cov_;
  const int n = cfg_.num_elements();
  incident_power_.resize(n);
  for (int i = 0; i < n; ++i) incident_power_(i) = gr.row(i).dot(ch_.bs_ris.row(i)).real();
  for (const auto& h : ch_.ris_user) user_gain2_.push_back(h.cwiseAbs2());
}

CandidateEvaluator::Result CandidateEvaluator::evaluate(const CVec& coeffs,
                                                        const Eigen::VectorXi& mode) const {
  const int n = cfg_.num_elements();
  const int m = cfg_.num_antennas;
  if (coeffs.size() != n || mode.size() != n)
    throw ValidationError("CandidateEvaluator: candidate has wrong length");
  const auto& kt = kernels::table(kernels::active_backend());

  Result r;
  CVec u(n), h(m), rh(m);
  r.gains.resize(cfg_.num_targets);
  for (int l = 0; l < cfg_.num_targets; ++l) {
    const CVec& a = ch_.target_steering[l];
    for (int i = 0; i < n; ++i) u(i) = std::conj(coeffs(i)) * a(i);
    kt.gemv_conj_trans(ch_.bs_ris.data(), n, m, u.data(), h.data());
    kt.gemv(total_cov_.data(), m, m, h.data(), rh.data());
    r.gains[l] = std::max(kt.dotc(h.data(), rh.data(), m).real(), 0.0);
  }
  r.min_gain = *std::min_element(r.gains.begin(), r.gains.end());

  double active_gain2 = 0.0, active_power = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!mode(i)) continue;
    const double b2 = std::norm(coeffs(i));
    active_gain2 += b2;
    active_power += b2 * (incident_power_(i) + cfg_.ris_noise_power);
  }
  r.ris_power = active_power;
  r.ris_noise.assign(cfg_.num_targets, cfg_.ris_noise_power * active_gain2);

  r.sinr.resize(cfg_.num_users);
  for (int k = 0; k < cfg_.num_users; ++k) {
    const CVec& hiu = ch_.ris_user[k];
    double noise = 0.0;
    for (int i = 0; i < n; ++i) {
      u(i) = coeffs(i) * hiu(i);
      if (mode(i)) noise += std::norm(coeffs(i)) * user_gain2_[k](i);
    }
    kt.gemv_conj_trans(ch_.bs_ris.data(), n, m, u.data(), h.data());
    h += ch_.bs_user[k];
    double signal = 0.0, interference = 0.0;
    for (int j = 0; j < cfg_.num_users; ++j) {
      const double p = std::norm(kt.dotc(h.data(), bf_.beams[j].data(), m));
      if (j == k)
        signal = p;
      else
        interference += p;
    }
    r.sinr[k] = signal / (interference + cfg_.ris_noise_power * noise + cfg_.user_noise_power[k]);
  }
  return r;
}

bool CandidateEvaluator::feasible(const Result& r, double rel_tol) const {
  for (int k = 0; k < cfg_.num_users; ++k)
    if (r.sinr[k] < cfg_.sinr_min[k] * (1.0 - rel_tol)) return false;
  if (r.ris_power > cfg_.ris_power_max * (1.0 + rel_tol)) return false;
  for (double v : r.ris_noise)
    if (v > cfg_.ris_noise_max * (1.0 + rel_tol)) return false;
  return true;
}

}  // namespace hris
