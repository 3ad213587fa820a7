// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>

#include "hris/conic.hpp"

namespace hris::conic {

namespace {

// Value of one term at the primal point, plus |coef| * |entry| for scaling.
double term_value(const Term& t, const SdpSolution& s) {
  switch (t.kind) {
    case VarKind::psd: return t.coef * s.psd[t.block](t.i, t.j);
    case VarKind::nonneg: return t.coef * s.nonneg(t.i);
    default: return t.coef * s.free(t.i);
  }
}

double lambda_min(const RMat& a) {
  if (a.size() == 0) return 0.0;
  const RMat sym = 0.5 * (a + a.transpose());
  return Eigen::SelfAdjointEigenSolver<RMat>(sym, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

// Adds coef * (E_ij + E_ji)/2 (or coef * E_ii) to a.
void scatter(RMat& a, int i, int j, double coef) {
  if (i == j) {
    a(i, i) += coef;
  } else {
    a(i, j) += 0.5 * coef;
    a(j, i) += 0.5 * coef;
  }
}

}  // namespace

Residuals kkt_residuals(const SdpProblem& p, const SdpSolution& s) {
  if (s.status == SolveStatus::infeasible || s.status == SolveStatus::unbounded)
    throw PreconditionError(std::string("kkt_residuals: solution status is ") + to_string(s.status));
  const auto& orders = p.psd_orders();
  const auto& cons = p.constraints();
  const int nb = static_cast<int>(orders.size());
  if (static_cast<int>(s.psd.size()) != nb || s.nonneg.size() != p.num_nonneg() ||
      s.free.size() != p.num_free() || s.dual.size() != static_cast<Eigen::Index>(cons.size()))
    throw ValidationError("kkt_residuals: solution does not match problem dimensions");
  for (int b = 0; b < nb; ++b)
    if (s.psd[b].rows() != orders[b] || s.psd[b].cols() != orders[b])
      throw ValidationError("kkt_residuals: PSD block has wrong order");

  constexpr double tiny = std::numeric_limits<double>::min();
  Residuals r;

  // Primal: row violations relative to the row's own magnitude.
  double xnorm = 0.0;
  for (const auto& x : s.psd) xnorm = std::max(xnorm, x.norm());
  xnorm = std::max({xnorm, s.nonneg.size() ? s.nonneg.cwiseAbs().maxCoeff() : 0.0,
                    s.free.size() ? s.free.cwiseAbs().maxCoeff() : 0.0});
  for (const auto& c : cons) {
    double lhs = 0.0, mag = 0.0;
    for (const auto& t : c.expr.terms) {
      const double v = term_value(t, s);
      lhs += v;
      mag += std::abs(v);
    }
    double viol = 0.0;
    if (c.sense == Sense::le)
      viol = std::max(0.0, lhs - c.rhs);
    else if (c.sense == Sense::ge)
      viol = std::max(0.0, c.rhs - lhs);
    else
      viol = std::abs(lhs - c.rhs);
    r.primal_feas = std::max(r.primal_feas, viol / std::max({1.0, std::abs(c.rhs), mag}));
  }
  for (const auto& x : s.psd)
    r.primal_feas = std::max(r.primal_feas, std::max(0.0, -lambda_min(x)) / std::max(1.0, x.norm()));
  for (int i = 0; i < s.nonneg.size(); ++i)
    r.primal_feas = std::max(r.primal_feas, std::max(0.0, -s.nonneg(i)) / std::max(1.0, xnorm));

  // Dual slack S = sum_i y_i A_i - C for every variable class.
  std::vector<RMat> slack(nb), ay(nb), cobj(nb);
  for (int b = 0; b < nb; ++b) {
    ay[b] = RMat::Zero(orders[b], orders[b]);
    cobj[b] = RMat::Zero(orders[b], orders[b]);
  }
  RVec ay_l = RVec::Zero(p.num_nonneg()), c_l = RVec::Zero(p.num_nonneg());
  RVec ay_f = RVec::Zero(p.num_free()), c_f = RVec::Zero(p.num_free());
  RVec mag_l = RVec::Zero(p.num_nonneg()), mag_f = RVec::Zero(p.num_free());
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const double y = s.dual(i);
    for (const auto& t : cons[i].expr.terms) {
      switch (t.kind) {
        case VarKind::psd: scatter(ay[t.block], t.i, t.j, y * t.coef); break;
        case VarKind::nonneg:
          ay_l(t.i) += y * t.coef;
          mag_l(t.i) += std::abs(y * t.coef);
          break;
        case VarKind::free:
          ay_f(t.i) += y * t.coef;
          mag_f(t.i) += std::abs(y * t.coef);
          break;
      }
    }
  }
  for (const auto& t : p.objective.terms) {
    switch (t.kind) {
      case VarKind::psd: scatter(cobj[t.block], t.i, t.j, t.coef); break;
      case VarKind::nonneg: c_l(t.i) += t.coef; break;
      case VarKind::free: c_f(t.i) += t.coef; break;
    }
  }
  for (int b = 0; b < nb; ++b) {
    slack[b] = ay[b] - cobj[b];
    const double scale = std::max({1.0, ay[b].norm(), cobj[b].norm()});
    r.dual_feas = std::max(r.dual_feas, std::max(0.0, -lambda_min(slack[b])) / scale);
  }
  for (int i = 0; i < p.num_nonneg(); ++i) {
    const double sl = ay_l(i) - c_l(i);
    r.dual_feas = std::max(r.dual_feas, std::max(0.0, -sl) / std::max({1.0, mag_l(i), std::abs(c_l(i))}));
  }
  for (int i = 0; i < p.num_free(); ++i) {
    const double sl = ay_f(i) - c_f(i);
    r.dual_feas = std::max(r.dual_feas, std::abs(sl) / std::max({1.0, mag_f(i), std::abs(c_f(i))}));
  }
  const double ymax = std::max(1.0, s.dual.size() ? s.dual.cwiseAbs().maxCoeff() : 0.0);
  for (std::size_t i = 0; i < cons.size(); ++i) {
    double wrong = 0.0;
    if (cons[i].sense == Sense::le) wrong = std::max(0.0, -s.dual(i));
    if (cons[i].sense == Sense::ge) wrong = std::max(0.0, s.dual(i));
    r.dual_feas = std::max(r.dual_feas, wrong / ymax);
  }

  double pobj = 0.0;
  for (const auto& t : p.objective.terms) pobj += term_value(t, s);
  double dobj = 0.0;
  for (std::size_t i = 0; i < cons.size(); ++i) dobj += cons[i].rhs * s.dual(i);
  r.gap = std::abs(pobj - dobj);
  r.rel_gap = r.gap / (1.0 + std::abs(pobj) + std::abs(dobj) + tiny);
  return r;
}

}  // namespace hris::conic
