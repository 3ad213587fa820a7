// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <ostream>

#include "hris/conic.hpp"

namespace hris::conic {

LinearExpr& LinearExpr::psd(int block, int i, int j, double coef) {
  terms.push_back({VarKind::psd, block, i, j, coef});
  return *this;
}

LinearExpr& LinearExpr::nonneg(int index, double coef) {
  terms.push_back({VarKind::nonneg, 0, index, 0, coef});
  return *this;
}

LinearExpr& LinearExpr::free_var(int index, double coef) {
  terms.push_back({VarKind::free, 0, index, 0, coef});
  return *this;
}

LinearExpr& LinearExpr::psd_inner(int block, const RMat& a) {
  for (int j = 0; j < a.cols(); ++j) {
    for (int i = 0; i < j; ++i)
      if (a(i, j) != 0.0) psd(block, i, j, 2.0 * a(i, j));
    if (a(j, j) != 0.0) psd(block, j, j, a(j, j));
  }
  return *this;
}

int SdpProblem::add_psd_block(int order) {
  if (order < 1) throw ValidationError("SdpProblem: PSD block order must be >= 1");
  psd_orders_.push_back(order);
  return static_cast<int>(psd_orders_.size()) - 1;
}

int SdpProblem::add_nonneg(int count) {
  if (count < 0) throw ValidationError("SdpProblem: negative variable count");
  const int first = num_nonneg_;
  num_nonneg_ += count;
  return first;
}

int SdpProblem::add_free(int count) {
  if (count < 0) throw ValidationError("SdpProblem: negative variable count");
  const int first = num_free_;
  num_free_ += count;
  return first;
}

int SdpProblem::add_constraint(LinearExpr expr, Sense sense, double rhs, std::string name) {
  constraints_.push_back({std::move(expr), sense, rhs, std::move(name)});
  return static_cast<int>(constraints_.size()) - 1;
}

namespace {

void check_term(const SdpProblem& p, const Term& t, const std::string& where) {
  auto fail = [&](const char* what) {
    throw ValidationError("SdpProblem: " + where + ": " + what);
  };
  if (!std::isfinite(t.coef)) fail("non-finite coefficient");
  switch (t.kind) {
    case VarKind::psd: {
      if (t.block < 0 || t.block >= static_cast<int>(p.psd_orders().size())) fail("unknown block");
      const int n = p.psd_orders()[t.block];
      if (t.i < 0 || t.j < 0 || t.i >= n || t.j >= n) fail("entry outside block");
      if (t.i > t.j) fail("lower-triangle entry referenced");
      break;
    }
    case VarKind::nonneg:
      if (t.i < 0 || t.i >= p.num_nonneg()) fail("nonnegative index out of range");
      break;
    case VarKind::free:
      if (t.i < 0 || t.i >= p.num_free()) fail("free index out of range");
      break;
  }
}

const char* sense_str(Sense s) {
  switch (s) {
    case Sense::le: return "<=";
    case Sense::ge: return ">=";
    default: return "=";
  }
}

void dump_terms(std::ostream& os, const LinearExpr& e) {
  for (const auto& t : e.terms) {
    switch (t.kind) {
      case VarKind::psd:
        os << "  psd " << t.block << ' ' << t.i << ' ' << t.j << ' ' << t.coef << '\n';
        break;
      case VarKind::nonneg:
        os << "  nonneg " << t.i << ' ' << t.coef << '\n';
        break;
      case VarKind::free:
        os << "  free " << t.i << ' ' << t.coef << '\n';
        break;
    }
  }
}

}  // namespace

void SdpProblem::validate() const {
  for (const auto& t : objective.terms) check_term(*this, t, "objective");
  for (std::size_t r = 0; r < constraints_.size(); ++r) {
    const auto& c = constraints_[r];
    const std::string where = "constraint " + std::to_string(r);
    if (!std::isfinite(c.rhs)) throw ValidationError("SdpProblem: " + where + ": non-finite rhs");
    bool any = false;
    for (const auto& t : c.expr.terms) {
      check_term(*this, t, where);
      any = any || t.coef != 0.0;
    }
    if (!any && c.sense == Sense::eq)
      throw ValidationError("SdpProblem: " + where + ": empty equality row");
  }
}

void SdpProblem::dump(std::ostream& os) const {
  const auto prec = os.precision(17);
  os << "blocks " << psd_orders_.size();
  for (int n : psd_orders_) os << ' ' << n;
  os << "\nnonneg " << num_nonneg_ << "\nfree " << num_free_ << "\nconstraints "
     << constraints_.size() << "\nobjective max\n";
  dump_terms(os, objective);
  for (std::size_t r = 0; r < constraints_.size(); ++r) {
    const auto& c = constraints_[r];
    os << "constraint " << r << ' ' << (c.name.empty() ? "-" : c.name) << ' '
       << sense_str(c.sense) << ' ' << c.rhs << '\n';
    dump_terms(os, c.expr);
  }
  os.precision(prec);
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    default: return "numerical_failure";
  }
}

double Residuals::max() const { return std::max({primal_feas, dual_feas, rel_gap}); }

RMat herm_to_real(const CMat& h) {
  if (h.rows() != h.cols()) throw ValidationError("herm_to_real: matrix must be square");
  const double scale = std::max(1.0, h.size() ? h.cwiseAbs().maxCoeff() : 0.0);
  if (h.size() && (h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ValidationError("herm_to_real: matrix is not Hermitian");
  const Eigen::Index n = h.rows();
  RMat x(2 * n, 2 * n);
  x.topLeftCorner(n, n) = h.real();
  x.bottomRightCorner(n, n) = h.real();
  x.topRightCorner(n, n) = -h.imag();
  x.bottomLeftCorner(n, n) = h.imag();
  return x;
}

CMat real_to_herm(const RMat& x) {
  if (x.rows() != x.cols() || x.rows() % 2)
    throw ValidationError("real_to_herm: matrix must be square with even order");
  const Eigen::Index n = x.rows() / 2;
  const RMat re = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  const RMat im = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  CMat h(n, n);
  h.real() = re;
  h.imag() = im;
  return 0.5 * (h + h.adjoint());
}

}  // namespace hris::conic
