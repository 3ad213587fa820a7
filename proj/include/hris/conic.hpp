// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hris/types.hpp"

namespace hris::conic {

enum class Sense { le, ge, eq };

enum class VarKind { psd, nonneg, free };

// One coefficient on one variable entry. For PSD blocks only the upper
// triangle is addressed (i <= j) and the term contributes coef * X_ij.
struct Term {
  VarKind kind = VarKind::free;
  int block = 0;
  int i = 0;
  int j = 0;
  double coef = 0.0;
};

struct LinearExpr {
  std::vector<Term> terms;

  LinearExpr& psd(int block, int i, int j, double coef);
  LinearExpr& nonneg(int index, double coef);
  LinearExpr& free_var(int index, double coef);
  // Adds <A, X_block> for a symmetric A (upper triangle is read).
  LinearExpr& psd_inner(int block, const RMat& a);
};

struct Constraint {
  LinearExpr expr;
  Sense sense = Sense::eq;
  double rhs = 0.0;
  std::string name;
};

/// Real conic program
///   maximize  objective(X, x, z)
///   s.t.      expr_i(X, x, z) {<=, >=, =} rhs_i
///             X_b PSD, x >= 0, z free.
class SdpProblem {
 public:
  int add_psd_block(int order);
  // Return the index of the first new variable.
  int add_nonneg(int count);
  int add_free(int count);
  int add_constraint(LinearExpr expr, Sense sense, double rhs, std::string name = {});

  LinearExpr objective;

  const std::vector<int>& psd_orders() const { return psd_orders_; }
  int num_nonneg() const { return num_nonneg_; }
  int num_free() const { return num_free_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  // Throws ValidationError on out-of-range or lower-triangle references and
  // on empty equality rows.
  void validate() const;

  // Sparse triplet listing, one line per term.
  void dump(std::ostream& os) const;

 private:
  std::vector<int> psd_orders_;
  int num_nonneg_ = 0;
  int num_free_ = 0;
  std::vector<Constraint> constraints_;
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };
const char* to_string(SolveStatus s);

struct Residuals {
  double primal_feas = 0.0;
  double dual_feas = 0.0;
  double gap = 0.0;      // |primal - dual| objective
  double rel_gap = 0.0;  // gap / (1 + |primal| + |dual|)
  double max() const;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::numerical_failure;
  std::vector<RMat> psd;
  RVec nonneg;
  RVec free;
  // One multiplier per constraint: >= 0 on <= rows, <= 0 on >= rows.
  RVec dual;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  Residuals residuals;
  int iterations = 0;
};

struct SolverOptions {
  double tol = 1e-7;
  int max_iter = 200;
  double tol_infeasible = 1e-8;
  bool verbose = false;  // per-iteration log on stderr
};

SdpSolution solve_sdp(const SdpProblem& p, const SolverOptions& opts = {});

// Recomputes feasibility and gap from the problem data alone. The dual
// slack is S = sum_i y_i A_i - C. Throws PreconditionError for solutions
// tagged infeasible or unbounded.
Residuals kkt_residuals(const SdpProblem& p, const SdpSolution& sol);

// [[Re H, -Im H], [Im H, Re H]]; throws ValidationError if H is not
// Hermitian to 1e-10 (relative to its largest entry, floored at 1).
RMat herm_to_real(const CMat& h);
// Inverse of herm_to_real on the symmetric part: (X11 + X22)/2 + j(X21 - X12)/2.
CMat real_to_herm(const RMat& x);

}  // namespace hris::conic
