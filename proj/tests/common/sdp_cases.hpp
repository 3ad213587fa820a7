// SPDX-License-Identifier: Apache-2.0
#pragma once

// Small SDP families whose optimum has a closed form.

#include <random>
#include <string>
#include <vector>

#include "hris/conic.hpp"

namespace hris::test {

struct KnownSdp {
  std::string label;
  conic::SdpProblem problem;
  double optimum;
};

inline RMat random_sym(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  RMat a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = nd(rng);
  return 0.5 * (a + a.transpose());
}

inline RVec sym_eigs(const RMat& a) { return Eigen::SelfAdjointEigenSolver<RMat>(a).eigenvalues(); }

// max <C, X> s.t. tr X = 1  ->  lambda_max(C)
inline KnownSdp max_eig_trace(int n, std::mt19937_64& rng) {
  const RMat c = random_sym(n, rng);
  KnownSdp k{"trace-one n=" + std::to_string(n), {}, sym_eigs(c)(n - 1)};
  const int b = k.problem.add_psd_block(n);
  k.problem.objective.psd_inner(b, c);
  conic::LinearExpr tr;
  for (int i = 0; i < n; ++i) tr.psd(b, i, i, 1.0);
  k.problem.add_constraint(tr, conic::Sense::eq, 1.0, "trace");
  return k;
}

// max <C, X> s.t. 0 <= X <= I  ->  sum of positive eigenvalues
inline KnownSdp positive_part(int n, std::mt19937_64& rng) {
  const RMat c = random_sym(n, rng);
  const RVec ev = sym_eigs(c);
  KnownSdp k{"box n=" + std::to_string(n), {}, ev.cwiseMax(0.0).sum()};
  const int x = k.problem.add_psd_block(n);
  const int y = k.problem.add_psd_block(n);
  k.problem.objective.psd_inner(x, c);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      conic::LinearExpr e;
      e.psd(x, i, j, 1.0).psd(y, i, j, 1.0);
      k.problem.add_constraint(e, conic::Sense::eq, i == j ? 1.0 : 0.0);
    }
  return k;
}

// min t s.t. t I - C PSD, written as max -t with X = t I - C  ->  -lambda_max(C)
inline KnownSdp epigraph(int n, std::mt19937_64& rng) {
  const RMat c = random_sym(n, rng);
  KnownSdp k{"epigraph n=" + std::to_string(n), {}, -sym_eigs(c)(n - 1)};
  const int x = k.problem.add_psd_block(n);
  const int t = k.problem.add_free(1);
  k.problem.objective.free_var(t, -1.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      conic::LinearExpr e;
      e.psd(x, i, j, 1.0);
      if (i == j) e.free_var(t, -1.0);
      k.problem.add_constraint(e, conic::Sense::eq, -c(i, j));
    }
  return k;
}

// max c'x s.t. 0 <= x <= u  ->  sum_i u_i max(c_i, 0)
inline KnownSdp box_lp(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.5, 3.0);
  KnownSdp k{"lp n=" + std::to_string(n), {}, 0.0};
  const int x = k.problem.add_nonneg(n);
  for (int i = 0; i < n; ++i) {
    const double c = nd(rng), u = ud(rng);
    k.problem.objective.nonneg(x + i, c);
    conic::LinearExpr e;
    e.nonneg(x + i, 1.0);
    k.problem.add_constraint(e, conic::Sense::le, u);
    k.optimum += u * std::max(c, 0.0);
  }
  return k;
}

// Complex Hermitian program through the real embedding:
// max h^H R h s.t. tr R <= p  ->  p |h|^2
inline KnownSdp complex_beam(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec h(n);
  for (int i = 0; i < n; ++i) h(i) = cd(nd(rng), nd(rng));
  const double p = 0.5 + std::abs(nd(rng));
  KnownSdp k{"complex n=" + std::to_string(n), {}, p * h.squaredNorm()};
  const int b = k.problem.add_psd_block(2 * n);
  k.problem.objective.psd_inner(b, 0.5 * conic::herm_to_real(h * h.adjoint()));
  k.problem.add_constraint(conic::LinearExpr{}.psd_inner(b, 0.5 * RMat::Identity(2 * n, 2 * n)),
                           conic::Sense::le, p, "power");
  return k;
}

// Mixed suite: family chosen round-robin, sizes 2..7.
inline std::vector<KnownSdp> known_suite(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<KnownSdp> out;
  for (int i = 0; i < count; ++i) {
    const int n = 2 + (i / 5) % 6;
    switch (i % 5) {
      case 0: out.push_back(max_eig_trace(n, rng)); break;
      case 1: out.push_back(positive_part(n, rng)); break;
      case 2: out.push_back(epigraph(n, rng)); break;
      case 3: out.push_back(box_lp(n + 2, rng)); break;
      default: out.push_back(complex_beam(n, rng)); break;
    }
  }
  return out;
}

// min t s.t. [[t,1],[1,t]] PSD as: max -X11, X12 = 1, X11 - X22 = 0.
inline conic::SdpProblem two_by_two() {
  conic::SdpProblem p;
  const int b = p.add_psd_block(2);
  p.objective.psd(b, 0, 0, -1.0);
  p.add_constraint(conic::LinearExpr{}.psd(b, 0, 1, 1.0), conic::Sense::eq, 1.0, "offdiag");
  p.add_constraint(conic::LinearExpr{}.psd(b, 0, 0, 1.0).psd(b, 1, 1, -1.0), conic::Sense::eq, 0.0,
                   "equal-diag");
  return p;
}

}  // namespace hris::test
