// SPDX-License-Identifier: Apache-2.0
// Infeasible primal-dual path-following method with the HKM search
// direction and Mehrotra predictor-corrector steps.
//
// Internal standard form (after adding slacks to inequality rows):
//   min <C, X> + cl'xl + cf'xf   s.t.  A(X) + Al xl + Af xf = b,
//   X_b PSD, xl >= 0, xf free,
// with dual  max b'y  s.t.  A'(y) + S = C,  Al'y + sl = cl,  Af'y = cf.
#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <map>
#include <random>

#include <Eigen/Sparse>

#include "hris/conic.hpp"

namespace hris::conic {

namespace {

struct Entry {
  int a, b;
  double v;
};

struct BlockRow {
  int row = 0;
  bool dense = false;
  RMat mat;
  // dense rows of low rank also keep mat = u diag(d) u'
  RMat u;
  RVec d;
  std::vector<Entry> entries;
  double norm2 = 0.0;
};

struct Block {
  int n = 0;
  std::vector<BlockRow> rows;
  RMat c;
};

struct Model {
  int m = 0;
  std::vector<Block> blocks;
  Eigen::SparseMatrix<double> al;  // m x nl
  RVec cl;
  RMat af;  // m x nf
  RVec cf;
  RVec b;
  int nl_user = 0;
  RVec row_scale;
  double bscale = 1.0;
  double cscale = 1.0;
};

struct Iterate {
  std::vector<RMat> x, s;
  RVec xl, sl, xf, y;
};

using Triplet = Eigen::Triplet<double>;

// Keeps an eigen-factor when the row matrix has rank at most n/4, which makes
// its Schur entries O(n^2 r) instead of O(n^3).
void low_rank_factor(BlockRow& br) {
  const int n = static_cast<int>(br.mat.rows());
  if (n < 16) return;
  Eigen::SelfAdjointEigenSolver<RMat> es(br.mat);
  const RVec& ev = es.eigenvalues();
  const double cut = 1e-13 * ev.cwiseAbs().maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (std::abs(ev(i)) > cut) keep.push_back(i);
  if (4 * static_cast<int>(keep.size()) > n) return;
  const int r = static_cast<int>(keep.size());
  br.u.resize(n, r);
  br.d.resize(r);
  for (int k = 0; k < r; ++k) {
    br.u.col(k) = es.eigenvectors().col(keep[k]);
    br.d(k) = ev(keep[k]);
  }
  br.mat = br.u * br.d.asDiagonal() * br.u.transpose();
}

Model build_model(const SdpProblem& p) {
  Model md;
  const auto& cons = p.constraints();
  md.m = static_cast<int>(cons.size());
  const int nb = static_cast<int>(p.psd_orders().size());
  md.blocks.resize(nb);
  for (int b = 0; b < nb; ++b) {
    md.blocks[b].n = p.psd_orders()[b];
    md.blocks[b].c = RMat::Zero(md.blocks[b].n, md.blocks[b].n);
  }
  md.nl_user = p.num_nonneg();
  int nl = p.num_nonneg();
  std::vector<int> slack_col(md.m, -1);
  for (int i = 0; i < md.m; ++i)
    if (cons[i].sense != Sense::eq) slack_col[i] = nl++;
  md.cl = RVec::Zero(nl);
  md.af = RMat::Zero(md.m, p.num_free());
  md.cf = RVec::Zero(p.num_free());
  md.b.resize(md.m);

  auto add_sym = [](std::map<std::pair<int, int>, double>& acc, int i, int j, double c) {
    if (i == j) {
      acc[{i, i}] += c;
    } else {
      acc[{i, j}] += 0.5 * c;
      acc[{j, i}] += 0.5 * c;
    }
  };

  for (const auto& t : p.objective.terms) {
    switch (t.kind) {
      case VarKind::psd: {
        RMat& c = md.blocks[t.block].c;
        if (t.i == t.j) {
          c(t.i, t.i) -= t.coef;
        } else {
          c(t.i, t.j) -= 0.5 * t.coef;
          c(t.j, t.i) -= 0.5 * t.coef;
        }
        break;
      }
      case VarKind::nonneg: md.cl(t.i) -= t.coef; break;
      case VarKind::free: md.cf(t.i) -= t.coef; break;
    }
  }

  std::vector<Triplet> al_trip;
  std::vector<std::vector<Triplet>> row_al(md.m);
  RVec norms = RVec::Zero(md.m);
  std::vector<std::vector<std::map<std::pair<int, int>, double>>> psd_acc(
      md.m, std::vector<std::map<std::pair<int, int>, double>>(nb));
  for (int i = 0; i < md.m; ++i) {
    std::map<int, double> lp;
    for (const auto& t : cons[i].expr.terms) {
      switch (t.kind) {
        case VarKind::psd: add_sym(psd_acc[i][t.block], t.i, t.j, t.coef); break;
        case VarKind::nonneg: lp[t.i] += t.coef; break;
        case VarKind::free: md.af(i, t.i) += t.coef; break;
      }
    }
    if (slack_col[i] >= 0) lp[slack_col[i]] += cons[i].sense == Sense::le ? 1.0 : -1.0;
    double n2 = md.af.row(i).squaredNorm();
    for (const auto& [col, v] : lp) {
      row_al[i].emplace_back(i, col, v);
      n2 += v * v;
    }
    for (int b = 0; b < nb; ++b)
      for (const auto& [ij, v] : psd_acc[i][b]) n2 += v * v;
    norms(i) = std::sqrt(n2);
  }

  md.row_scale.resize(md.m);
  for (int i = 0; i < md.m; ++i) {
    const double d = norms(i) > 0 ? 1.0 / norms(i) : 1.0;
    md.row_scale(i) = d;
    md.b(i) = cons[i].rhs * d;
    md.af.row(i) *= d;
    for (const auto& t : row_al[i]) al_trip.emplace_back(t.row(), t.col(), t.value() * d);
    for (int b = 0; b < nb; ++b) {
      if (psd_acc[i][b].empty()) continue;
      BlockRow br;
      br.row = i;
      const int n = md.blocks[b].n;
      for (const auto& [ij, v] : psd_acc[i][b])
        if (v != 0.0) br.entries.push_back({ij.first, ij.second, v * d});
      if (br.entries.empty()) continue;
      for (const auto& e : br.entries) br.norm2 += e.v * e.v;
      if (static_cast<int>(br.entries.size()) > 2 * n) {
        br.dense = true;
        br.mat = RMat::Zero(n, n);
        for (const auto& e : br.entries) br.mat(e.a, e.b) = e.v;
        br.entries.clear();
        low_rank_factor(br);
      }
      md.blocks[b].rows.push_back(std::move(br));
    }
  }
  md.al.resize(md.m, nl);
  md.al.setFromTriplets(al_trip.begin(), al_trip.end());

  md.bscale = std::max(1.0, md.b.norm());
  double cn2 = md.cl.squaredNorm() + md.cf.squaredNorm();
  for (const auto& blk : md.blocks) cn2 += blk.c.squaredNorm();
  md.cscale = std::max(1.0, std::sqrt(cn2));
  md.b /= md.bscale;
  md.cl /= md.cscale;
  md.cf /= md.cscale;
  for (auto& blk : md.blocks) blk.c /= md.cscale;
  return md;
}

double inner(const BlockRow& r, const RMat& x) {
  if (r.dense) return r.mat.cwiseProduct(x).sum();
  double s = 0.0;
  for (const auto& e : r.entries) s += e.v * x(e.a, e.b);
  return s;
}

void add_scaled(const BlockRow& r, double y, RMat& out) {
  if (r.dense) {
    out.noalias() += y * r.mat;
  } else {
    for (const auto& e : r.entries) out(e.a, e.b) += y * e.v;
  }
}

RVec apply_a(const Model& md, const std::vector<RMat>& x, const RVec& xl, const RVec& xf) {
  RVec r = md.al * xl + md.af * xf;
  for (std::size_t b = 0; b < md.blocks.size(); ++b)
    for (const auto& row : md.blocks[b].rows) r(row.row) += inner(row, x[b]);
  return r;
}

std::vector<RMat> apply_at(const Model& md, const RVec& y) {
  std::vector<RMat> out;
  for (const auto& blk : md.blocks) {
    RMat a = RMat::Zero(blk.n, blk.n);
    for (const auto& row : blk.rows) add_scaled(row, y(row.row), a);
    out.push_back(std::move(a));
  }
  return out;
}

// Largest a with x + a dx PSD, via the smallest eigenvalue of L^-1 dx L^-T
// where x = L L'. Large blocks use Lanczos with full reorthogonalization; the
// estimate can be slightly long, so callers confirm the step by Cholesky.
double max_step_psd(const Eigen::LLT<RMat>& llt, const RMat& dx) {
  const int n = static_cast<int>(dx.rows());
  if (n == 0) return std::numeric_limits<double>::infinity();
  const auto lower = llt.matrixL();
  const auto upper = llt.matrixU();
  double lmin = 0.0;
  if (n <= 40) {
    RMat w = lower.solve(dx);
    w = lower.solve(w.transpose()).transpose();
    const RMat sym = 0.5 * (w + w.transpose());
    lmin = Eigen::SelfAdjointEigenSolver<RMat>(sym, Eigen::EigenvaluesOnly).eigenvalues()(0);
  } else {
    const int kmax = std::min(n, 40);
    RMat q(n, kmax + 1);
    RVec alpha(kmax), beta(kmax);
    std::mt19937_64 gen(12345);
    std::normal_distribution<double> nd;
    for (int i = 0; i < n; ++i) q(i, 0) = nd(gen);
    q.col(0).normalize();
    int k = 0;
    double last_beta = 0.0;
    for (; k < kmax; ++k) {
      RVec w = upper.solve(q.col(k));
      w = dx * w;
      w = lower.solve(w);
      alpha(k) = q.col(k).dot(w);
      for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(k + 1) * (q.leftCols(k + 1).transpose() * w);
      last_beta = w.norm();
      beta(k) = last_beta;
      if (last_beta <= 1e-12 * std::max(1.0, std::abs(alpha(k)))) {
        last_beta = 0.0;
        ++k;
        break;
      }
      q.col(k + 1) = w / last_beta;
    }
    Eigen::SelfAdjointEigenSolver<RMat> tri;
    RVec sub = k > 1 ? RVec(beta.head(k - 1)) : RVec();
    tri.computeFromTridiagonal(alpha.head(k), sub, Eigen::ComputeEigenvectors);
    lmin = tri.eigenvalues()(0) - std::abs(last_beta * tri.eigenvectors()(k - 1, 0));
  }
  return lmin >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double max_step_lp(const RVec& x, const RVec& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (int i = 0; i < x.size(); ++i)
    if (dx(i) < 0) a = std::min(a, -x(i) / dx(i));
  return a;
}

struct Direction {
  std::vector<RMat> dx, ds;
  RVec dxl, dsl, dxf, dy;
};

class Solver {
 public:
  Solver(const Model& md, const SolverOptions& opts) : md_(md), opts_(opts) {}

  SdpSolution run(const SdpProblem& p);

 private:
  void initialize();
  void residuals();
  bool factor();
  void solve_reduced(const RVec& rhs, const RVec& rf, RVec& dy, RVec& dxf) const;
  Direction direction(double sigma_mu, const std::vector<RMat>* corr, const RVec* corr_l);
  SdpSolution unscale(const SdpProblem& p, const Iterate& it, SolveStatus st) const;

  const Model& md_;
  SolverOptions opts_;
  Iterate it_;
  std::vector<Eigen::LLT<RMat>> xchol_, schol_;
  int nu_ = 0;

  // per-iteration quantities
  std::vector<RMat> rd_, sinv_, xrds_;
  RVec rp_, rdl_, rdf_;
  double pobj_ = 0, dobj_ = 0, mu_ = 0;
  RMat schur_;
  Eigen::LDLT<RMat> schur_ldlt_;
  RMat minv_af_;
  Eigen::FullPivLU<RMat> free_lu_;
};

void Solver::initialize() {
  const int nb = static_cast<int>(md_.blocks.size());
  it_.x.resize(nb);
  it_.s.resize(nb);
  nu_ = 0;
  for (int b = 0; b < nb; ++b) {
    const auto& blk = md_.blocks[b];
    const double n = blk.n;
    double xi = std::max(10.0, std::sqrt(n)), eta = std::max(10.0, std::sqrt(n));
    for (const auto& r : blk.rows) {
      const double an = std::sqrt(r.norm2);
      xi = std::max(xi, n * (1.0 + std::abs(md_.b(r.row))) / (1.0 + an));
      eta = std::max(eta, an);
    }
    eta = std::max(eta, blk.c.norm());
    it_.x[b] = xi * RMat::Identity(blk.n, blk.n);
    it_.s[b] = eta * RMat::Identity(blk.n, blk.n);
    nu_ += blk.n;
  }
  const int nl = static_cast<int>(md_.al.cols());
  if (nl > 0) {
    const double n = nl;
    double xi = std::max(10.0, std::sqrt(n)), eta = std::max(10.0, std::sqrt(n));
    for (int i = 0; i < md_.m; ++i) {
      const double an = md_.al.row(i).norm();
      if (an == 0.0) continue;
      xi = std::max(xi, n * (1.0 + std::abs(md_.b(i))) / (1.0 + an));
      eta = std::max(eta, an);
    }
    eta = std::max(eta, md_.cl.norm());
    // the LP block is an orthant, so a per-coordinate scale suffices
    xi = std::min(xi, 1e3 * std::max(10.0, std::sqrt(n)));
    it_.xl = RVec::Constant(nl, xi);
    it_.sl = RVec::Constant(nl, eta);
  } else {
    it_.xl.resize(0);
    it_.sl.resize(0);
  }
  nu_ += nl;
  xchol_.resize(nb);
  schol_.resize(nb);
  for (int b = 0; b < nb; ++b) {
    xchol_[b].compute(it_.x[b]);
    schol_[b].compute(it_.s[b]);
  }
  it_.xf = RVec::Zero(md_.af.cols());
  it_.y = RVec::Zero(md_.m);
}

void Solver::residuals() {
  const int nb = static_cast<int>(md_.blocks.size());
  rp_ = md_.b - apply_a(md_, it_.x, it_.xl, it_.xf);
  const auto aty = apply_at(md_, it_.y);
  rd_.resize(nb);
  pobj_ = md_.cl.dot(it_.xl) + md_.cf.dot(it_.xf);
  double comp = it_.xl.dot(it_.sl);
  for (int b = 0; b < nb; ++b) {
    rd_[b] = md_.blocks[b].c - aty[b] - it_.s[b];
    pobj_ += md_.blocks[b].c.cwiseProduct(it_.x[b]).sum();
    comp += it_.x[b].cwiseProduct(it_.s[b]).sum();
  }
  rdl_ = md_.cl - md_.al.transpose() * it_.y - it_.sl;
  rdf_ = md_.cf - md_.af.transpose() * it_.y;
  dobj_ = md_.b.dot(it_.y);
  mu_ = nu_ > 0 ? comp / nu_ : 0.0;
}

bool Solver::factor() {
  const int nb = static_cast<int>(md_.blocks.size());
  const int m = md_.m;
  schur_ = RMat::Zero(m, m);
  sinv_.resize(nb);
  xrds_.resize(nb);
  for (int b = 0; b < nb; ++b) {
    const auto& blk = md_.blocks[b];
    if (schol_[b].info() != Eigen::Success) return false;
    sinv_[b] = schol_[b].solve(RMat::Identity(blk.n, blk.n));
    sinv_[b] = 0.5 * (sinv_[b] + sinv_[b].transpose());
    const RMat& x = it_.x[b];
    const RMat& si = sinv_[b];
    if (rd_[b].norm() > 1e-14)
      xrds_[b].noalias() = x * rd_[b] * si;
    else
      xrds_[b] = RMat::Zero(blk.n, blk.n);

    const int nr = static_cast<int>(blk.rows.size());
    // Column ri of the Schur matrix for every dense row; the mirrored entry
    // is filled here only when rj is sparse.
    std::vector<RMat> xu(nr), su(nr);
    for (int i = 0; i < nr; ++i) {
      const auto& ri = blk.rows[i];
      if (ri.u.size() == 0) continue;
      xu[i].noalias() = x * ri.u;
      su[i].noalias() = si * ri.u;
    }
    RMat t(blk.n, blk.n);
    for (int i = 0; i < nr; ++i) {
      const auto& ri = blk.rows[i];
      if (!ri.dense) continue;
      const bool lr = ri.u.size() > 0;
      if (lr) {
        const RMat xud = xu[i] * ri.d.asDiagonal();
        for (int j = 0; j < nr; ++j) {
          const auto& rj = blk.rows[j];
          double v = 0.0;
          if (rj.u.size() > 0) {
            const RMat pm = rj.u.transpose() * xud;
            const RMat qm = rj.u.transpose() * su[i];
            v = (rj.d.asDiagonal() * pm).cwiseProduct(qm).sum();
          } else if (rj.dense) {
            v = (rj.mat * xud).cwiseProduct(su[i]).sum();
          } else {
            for (const auto& e : rj.entries) v += e.v * xud.row(e.a).dot(su[i].row(e.b));
          }
          schur_(rj.row, ri.row) += v;
          if (!rj.dense) schur_(ri.row, rj.row) += v;
        }
      } else {
        t.noalias() = x * ri.mat * si;
        for (int j = 0; j < nr; ++j) {
          const auto& rj = blk.rows[j];
          const double v = inner(rj, t);
          schur_(rj.row, ri.row) += v;
          if (!rj.dense) schur_(ri.row, rj.row) += v;
        }
      }
    }
    for (int i = 0; i < nr; ++i) {
      const auto& ri = blk.rows[i];
      if (ri.dense) continue;
      for (int j = i; j < nr; ++j) {
        const auto& rj = blk.rows[j];
        if (rj.dense) continue;
        double v = 0.0;
        for (const auto& e : ri.entries)
          for (const auto& f : rj.entries) v += e.v * f.v * x(e.a, f.a) * si(f.b, e.b);
        schur_(ri.row, rj.row) += v;
        if (j != i) schur_(rj.row, ri.row) += v;
      }
    }
  }
  if (md_.al.cols() > 0) {
    const RVec d = it_.xl.cwiseQuotient(it_.sl);
    const Eigen::SparseMatrix<double> ad = md_.al * d.asDiagonal();
    const Eigen::SparseMatrix<double> prod = ad * md_.al.transpose();
    for (int k = 0; k < prod.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator itr(prod, k); itr; ++itr)
        schur_(itr.row(), itr.col()) += itr.value();
  }
  schur_ = 0.5 * (schur_ + schur_.transpose());
  // tiny diagonal lift keeps LDLT stable on rank-deficient rows
  const double lift = 1e-14 * std::max(1.0, schur_.diagonal().cwiseAbs().maxCoeff());
  schur_.diagonal().array() += lift;
  schur_ldlt_.compute(schur_);
  if (schur_ldlt_.info() != Eigen::Success) return false;
  if (md_.af.cols() > 0) {
    minv_af_ = schur_ldlt_.solve(md_.af);
    free_lu_.compute(md_.af.transpose() * minv_af_);
  }
  return true;
}

void Solver::solve_reduced(const RVec& rhs, const RVec& rf, RVec& dy, RVec& dxf) const {
  if (md_.af.cols() > 0) {
    const RVec t = md_.af.transpose() * schur_ldlt_.solve(rhs) - rf;
    dxf = free_lu_.solve(t);
    dy = schur_ldlt_.solve(rhs - md_.af * dxf);
  } else {
    dxf.resize(0);
    dy = schur_ldlt_.solve(rhs);
  }
}

Direction Solver::direction(double sigma_mu, const std::vector<RMat>* corr, const RVec* corr_l) {
  const int nb = static_cast<int>(md_.blocks.size());
  std::vector<RMat> psi(nb);
  for (int b = 0; b < nb; ++b) {
    psi[b] = sigma_mu * sinv_[b] - it_.x[b] - xrds_[b];
    if (corr) psi[b] -= (*corr)[b];
  }
  const RVec dl = it_.xl.cwiseQuotient(it_.sl);
  RVec psi_l = sigma_mu * it_.sl.cwiseInverse() - it_.xl - dl.cwiseProduct(rdl_);
  if (corr_l) psi_l -= *corr_l;

  RVec rhs = rp_ - md_.al * psi_l;
  for (int b = 0; b < nb; ++b)
    for (const auto& row : md_.blocks[b].rows) rhs(row.row) -= inner(row, psi[b]);

  Direction d;
  solve_reduced(rhs, rdf_, d.dy, d.dxf);
  auto expand = [&](const RVec& dy, std::vector<RMat>& dx, RVec& dxl) {
    const auto atdy = apply_at(md_, dy);
    dx.resize(nb);
    for (int b = 0; b < nb; ++b) {
      RMat t = it_.x[b] * atdy[b] * sinv_[b];
      dx[b] = 0.5 * (t + t.transpose());
    }
    dxl = dl.cwiseProduct(md_.al.transpose() * dy);
  };
  expand(d.dy, d.dx, d.dxl);
  for (int b = 0; b < nb; ++b) d.dx[b] += 0.5 * (psi[b] + psi[b].transpose());
  d.dxl += psi_l;

  // One round of iterative refinement on the primal and free-variable
  // equations; late iterations have an ill-conditioned Schur matrix.
  const RVec r = rp_ - apply_a(md_, d.dx, d.dxl, d.dxf);
  const RVec rf = rdf_ - md_.af.transpose() * d.dy;
  if (r.size() > 0 && std::isfinite(r.squaredNorm()) && r.norm() > 1e-2 * rp_.norm()) {
    RVec ey, exf;
    solve_reduced(r, rf, ey, exf);
    std::vector<RMat> ex;
    RVec exl;
    expand(ey, ex, exl);
    const RVec r2 = r - apply_a(md_, ex, exl, exf);
    if (r2.norm() < r.norm()) {
      d.dy += ey;
      d.dxf += exf;
      for (int b = 0; b < nb; ++b) d.dx[b] += ex[b];
      d.dxl += exl;
    }
  }

  const auto atdy = apply_at(md_, d.dy);
  d.ds.resize(nb);
  for (int b = 0; b < nb; ++b) d.ds[b] = rd_[b] - atdy[b];
  d.dsl = rdl_ - md_.al.transpose() * d.dy;
  return d;
}

SdpSolution Solver::unscale(const SdpProblem& p, const Iterate& it, SolveStatus st) const {
  SdpSolution sol;
  sol.status = st;
  for (const auto& x : it.x) sol.psd.push_back(md_.bscale * 0.5 * (x + x.transpose()));
  sol.nonneg = md_.bscale * it.xl.head(md_.nl_user);
  sol.free = md_.bscale * it.xf;
  sol.dual = -md_.cscale * md_.row_scale.cwiseProduct(it.y);
  for (const auto& t : p.objective.terms) {
    switch (t.kind) {
      case VarKind::psd: sol.primal_objective += t.coef * sol.psd[t.block](t.i, t.j); break;
      case VarKind::nonneg: sol.primal_objective += t.coef * sol.nonneg(t.i); break;
      case VarKind::free: sol.primal_objective += t.coef * sol.free(t.i); break;
    }
  }
  for (int i = 0; i < md_.m; ++i) sol.dual_objective += p.constraints()[i].rhs * sol.dual(i);
  return sol;
}

SdpSolution Solver::run(const SdpProblem& p) {
  initialize();
  const int nb = static_cast<int>(md_.blocks.size());
  double cnorm2 = md_.cl.squaredNorm() + md_.cf.squaredNorm();
  for (const auto& blk : md_.blocks) cnorm2 += blk.c.squaredNorm();
  const double cnorm = std::sqrt(cnorm2);

  Iterate best = it_;
  double best_err = std::numeric_limits<double>::infinity();
  double gamma = 0.9;
  int stalls = 0, since_progress = 0;
  int iter = 0;
  for (; iter < opts_.max_iter; ++iter) {
    residuals();
    double rd_norm2 = rdl_.squaredNorm() + rdf_.squaredNorm();
    for (const auto& r : rd_) rd_norm2 += r.squaredNorm();
    // per-row violation relative to max(1, |rhs|) in the caller's units
    double relp = 0.0;
    for (int i = 0; i < md_.m; ++i)
      relp = std::max(relp, std::abs(rp_(i)) / std::max(md_.row_scale(i) / md_.bscale, std::abs(md_.b(i))));
    const double reld = std::sqrt(rd_norm2) / (1.0 + cnorm);
    const double objscale = md_.bscale * md_.cscale;
    const double relgap =
        objscale * std::abs(pobj_ - dobj_) / (1.0 + objscale * (std::abs(pobj_) + std::abs(dobj_)));
    const double err = std::max({relp, reld, relgap});
    if (opts_.verbose)
      std::fprintf(stderr, "%3d  pobj % .8e  dobj % .8e  relp %.2e  reld %.2e  gap %.2e  mu %.2e\n",
                   iter, pobj_, dobj_, relp, reld, relgap, mu_);
    if (!std::isfinite(err)) break;
    if (err < best_err) {
      if (err < 0.5 * best_err) since_progress = 0;
      best_err = err;
      best = it_;
    }
    // no halving of the best error for a while: the end-game has stalled
    if (++since_progress > 8 && best_err < 1e-3) break;

    if (err <= opts_.tol) {
      SdpSolution sol = unscale(p, it_, SolveStatus::optimal);
      sol.residuals = kkt_residuals(p, sol);
      sol.iterations = iter;
      if (opts_.verbose)
        std::fprintf(stderr, "     kkt primal %.2e  dual %.2e  rel_gap %.2e\n", sol.residuals.primal_feas,
                     sol.residuals.dual_feas, sol.residuals.rel_gap);
      if (sol.residuals.max() <= opts_.tol) return sol;
    }

    // Certificates: a dual ray with b'y > 0 proves primal infeasibility, a
    // primal ray with <C, X> < 0 proves dual infeasibility.
    if (dobj_ > 0) {
      double ray2 = (md_.cl - rdl_).squaredNorm() + (md_.cf - rdf_).squaredNorm();
      for (int b = 0; b < nb; ++b) ray2 += (md_.blocks[b].c - rd_[b]).squaredNorm();
      if (std::sqrt(ray2) / dobj_ < opts_.tol_infeasible) {
        SdpSolution sol = unscale(p, it_, SolveStatus::infeasible);
        sol.iterations = iter;
        return sol;
      }
    }
    if (pobj_ < 0) {
      const double ax = (md_.b - rp_).norm();
      if (ax / -pobj_ < opts_.tol_infeasible) {
        SdpSolution sol = unscale(p, it_, SolveStatus::unbounded);
        sol.iterations = iter;
        return sol;
      }
    }

    if (!factor()) break;

    // predictor
    Direction aff = direction(0.0, nullptr, nullptr);
    double ap = max_step_lp(it_.xl, aff.dxl), ad = max_step_lp(it_.sl, aff.dsl);
    for (int b = 0; b < nb; ++b) {
      ap = std::min(ap, max_step_psd(xchol_[b], aff.dx[b]));
      ad = std::min(ad, max_step_psd(schol_[b], aff.ds[b]));
    }
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double comp_aff = (it_.xl + ap * aff.dxl).dot(it_.sl + ad * aff.dsl);
    for (int b = 0; b < nb; ++b)
      comp_aff += (it_.x[b] + ap * aff.dx[b]).cwiseProduct(it_.s[b] + ad * aff.ds[b]).sum();
    const double mu_aff = nu_ > 0 ? comp_aff / nu_ : 0.0;
    double sigma = mu_ > 0 ? std::pow(std::max(0.0, mu_aff) / mu_, 3) : 0.0;
    sigma = std::min(1.0, sigma);

    // corrector
    std::vector<RMat> corr(nb);
    for (int b = 0; b < nb; ++b) corr[b].noalias() = aff.dx[b] * aff.ds[b] * sinv_[b];
    const RVec corr_l = aff.dxl.cwiseProduct(aff.dsl).cwiseQuotient(it_.sl);
    Direction d = direction(sigma * mu_, &corr, &corr_l);

    double mp = max_step_lp(it_.xl, d.dxl), md = max_step_lp(it_.sl, d.dsl);
    for (int b = 0; b < nb; ++b) {
      mp = std::min(mp, max_step_psd(xchol_[b], d.dx[b]));
      md = std::min(md, max_step_psd(schol_[b], d.ds[b]));
    }
    double step_p = std::min(1.0, gamma * mp);
    double step_d = std::min(1.0, gamma * md);
    // Confirm both steps by Cholesky; the factors are reused next iteration.
    auto confirm = [&](double& step, const std::vector<RMat>& base, const std::vector<RMat> Direction::*dir,
                       std::vector<Eigen::LLT<RMat>>& chol) {
      std::vector<Eigen::LLT<RMat>> trial(nb);
      for (int tries = 0; tries < 40; ++tries) {
        bool ok = true;
        for (int b = 0; b < nb && ok; ++b) {
          trial[b].compute(base[b] + step * (d.*dir)[b]);
          ok = trial[b].info() == Eigen::Success;
        }
        if (ok) {
          chol = std::move(trial);
          return true;
        }
        step *= 0.8;
      }
      return false;
    };
    if (!(step_p > 0) || !(step_d > 0) || !std::isfinite(step_p) || !std::isfinite(step_d)) break;
    if (!confirm(step_p, it_.x, &Direction::dx, xchol_) || !confirm(step_d, it_.s, &Direction::ds, schol_)) break;
    if (opts_.verbose)
      std::fprintf(stderr, "     sigma %.2e  step_p %.3e  step_d %.3e\n", sigma, step_p, step_d);

    for (int b = 0; b < nb; ++b) {
      it_.x[b] += step_p * d.dx[b];
      it_.s[b] += step_d * d.ds[b];
    }
    it_.xl += step_p * d.dxl;
    it_.sl += step_d * d.dsl;
    it_.xf += step_p * d.dxf;
    it_.y += step_d * d.dy;
    gamma = 0.9 + 0.09 * std::min(step_p, step_d);

    stalls = (step_p < 1e-8 && step_d < 1e-8) ? stalls + 1 : 0;
    if (stalls >= 3) break;
  }
  SdpSolution sol = unscale(p, best, SolveStatus::numerical_failure);
  sol.residuals = kkt_residuals(p, sol);
  if (sol.residuals.max() <= opts_.tol) sol.status = SolveStatus::optimal;
  sol.iterations = iter;
  return sol;
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& p, const SolverOptions& opts) {
  p.validate();
  if (!(opts.tol > 0) || opts.max_iter < 1)
    throw ValidationError("solve_sdp: tol must be > 0 and max_iter >= 1");
  const Model md = build_model(p);
  if (md.m == 0 && md.cl.size() == 0 && md.cf.size() == 0 && md.blocks.empty()) {
    SdpSolution sol;
    sol.status = SolveStatus::optimal;
    return sol;
  }
  Solver s(md, opts);
  return s.run(p);
}

}  // namespace hris::conic
