#pragma once

// Bounded-variable revised simplex on sparse data.
//
// Pipeline: power-of-two equilibration (exact in binary FP), column-singleton
// crash basis, composite phase 1 if the crash point is infeasible, Dantzig
// pricing with a maintained reduced-cost vector, bound-flip ratio test,
// product-form basis updates over a Gilbert-Peierls sparse LU, periodic
// refactorization, Bland's rule as anti-cycling fallback. All tie-breaking is
// by lowest index, so identical inputs give bit-identical solutions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "prosumeq/lp.hpp"

namespace prosumeq::lp {

struct SolveOptions {
  double tolerance = 1e-7;  // primal/dual tolerance on equilibrated data
  int max_iterations = 0;   // 0: derived from problem size
  bool verify = true;       // re-check residuals on the original data before reporting optimal
};

namespace detail {

// Column-compressed matrix: structural columns first, then one slack per row.
struct Csc {
  int m = 0, n = 0;  // rows, total columns (incl. slacks)
  std::vector<int> cp, ri;
  std::vector<double> vx;
};

// Sparse LU of a basis matrix via left-looking elimination with partial
// pivoting, columns ordered by a singleton cascade. Factor "positions" are
// elimination steps; slots are basis positions (one per row of the LP).
class BasisFactor {
 public:
  // Returns false if structurally/numerically singular; deficient_slots()
  // then names the basis positions that found no pivot.
  bool factor(const Csc& A, const std::vector<int>& basis) {
    m_ = A.m;
    const int mm = m_;
    Lp_.assign(1, 0); Li_.clear(); Lx_.clear();
    Up_.assign(1, 0); Ui_.clear(); Ux_.clear(); Udiag_.clear();
    prow_of_pos_.clear(); slot_of_pos_.clear();
    pos_of_row_.assign(mm, -1);
    pos_of_slot_.assign(mm, -1);
    deficient_slots_.clear();
    work_.assign(mm, 0.0);
    mark_.assign(mm, 0);
    epoch_ = 0;

    const std::vector<int> order = cascade_order(A, basis);

    std::vector<int> stack, cursor, topo;
    stack.reserve(mm); cursor.reserve(mm); topo.reserve(mm);

    for (int oi = 0; oi < mm; ++oi) {
      const int slot = order[oi];
      const int col = basis[slot];
      ++epoch_;
      topo.clear();
      // symbolic: reach of the column pattern through finished pivots
      for (int p = A.cp[col]; p < A.cp[col + 1]; ++p) dfs_reach(A.ri[p], stack, cursor, topo);
      // numeric: scatter column, eliminate in topological order
      for (int p = A.cp[col]; p < A.cp[col + 1]; ++p) work_[A.ri[p]] = A.vx[p];
      for (int t = static_cast<int>(topo.size()) - 1; t >= 0; --t) {
        const int r = topo[t];
        const int pr = pos_of_row_[r];
        if (pr < 0) continue;
        const double xr = work_[r];
        if (xr == 0.0) continue;
        for (int k = Lp_[pr]; k < Lp_[pr + 1]; ++k) work_[Li_[k]] -= Lx_[k] * xr;
      }
      // pivot: largest magnitude among rows without a pivot yet
      int pivot_row = -1;
      double pivot_abs = 0.0, col_abs = 0.0;
      for (int r : topo) {
        const double a = std::fabs(work_[r]);
        col_abs = std::max(col_abs, a);
        if (pos_of_row_[r] < 0 && a > pivot_abs) { pivot_abs = a; pivot_row = r; }
      }
      if (pivot_row < 0 || pivot_abs <= 1e-11 * std::max(1.0, col_abs)) {
        deficient_slots_.push_back(slot);
        for (int r : topo) work_[r] = 0.0;
        continue;
      }
      const int pos = static_cast<int>(prow_of_pos_.size());
      const double piv = work_[pivot_row];
      const double drop = 1e-14 * std::max(1.0, col_abs);
      for (int r : topo) {
        const double v = work_[r];
        work_[r] = 0.0;
        if (r == pivot_row || std::fabs(v) <= drop) continue;
        if (pos_of_row_[r] >= 0) { Ui_.push_back(pos_of_row_[r]); Ux_.push_back(v); }
        else { Li_.push_back(r); Lx_.push_back(v / piv); }
      }
      Up_.push_back(static_cast<int>(Ui_.size()));
      Lp_.push_back(static_cast<int>(Li_.size()));
      Udiag_.push_back(piv);
      prow_of_pos_.push_back(pivot_row);
      slot_of_pos_.push_back(slot);
      pos_of_row_[pivot_row] = pos;
      pos_of_slot_[slot] = pos;
    }
    return deficient_slots_.empty();
  }

  int rows_without_pivot(std::vector<int>& out) const {
    out.clear();
    for (int r = 0; r < m_; ++r)
      if (pos_of_row_[r] < 0) out.push_back(r);
    return static_cast<int>(out.size());
  }
  const std::vector<int>& deficient_slots() const { return deficient_slots_; }
  int nnz() const { return static_cast<int>(Li_.size() + Ui_.size()) + m_; }

  // Solve B z = v. Input dense by row (consumed), output dense by slot.
  void ftran(std::vector<double>& v, std::vector<double>& z_by_slot) const {
    const int npos = static_cast<int>(prow_of_pos_.size());
    for (int k = 0; k < npos; ++k) {
      const double t = v[prow_of_pos_[k]];
      if (t == 0.0) continue;
      for (int p = Lp_[k]; p < Lp_[k + 1]; ++p) v[Li_[p]] -= Lx_[p] * t;
    }
    for (int k = npos - 1; k >= 0; --k) {
      const int r = prow_of_pos_[k];
      double t = v[r];
      if (t == 0.0) continue;
      t /= Udiag_[k];
      v[r] = t;
      for (int p = Up_[k]; p < Up_[k + 1]; ++p) v[prow_of_pos_[Ui_[p]]] -= Ux_[p] * t;
    }
    for (int k = 0; k < npos; ++k) {
      z_by_slot[slot_of_pos_[k]] = v[prow_of_pos_[k]];
      v[prow_of_pos_[k]] = 0.0;
    }
  }

  // Solve B' y = g. Input dense by slot (left untouched), output dense by row.
  void btran(const std::vector<double>& g_by_slot, std::vector<double>& y_by_row,
             std::vector<double>& scratch_pos) const {
    const int npos = static_cast<int>(prow_of_pos_.size());
    for (int k = 0; k < npos; ++k) {
      double t = g_by_slot[slot_of_pos_[k]];
      for (int p = Up_[k]; p < Up_[k + 1]; ++p) t -= Ux_[p] * scratch_pos[Ui_[p]];
      scratch_pos[k] = t / Udiag_[k];
    }
    for (int k = npos - 1; k >= 0; --k) {
      double t = scratch_pos[k];
      for (int p = Lp_[k]; p < Lp_[k + 1]; ++p) t -= Lx_[p] * y_by_row[Li_[p]];
      y_by_row[prow_of_pos_[k]] = t;
    }
  }

 private:
  // Column order: repeatedly take basis columns with a single entry in still
  // active rows; leftovers (the "bump") keep their slot order.
  std::vector<int> cascade_order(const Csc& A, const std::vector<int>& basis) const {
    const int mm = m_;
    std::vector<int> count(mm, 0), row_head(mm, -1);
    // row adjacency over basis columns
    std::vector<int> adj_next, adj_slot;
    adj_next.reserve(64); adj_slot.reserve(64);
    for (int s = 0; s < mm; ++s) {
      const int col = basis[s];
      count[s] = A.cp[col + 1] - A.cp[col];
      for (int p = A.cp[col]; p < A.cp[col + 1]; ++p) {
        adj_slot.push_back(s);
        adj_next.push_back(row_head[A.ri[p]]);
        row_head[A.ri[p]] = static_cast<int>(adj_slot.size()) - 1;
      }
    }
    std::vector<char> row_done(mm, 0), slot_done(mm, 0);
    std::vector<int> queue, order;
    order.reserve(mm);
    for (int s = 0; s < mm; ++s)
      if (count[s] == 1) queue.push_back(s);
    std::size_t qh = 0;
    while (qh < queue.size()) {
      const int s = queue[qh++];
      if (slot_done[s] || count[s] != 1) continue;
      // find the active row of this column
      const int col = basis[s];
      int row = -1;
      for (int p = A.cp[col]; p < A.cp[col + 1]; ++p)
        if (!row_done[A.ri[p]]) { row = A.ri[p]; break; }
      if (row < 0) continue;
      slot_done[s] = 1;
      row_done[row] = 1;
      order.push_back(s);
      for (int e = row_head[row]; e >= 0; e = adj_next[e]) {
        const int t = adj_slot[e];
        if (slot_done[t]) continue;
        if (--count[t] == 1) queue.push_back(t);
      }
    }
    for (int s = 0; s < mm; ++s)
      if (!slot_done[s]) order.push_back(s);
    return order;
  }

  void dfs_reach(int root, std::vector<int>& stack, std::vector<int>& cursor,
                 std::vector<int>& topo) {
    if (mark_[root] == epoch_) return;
    stack.clear(); cursor.clear();
    stack.push_back(root); cursor.push_back(pos_of_row_[root] >= 0 ? Lp_[pos_of_row_[root]] : 0);
    mark_[root] = epoch_;
    while (!stack.empty()) {
      const int r = stack.back();
      const int pr = pos_of_row_[r];
      bool descended = false;
      if (pr >= 0) {
        int& c = cursor.back();
        while (c < Lp_[pr + 1]) {
          const int child = Li_[c++];
          if (mark_[child] != epoch_) {
            mark_[child] = epoch_;
            stack.push_back(child);
            cursor.push_back(pos_of_row_[child] >= 0 ? Lp_[pos_of_row_[child]] : 0);
            descended = true;
            break;
          }
        }
      }
      if (!descended) {
        topo.push_back(r);
        stack.pop_back();
        cursor.pop_back();
      }
    }
  }

  int m_ = 0;
  std::vector<int> Lp_, Li_, Up_, Ui_;
  std::vector<double> Lx_, Ux_, Udiag_;
  std::vector<int> prow_of_pos_, pos_of_row_, pos_of_slot_, slot_of_pos_;
  std::vector<int> deficient_slots_;
  std::vector<double> work_;
  std::vector<int> mark_;
  int epoch_ = 0;
};

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SolveOptions& opts) : lp_(lp), opts_(opts) {}

  LpSolution run() {
    build();
    crash();
    if (!refactor()) return breakdown("initial basis could not be factored");

    const int cap = opts_.max_iterations > 0 ? opts_.max_iterations : 20000 + 30 * (m_ + n_);
    int safety = 0;
    for (;;) {
      if (max_infeasibility() > tol_) {
        const int rc = phase1(cap);
        if (rc == kInfeasible) return infeasible_result();
        if (rc != kDone) return breakdown(rc == kIterLimit ? "iteration limit in phase 1" : "numerical trouble in phase 1");
      }
      const int rc = phase2(cap);
      if (rc == kUnbounded) return unbounded_result();
      if (rc == kIterLimit) return breakdown("iteration limit in phase 2");
      if (rc != kDone) return breakdown("numerical trouble in phase 2");
      // clean copy of the final basis, then confirm both feasibilities held up
      if (!refactor()) return breakdown("final basis could not be factored");
      if (max_infeasibility() > 10.0 * tol_ || worst_dual_violation() > 10.0 * tol_) {
        if (++safety > 3) return breakdown("residual check kept failing after re-solves");
        continue;
      }
      break;
    }
    return extract();
  }

 private:
  enum { kDone = 0, kInfeasible = 1, kUnbounded = 2, kIterLimit = 3, kTrouble = 4 };
  enum Stat : signed char { kLower = 0, kUpper = 1, kBasic = 2, kFree = 3, kFixed = 4 };

  // ---- setup -------------------------------------------------------------

  static double pow2_round(double x) {
    if (x <= 0.0 || !std::isfinite(x)) return 1.0;
    return std::exp2(std::round(std::log2(x)));
  }

  void build() {
    m_ = lp_.num_rows();
    n_ = lp_.num_vars();
    N_ = n_ + m_;
    tol_ = opts_.tolerance;

    rscale_.assign(m_, 1.0);
    cscale_.assign(N_, 1.0);
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < m_; ++i) {
        double mx = 0.0;
        const auto& row = lp_.rows[i];
        for (std::size_t k = 0; k < row.idx.size(); ++k)
          mx = std::max(mx, std::fabs(row.val[k]) * cscale_[row.idx[k]]);
        if (mx > 0.0) rscale_[i] = 1.0 / pow2_round(mx);
      }
      std::vector<double> colmx(n_, 0.0);
      for (int i = 0; i < m_; ++i) {
        const auto& row = lp_.rows[i];
        for (std::size_t k = 0; k < row.idx.size(); ++k)
          colmx[row.idx[k]] = std::max(colmx[row.idx[k]], std::fabs(row.val[k]) * rscale_[i]);
      }
      for (int j = 0; j < n_; ++j)
        if (colmx[j] > 0.0) cscale_[j] = 1.0 / pow2_round(colmx[j]);
    }
    for (int i = 0; i < m_; ++i) cscale_[n_ + i] = pow2_round(1.0 / rscale_[i]);

    // scaled bounds/costs; slack bounds encode the row relation
    lb_.assign(N_, 0.0); ub_.assign(N_, 0.0); cost_.assign(N_, 0.0);
    for (int j = 0; j < n_; ++j) {
      const auto& v = lp_.vars[j];
      lb_[j] = v.lower / cscale_[j];
      ub_[j] = v.upper / cscale_[j];
      cost_[j] = v.cost * cscale_[j];
    }
    b_.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      const auto& row = lp_.rows[i];
      b_[i] = row.rhs * rscale_[i];
      const int sj = n_ + i;
      const double sc = cscale_[sj] * rscale_[i];  // scaled slack coefficient
      slack_coef_.push_back(sc);
      switch (row.rel) {
        case Relation::less_equal: lb_[sj] = 0.0; ub_[sj] = kInf; break;
        case Relation::equal: lb_[sj] = 0.0; ub_[sj] = 0.0; break;
        case Relation::greater_equal: lb_[sj] = -kInf; ub_[sj] = 0.0; break;
      }
    }

    // scaled matrix, CSC over structural+slack columns and a CSR mirror
    std::vector<int> colcnt(N_, 0);
    std::size_t nnz = 0;
    for (const auto& row : lp_.rows) {
      for (int j : row.idx) ++colcnt[j];
      nnz += row.idx.size();
    }
    for (int i = 0; i < m_; ++i) ++colcnt[n_ + i];
    A_.m = m_; A_.n = N_;
    A_.cp.assign(N_ + 1, 0);
    for (int j = 0; j < N_; ++j) A_.cp[j + 1] = A_.cp[j] + colcnt[j];
    A_.ri.resize(nnz + m_); A_.vx.resize(nnz + m_);
    std::vector<int> fill(A_.cp.begin(), A_.cp.end() - 1);
    rp_.assign(m_ + 1, 0);
    for (int i = 0; i < m_; ++i) rp_[i + 1] = rp_[i] + static_cast<int>(lp_.rows[i].idx.size());
    ri_.resize(nnz); rv_.resize(nnz);
    for (int i = 0; i < m_; ++i) {
      const auto& row = lp_.rows[i];
      int rpos = rp_[i];
      for (std::size_t k = 0; k < row.idx.size(); ++k) {
        const int j = row.idx[k];
        const double v = row.val[k] * rscale_[i] * cscale_[j];
        A_.ri[fill[j]] = i; A_.vx[fill[j]] = v; ++fill[j];
        ri_[rpos] = j; rv_[rpos] = v; ++rpos;
      }
      const int sj = n_ + i;
      A_.ri[fill[sj]] = i; A_.vx[fill[sj]] = slack_coef_[i]; ++fill[sj];
    }

    colmax_.assign(N_, 0.0);
    dtol_.assign(N_, tol_);
    for (int j = 0; j < N_; ++j) {
      for (int p = A_.cp[j]; p < A_.cp[j + 1]; ++p) colmax_[j] = std::max(colmax_[j], std::fabs(A_.vx[p]));
      // per-column dual tolerance: a global one keyed to max|c| lets cheap
      // columns keep large true violations when costs span orders of magnitude
      dtol_[j] = tol_ * (1.0 + std::fabs(cost_[j]));
    }

    x_.assign(N_, 0.0);
    stat_.assign(N_, kLower);
    for (int j = 0; j < N_; ++j) {
      if (lb_[j] == ub_[j]) { stat_[j] = kFixed; x_[j] = lb_[j]; }
      else if (std::isfinite(lb_[j]) && (!std::isfinite(ub_[j]) || std::fabs(lb_[j]) <= std::fabs(ub_[j]))) {
        stat_[j] = kLower; x_[j] = lb_[j];
      } else if (std::isfinite(ub_[j])) { stat_[j] = kUpper; x_[j] = ub_[j]; }
      else { stat_[j] = kFree; x_[j] = 0.0; }
    }

    d_.assign(N_, 0.0);
    basis_.assign(m_, -1);
    work_row_.assign(m_, 0.0);
    w_slot_.assign(m_, 0.0);
    rho_slot_.assign(m_, 0.0);
    rho_row_.assign(m_, 0.0);
    scratch_pos_.assign(m_, 0.0);
    alpha_.assign(N_, 0.0);
    y_row_.assign(m_, 0.0);
    g_slot_.assign(m_, 0.0);
  }

  // Prefer a structural column per row when it is the row's only candidate
  // (singleton cascade); wide or unbounded ranges win so the basic variable
  // can absorb the rhs. Rows left over take their slack.
  void crash() {
    std::vector<int> active_cnt(n_, 0);
    for (int j = 0; j < n_; ++j) active_cnt[j] = A_.cp[j + 1] - A_.cp[j];
    std::vector<char> row_done(m_, 0), col_used(n_, 0);
    for (int pass = 0; pass < 50; ++pass) {
      bool changed = false;
      for (int i = 0; i < m_; ++i) {
        if (row_done[i]) continue;
        int best = -1;
        double best_range = -1.0;
        for (int p = rp_[i]; p < rp_[i + 1]; ++p) {
          const int j = ri_[p];
          if (col_used[j] || stat_[j] == kFixed || active_cnt[j] != 1) continue;
          if (std::fabs(rv_[p]) < 0.25 * colmax_[j]) continue;
          const double range = ub_[j] - lb_[j];  // +inf beats any finite range
          if (range > best_range || (range == best_range && (best < 0 || j < best))) {
            best = j; best_range = range;
          }
        }
        if (best < 0) continue;
        basis_[i] = best;
        col_used[best] = 1;
        row_done[i] = 1;
        changed = true;
        for (int p = rp_[i]; p < rp_[i + 1]; ++p) --active_cnt[ri_[p]];
      }
      if (!changed) break;
    }
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < 0) basis_[i] = n_ + i;
    for (int i = 0; i < m_; ++i) stat_[basis_[i]] = kBasic;
  }

  // Factor current basis; on singularity patch deficient slots with their
  // row's slack and retry. Recomputes basic values from the nonbasic point.
  bool refactor() {
    for (int attempt = 0; attempt < 3; ++attempt) {
      if (lu_.factor(A_, basis_)) {
        etas_pivot_.clear(); etas_slot_.clear(); etas_idx_.clear(); etas_val_.clear(); etas_ptr_.assign(1, 0);
        ++refactor_count_;
        compute_basic_values();
        return true;
      }
      std::vector<int> rows;
      lu_.rows_without_pivot(rows);
      const auto& slots = lu_.deficient_slots();
      for (std::size_t k = 0; k < slots.size() && k < rows.size(); ++k) {
        const int old = basis_[slots[k]];
        stat_[old] = nonbasic_stat_for(old);
        x_[old] = nonbasic_value_for(old);
        const int slack = n_ + rows[k];
        if (stat_[slack] == kBasic) return false;  // would duplicate a basic slack
        basis_[slots[k]] = slack;
        stat_[slack] = kBasic;
      }
    }
    return false;
  }

  Stat nonbasic_stat_for(int j) const {
    if (lb_[j] == ub_[j]) return kFixed;
    if (std::isfinite(lb_[j]) && (!std::isfinite(ub_[j]) || std::fabs(lb_[j]) <= std::fabs(ub_[j]))) return kLower;
    if (std::isfinite(ub_[j])) return kUpper;
    return kFree;
  }
  double nonbasic_value_for(int j) const {
    switch (nonbasic_stat_for(j)) {
      case kLower: case kFixed: return lb_[j];
      case kUpper: return ub_[j];
      default: return 0.0;
    }
  }

  void compute_basic_values() {
    std::fill(work_row_.begin(), work_row_.end(), 0.0);
    for (int i = 0; i < m_; ++i) work_row_[i] = b_[i];
    for (int j = 0; j < N_; ++j) {
      if (stat_[j] == kBasic || x_[j] == 0.0) continue;
      const double xj = x_[j];
      for (int p = A_.cp[j]; p < A_.cp[j + 1]; ++p) work_row_[A_.ri[p]] -= A_.vx[p] * xj;
    }
    lu_.ftran(work_row_, w_slot_);
    for (int i = 0; i < m_; ++i) x_[basis_[i]] = w_slot_[i];
    std::fill(w_slot_.begin(), w_slot_.end(), 0.0);
  }

  // ---- shared solve machinery ---------------------------------------------

  // w = B^-1 a_q, dense by slot plus support list.
  void ftran_column(int q) {
    std::fill(work_row_.begin(), work_row_.end(), 0.0);
    for (int p = A_.cp[q]; p < A_.cp[q + 1]; ++p) work_row_[A_.ri[p]] = A_.vx[p];
    std::fill(w_slot_.begin(), w_slot_.end(), 0.0);
    lu_.ftran(work_row_, w_slot_);
    const int ne = static_cast<int>(etas_pivot_.size());
    for (int e = 0; e < ne; ++e) {
      const int slot = etas_slot_[e];
      double t = w_slot_[slot];
      if (t == 0.0) continue;
      t /= etas_pivot_[e];
      w_slot_[slot] = t;
      for (int p = etas_ptr_[e]; p < etas_ptr_[e + 1]; ++p) w_slot_[etas_idx_[p]] -= etas_val_[p] * t;
    }
    w_support_.clear();
    for (int i = 0; i < m_; ++i)
      if (w_slot_[i] != 0.0) w_support_.push_back(i);
  }

  // y = B^-T g (g dense by slot), dense by row.
  void btran_vector(const std::vector<double>& g_in, std::vector<double>& y_out) {
    btran_tmp_ = g_in;
    for (int e = static_cast<int>(etas_pivot_.size()) - 1; e >= 0; --e) {
      const int slot = etas_slot_[e];
      double acc = btran_tmp_[slot];
      for (int p = etas_ptr_[e]; p < etas_ptr_[e + 1]; ++p) acc -= etas_val_[p] * btran_tmp_[etas_idx_[p]];
      btran_tmp_[slot] = acc / etas_pivot_[e];
    }
    std::fill(y_out.begin(), y_out.end(), 0.0);
    lu_.btran(btran_tmp_, y_out, scratch_pos_);
  }

  void push_eta(int slot) {
    etas_slot_.push_back(slot);
    etas_pivot_.push_back(w_slot_[slot]);
    for (int i : w_support_)
      if (i != slot) { etas_idx_.push_back(i); etas_val_.push_back(w_slot_[i]); }
    etas_ptr_.push_back(static_cast<int>(etas_idx_.size()));
  }

  bool etas_full() const {
    return etas_pivot_.size() >= 100 ||
           etas_idx_.size() > static_cast<std::size_t>(2 * lu_.nnz() + 2000);
  }

  double max_infeasibility() const {
    double worst = 0.0;
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      if (std::isfinite(lb_[j])) worst = std::max(worst, lb_[j] - x_[j]);
      if (std::isfinite(ub_[j])) worst = std::max(worst, x_[j] - ub_[j]);
    }
    return worst;
  }

  // Ratio test along direction s for entering q; returns blocking slot (or -1
  // for a bound flip, -2 for unbounded) and the step in *step.
  int ratio_test(int q, double s, bool phase1_rules, double* step) {
    double theta = kInf;
    int block = -1;
    double block_w = 0.0;
    const double own_range = ub_[q] - lb_[q];
    if (std::isfinite(own_range)) theta = own_range;
    for (int i : w_support_) {
      const double wi = w_slot_[i];
      if (std::fabs(wi) <= 1e-9) continue;
      const int k = basis_[i];
      const double rate = -s * wi;  // dx_k/dtheta
      double target;
      if (phase1_rules && x_[k] < lb_[k] - tol_) target = rate > 0.0 ? lb_[k] : -kInf;
      else if (phase1_rules && x_[k] > ub_[k] + tol_) target = rate < 0.0 ? ub_[k] : kInf;
      else target = rate > 0.0 ? ub_[k] : lb_[k];
      if (!std::isfinite(target)) continue;
      const double t = std::max(0.0, (target - x_[k]) / rate);
      if (t < theta - 1e-12 || (t < theta + 1e-12 && block >= 0 &&
                                (bland_ ? basis_[i] < basis_[block]
                                        : std::fabs(wi) > std::fabs(block_w)))) {
        theta = t;
        block = i;
        block_w = wi;
      }
    }
    *step = theta;
    if (!std::isfinite(theta)) return -2;
    if (block < 0) return -1;  // blocked by the entering variable's own range
    return block;
  }

  // Applies the move; for a true pivot swaps basis slot `block` to q.
  void apply_step(int q, double s, int block, double theta) {
    if (block < 0) {  // bound flip
      const double delta = s * theta;
      for (int i : w_support_) x_[basis_[i]] -= delta * w_slot_[i];
      x_[q] = stat_[q] == kLower ? ub_[q] : lb_[q];
      stat_[q] = stat_[q] == kLower ? kUpper : kLower;
      return;
    }
    const int leaving = basis_[block];
    const double rate = -s * w_slot_[block];
    const double target = x_[leaving] + rate * theta;
    for (int i : w_support_) x_[basis_[i]] -= s * theta * w_slot_[i];
    // snap the leaving variable to the bound it hit
    double snapped;
    if (std::isfinite(lb_[leaving]) && std::isfinite(ub_[leaving]))
      snapped = std::fabs(target - lb_[leaving]) <= std::fabs(target - ub_[leaving]) ? lb_[leaving] : ub_[leaving];
    else if (std::isfinite(lb_[leaving])) snapped = lb_[leaving];
    else snapped = ub_[leaving];
    x_[leaving] = snapped;
    stat_[leaving] = lb_[leaving] == ub_[leaving] ? kFixed : (snapped == lb_[leaving] ? kLower : kUpper);
    x_[q] = (stat_[q] == kUpper ? ub_[q] : (stat_[q] == kLower ? lb_[q] : 0.0)) + s * theta;
    stat_[q] = kBasic;
    basis_[block] = q;
    push_eta(block);
  }

  void track_degeneracy(double theta) {
    if (theta <= 1e-10) {
      if (++degen_streak_ > 600) bland_ = true;
    } else {
      degen_streak_ = 0;
      if (theta > 1e-8) bland_ = false;
    }
  }

  // ---- phase 1 -------------------------------------------------------------

  int phase1(int cap) {
    while (iterations_ < cap) {
      if (max_infeasibility() <= tol_) return kDone;
      // gradient of the total bound violation wrt basic values
      std::fill(g_slot_.begin(), g_slot_.end(), 0.0);
      for (int i = 0; i < m_; ++i) {
        const int j = basis_[i];
        if (x_[j] < lb_[j] - tol_) g_slot_[i] = -1.0;
        else if (x_[j] > ub_[j] + tol_) g_slot_[i] = 1.0;
      }
      btran_vector(g_slot_, y_row_);
      // d1_j = -y1' a_j for nonbasic j; Dantzig with lowest-index ties
      int q = -1;
      double best = tol_, s = 1.0;
      for (int j = 0; j < N_; ++j) {
        const Stat st = static_cast<Stat>(stat_[j]);
        if (st == kBasic || st == kFixed) continue;
        double d1 = 0.0;
        for (int p = A_.cp[j]; p < A_.cp[j + 1]; ++p) d1 -= A_.vx[p] * y_row_[A_.ri[p]];
        double viol = 0.0, dir = 1.0;
        if (st == kLower && d1 < -tol_) { viol = -d1; dir = 1.0; }
        else if (st == kUpper && d1 > tol_) { viol = d1; dir = -1.0; }
        else if (st == kFree && std::fabs(d1) > tol_) { viol = std::fabs(d1); dir = d1 < 0.0 ? 1.0 : -1.0; }
        if (viol > best || (bland_ && viol > tol_)) { q = j; best = viol; s = dir; if (bland_) break; }
      }
      if (q < 0) return kInfeasible;
      ftran_column(q);
      double theta = 0.0;
      const int block = ratio_test(q, s, true, &theta);
      if (block == -2) return kTrouble;  // the violation sum is bounded below, so a block must exist
      apply_step(q, s, block, theta);
      ++iterations_;
      track_degeneracy(theta);
      if (block >= 0 && etas_full() && !refactor()) return kTrouble;
    }
    return kIterLimit;
  }

  // ---- phase 2 -------------------------------------------------------------

  void recompute_duals() {
    for (int i = 0; i < m_; ++i) g_slot_[i] = cost_[basis_[i]];
    btran_vector(g_slot_, y_row_);
    for (int j = 0; j < N_; ++j) {
      double d = cost_[j];
      for (int p = A_.cp[j]; p < A_.cp[j + 1]; ++p) d -= A_.vx[p] * y_row_[A_.ri[p]];
      d_[j] = d;
    }
    for (int i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
  }

  // largest sign violation of the recomputed reduced costs, relative per column
  double worst_dual_violation() {
    recompute_duals();
    double worst = 0.0;
    for (int j = 0; j < N_; ++j) {
      double viol = 0.0;
      switch (stat_[j]) {
        case kLower: viol = -d_[j]; break;
        case kUpper: viol = d_[j]; break;
        case kFree: viol = std::fabs(d_[j]); break;
        default: break;
      }
      worst = std::max(worst, viol / (1.0 + std::fabs(cost_[j])));
    }
    return worst;
  }

  int phase2(int cap) {
    recompute_duals();
    while (iterations_ < cap) {
      int q = -1;
      double best = 0.0, s = 1.0;
      for (int j = 0; j < N_; ++j) {
        double viol = 0.0, dir = 1.0;
        switch (stat_[j]) {
          case kLower: if (d_[j] < -dtol_[j]) { viol = -d_[j]; dir = 1.0; } break;
          case kUpper: if (d_[j] > dtol_[j]) { viol = d_[j]; dir = -1.0; } break;
          case kFree: if (std::fabs(d_[j]) > dtol_[j]) { viol = std::fabs(d_[j]); dir = d_[j] < 0.0 ? 1.0 : -1.0; } break;
          default: break;
        }
        if (viol == 0.0) continue;
        if (bland_) { q = j; s = dir; break; }
        if (viol > best) { q = j; best = viol; s = dir; }
      }
      if (q < 0) return kDone;
      ftran_column(q);
      double theta = 0.0;
      const int block = ratio_test(q, s, false, &theta);
      if (block == -2) { unbounded_var_ = q; return kUnbounded; }
      if (block < 0) {
        apply_step(q, s, block, theta);
        ++iterations_;
        continue;
      }
      // dual update needs the pricing row before the basis changes
      std::fill(rho_slot_.begin(), rho_slot_.end(), 0.0);
      rho_slot_[block] = 1.0;
      btran_vector(rho_slot_, rho_row_);
      alpha_touched_.clear();
      for (int i = 0; i < m_; ++i) {
        const double r = rho_row_[i];
        if (r == 0.0) continue;
        for (int p = rp_[i]; p < rp_[i + 1]; ++p) {
          if (alpha_[ri_[p]] == 0.0) alpha_touched_.push_back(ri_[p]);
          alpha_[ri_[p]] += r * rv_[p];
        }
        const int sj = n_ + i;
        if (alpha_[sj] == 0.0) alpha_touched_.push_back(sj);
        alpha_[sj] += r * slack_coef_[i];
      }
      const int leaving = basis_[block];
      const double alpha_q = alpha_[q];
      if (std::fabs(alpha_q) < 1e-10) {  // stale factorization; rebuild and retry
        for (int j : alpha_touched_) alpha_[j] = 0.0;
        if (!refactor()) return kTrouble;
        recompute_duals();
        if (++stall_guard_ > 20) return kTrouble;
        continue;
      }
      const double theta_d = d_[q] / alpha_q;
      for (int j : alpha_touched_) {
        if (stat_[j] != kBasic && stat_[j] != kFixed) d_[j] -= theta_d * alpha_[j];
        alpha_[j] = 0.0;
      }
      d_[q] = 0.0;
      d_[leaving] = -theta_d;
      apply_step(q, s, block, theta);
      ++iterations_;
      stall_guard_ = 0;
      track_degeneracy(theta);
      if (etas_full()) {
        if (!refactor()) return kTrouble;
        recompute_duals();
      }
    }
    return kIterLimit;
  }

  // ---- results -------------------------------------------------------------

  LpSolution base_result(SolveStatus st, std::string msg) const {
    LpSolution sol;
    sol.status = st;
    sol.message = std::move(msg);
    sol.iterations = iterations_;
    sol.refactorizations = refactor_count_;
    return sol;
  }

  LpSolution breakdown(std::string msg) { return base_result(SolveStatus::numerical_breakdown, std::move(msg)); }

  LpSolution infeasible_result() {
    char buf[128];
    std::snprintf(buf, sizeof buf, "phase 1 optimum leaves max bound violation %.3e (scaled)", max_infeasibility());
    return base_result(SolveStatus::infeasible, buf);
  }

  LpSolution unbounded_result() {
    std::string name = unbounded_var_ < n_ ? lp_.vars[unbounded_var_].name
                                           : "slack:" + lp_.rows[unbounded_var_ - n_].name;
    return base_result(SolveStatus::unbounded, "objective unbounded along " + name);
  }

  LpSolution extract() {
    recompute_duals();
    LpSolution sol = base_result(SolveStatus::optimal, "");
    sol.x.resize(n_);
    sol.y.resize(m_);
    sol.reduced_cost.resize(n_);
    for (int j = 0; j < n_; ++j) {
      double xj = x_[j] * cscale_[j];
      // snap to the original bounds; basic values keep their computed value
      const auto& v = lp_.vars[j];
      if (std::isfinite(v.lower)) xj = std::max(xj, v.lower);
      if (std::isfinite(v.upper)) xj = std::min(xj, v.upper);
      sol.x[j] = xj;
    }
    for (int i = 0; i < m_; ++i) sol.y[i] = y_row_[i] * rscale_[i];
    double obj = lp_.objective_offset;
    for (int j = 0; j < n_; ++j) obj += lp_.vars[j].cost * sol.x[j];
    sol.objective = obj;
    double dobj = lp_.objective_offset;
    for (int i = 0; i < m_; ++i) dobj += sol.y[i] * lp_.rows[i].rhs;
    for (int j = 0; j < n_; ++j) {
      const double dj = d_[j] / cscale_[j];
      sol.reduced_cost[j] = dj;
      if (stat_[j] == kBasic || stat_[j] == kFree) continue;
      const double bound = stat_[j] == kUpper ? lp_.vars[j].upper : lp_.vars[j].lower;
      if (std::isfinite(bound)) dobj += dj * bound;
    }
    sol.dual_objective = dobj;
    return sol;
  }

  // ---- data ----------------------------------------------------------------

  const LinearProgram& lp_;
  SolveOptions opts_;
  int m_ = 0, n_ = 0, N_ = 0;
  double tol_ = 1e-7;
  std::vector<double> dtol_;

  Csc A_;
  std::vector<int> rp_, ri_;       // CSR mirror (structural entries)
  std::vector<double> rv_;
  std::vector<double> slack_coef_;
  std::vector<double> rscale_, cscale_, lb_, ub_, cost_, b_, colmax_;

  std::vector<int> basis_;
  std::vector<signed char> stat_;
  std::vector<double> x_, d_;

  BasisFactor lu_;
  std::vector<double> etas_pivot_, etas_val_;
  std::vector<int> etas_slot_, etas_idx_, etas_ptr_{0};

  std::vector<double> work_row_, w_slot_, rho_slot_, rho_row_, scratch_pos_, alpha_, y_row_, g_slot_, btran_tmp_;
  std::vector<int> w_support_, alpha_touched_;

  int iterations_ = 0, refactor_count_ = 0, degen_streak_ = 0, stall_guard_ = 0;
  int unbounded_var_ = -1;
  bool bland_ = false;
};

}  // namespace detail

inline LpSolution solve_lp(const LinearProgram& lp, const SolveOptions& opts = {}) {
  if (lp.num_vars() == 0) throw std::invalid_argument("solve_lp: no variables");
  detail::Simplex solver(lp, opts);
  LpSolution sol = solver.run();
  if (sol.status == SolveStatus::optimal && opts.verify) {
    const double pr = primal_residual(lp, sol);
    const double dr = dual_residual(lp, sol);
    const double cr = complementarity_residual(lp, sol);
    const double gap = std::fabs(sol.objective - sol.dual_objective) / (1.0 + std::fabs(sol.objective));
    if (pr > 1e-6 || dr > 1e-6 || cr > 1e-6 || gap > 1e-6) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "verification failed: primal %.2e dual %.2e compl %.2e gap %.2e", pr, dr, cr, gap);
      sol.status = SolveStatus::numerical_breakdown;
      sol.message = buf;
    }
  }
  return sol;
}

}  // namespace prosumeq::lp
