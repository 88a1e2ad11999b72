#pragma once

// Sparse LU with partial pivoting: left-looking Gilbert-Peierls elimination
// over a fill-reducing symmetric pre-ordering (recursive level-set
// dissection of the symmetrized pattern). Factorization and solves are
// deterministic for a fixed input.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "tev/dense.hpp"  // LinalgError
#include "tev/sparse.hpp"

namespace tev {

class SingularMatrixError : public LinalgError {
 public:
  SingularMatrixError(int pivot_index, double pivot_value)
      : LinalgError("sparse_lu: numerically singular at pivot " + std::to_string(pivot_index) +
                    " (|pivot| = " + std::to_string(pivot_value) + ")"),
        pivot_index(pivot_index) {}
  int pivot_index = 0;
};

namespace detail {

// Symmetrized adjacency (no self loops) of a square sparse pattern.
template <class T>
void build_adjacency(const SparseMatrix<T>& m, std::vector<int>& ptr, std::vector<int>& adj) {
  const int n = m.rows();
  std::vector<std::vector<int>> lists(n);
  for (int r = 0; r < n; ++r) {
    for (int k = m.row_begin(r); k < m.row_end(r); ++k) {
      const int c = m.col(k);
      if (c == r) continue;
      lists[r].push_back(c);
      lists[c].push_back(r);
    }
  }
  ptr.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    auto& l = lists[i];
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    ptr[i + 1] = ptr[i] + static_cast<int>(l.size());
  }
  adj.resize(ptr[n]);
  for (int i = 0; i < n; ++i) std::copy(lists[i].begin(), lists[i].end(), adj.begin() + ptr[i]);
}

// Recursive level-set dissection: order each half before its separator.
// Membership and BFS visitation use epoch stamps so nested subproblems do not
// disturb one another.
class DissectionOrder {
 public:
  DissectionOrder(const std::vector<int>& ptr, const std::vector<int>& adj, int n)
      : ptr_(ptr), adj_(adj), set_stamp_(n, 0), visit_stamp_(n, 0) {
    order_.reserve(n);
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    order_subset(std::move(all));
  }

  std::vector<int> take() { return std::move(order_); }

 private:
  static constexpr int kSmall = 32;

  void order_subset(std::vector<int> nodes) {
    if (nodes.empty()) return;
    if (static_cast<int>(nodes.size()) <= kSmall) {
      std::sort(nodes.begin(), nodes.end());
      for (int v : nodes) order_.push_back(v);
      return;
    }
    const int my = ++set_epoch_;
    for (int v : nodes) set_stamp_[v] = my;
    std::sort(nodes.begin(), nodes.end());
    // Collect all connected components first; recursion below re-stamps
    // nodes, so peeling and ordering must not interleave.
    const int vst = ++visit_epoch_;
    std::vector<std::vector<int>> comps;
    std::vector<int> queue;
    for (int seed : nodes) {
      if (visit_stamp_[seed] == vst) continue;
      queue.clear();
      queue.push_back(seed);
      visit_stamp_[seed] = vst;
      for (std::size_t qh = 0; qh < queue.size(); ++qh) {
        const int v = queue[qh];
        for (int k = ptr_[v]; k < ptr_[v + 1]; ++k) {
          const int w = adj_[k];
          if (set_stamp_[w] == my && visit_stamp_[w] != vst) {
            visit_stamp_[w] = vst;
            queue.push_back(w);
          }
        }
      }
      comps.push_back(queue);
    }
    for (auto& comp : comps) order_component(std::move(comp), my);
  }

  void order_component(std::vector<int> comp, int my) {
    if (static_cast<int>(comp.size()) <= kSmall) {
      std::sort(comp.begin(), comp.end());
      for (int v : comp) order_.push_back(v);
      return;
    }
    std::sort(comp.begin(), comp.end());
    int root = comp[0];
    std::vector<std::vector<int>> levels;
    for (int sweep = 0; sweep < 2; ++sweep) {
      bfs_levels(root, my, levels);
      int best = levels.back()[0];
      for (int v : levels.back()) best = std::min(best, v);
      if (sweep == 0) root = best;
    }
    const int nlev = static_cast<int>(levels.size());
    if (nlev < 3) {
      std::vector<int> s;
      for (const auto& lev : levels) s.insert(s.end(), lev.begin(), lev.end());
      std::sort(s.begin(), s.end());
      for (int v : s) order_.push_back(v);
      return;
    }
    const int mid = nlev / 2;
    std::vector<int> rest;
    for (int l = 0; l < nlev; ++l) {
      if (l == mid) continue;
      rest.insert(rest.end(), levels[l].begin(), levels[l].end());
    }
    std::vector<int> sep = std::move(levels[mid]);
    // Halves separate once the middle level is removed; the subset pass
    // splits them back into components.
    order_subset(std::move(rest));
    std::sort(sep.begin(), sep.end());
    for (int v : sep) order_.push_back(v);
  }

  void bfs_levels(int root, int my, std::vector<std::vector<int>>& levels) {
    const int vst = ++visit_epoch_;
    levels.clear();
    std::vector<int> frontier{root};
    visit_stamp_[root] = vst;
    while (!frontier.empty()) {
      std::vector<int> next;
      for (int v : frontier) {
        for (int k = ptr_[v]; k < ptr_[v + 1]; ++k) {
          const int w = adj_[k];
          if (set_stamp_[w] == my && visit_stamp_[w] != vst) {
            visit_stamp_[w] = vst;
            next.push_back(w);
          }
        }
      }
      levels.push_back(std::move(frontier));
      frontier = std::move(next);
    }
  }

  const std::vector<int>& ptr_;
  const std::vector<int>& adj_;
  std::vector<int> set_stamp_;
  std::vector<int> visit_stamp_;
  std::vector<int> order_;
  int set_epoch_ = 0;
  int visit_epoch_ = 0;
};

}  // namespace detail

/// Fill-reducing symmetric ordering of a square sparse matrix.
template <class T>
std::vector<int> fill_reducing_order(const SparseMatrix<T>& m) {
  std::vector<int> ptr, adj;
  detail::build_adjacency(m, ptr, adj);
  detail::DissectionOrder d(ptr, adj, m.rows());
  return d.take();
}

/// LU factors of a square sparse matrix with partial pivoting. The matrix is
/// equilibrated internally (Ruiz row/column scaling): finite element blocks
/// can span many orders of magnitude, and unscaled pivoting loses the small
/// components to roundoff.
template <class T>
class SparseLu {
 public:
  explicit SparseLu(const SparseMatrix<T>& a, double pivot_rel_tol = 1e-14) {
    if (a.rows() != a.cols()) throw LinalgError("sparse_lu: matrix must be square");
    n_ = a.rows();
    ord_ = fill_reducing_order(a);

    // Ruiz equilibration: D_r A D_c with rows and columns brought near unit
    // infinity norm over a few sqrt-scaling sweeps.
    rscale_.assign(n_, 1.0);
    cscale_.assign(n_, 1.0);
    for (int sweep = 0; sweep < 3; ++sweep) {
      std::vector<double> rmax(n_, 0.0), cmax(n_, 0.0);
      for (int r = 0; r < n_; ++r) {
        for (int k = a.row_begin(r); k < a.row_end(r); ++k) {
          const double v = std::abs(a.value(k)) * rscale_[r] * cscale_[a.col(k)];
          rmax[r] = std::max(rmax[r], v);
          cmax[a.col(k)] = std::max(cmax[a.col(k)], v);
        }
      }
      for (int i = 0; i < n_; ++i) {
        if (rmax[i] > 0.0) rscale_[i] /= std::sqrt(rmax[i]);
        if (cmax[i] > 0.0) cscale_[i] /= std::sqrt(cmax[i]);
      }
    }

    // CSC view of the scaled symmetric-permuted matrix A'(r,c) =
    // (D_r A D_c)(ord[r], ord[c]).
    std::vector<int> inv(n_);
    for (int k = 0; k < n_; ++k) inv[ord_[k]] = k;
    std::vector<Triplet<T>> trips;
    trips.reserve(a.nnz());
    for (int r = 0; r < n_; ++r) {
      for (int k = a.row_begin(r); k < a.row_end(r); ++k) {
        // store transposed: triplet (col', row') so CSR rows give A' columns
        trips.push_back({inv[a.col(k)], inv[r], a.value(k) * (rscale_[r] * cscale_[a.col(k)])});
      }
    }
    const SparseMatrix<T> acsc = SparseMatrix<T>::from_triplets(n_, n_, std::move(trips));

    lp_.assign(n_ + 1, 0);
    up_.assign(n_ + 1, 0);
    udiag_.assign(n_, T{});
    pinv_.assign(n_, -1);
    std::vector<int> prow(n_, -1);  // pivot position -> permuted row id

    std::vector<T> x(n_, T{});
    std::vector<char> mark(n_, 0);
    std::vector<int> pattern, stack, kstack;
    pattern.reserve(64);

    for (int col = 0; col < n_; ++col) {
      // Symbolic: topological reach of the column pattern through L.
      pattern.clear();
      for (int k = acsc.row_begin(col); k < acsc.row_end(col); ++k) {
        const int r = acsc.col(k);
        if (!mark[r]) dfs_reach(r, mark, pattern, stack, kstack);
        x[r] = acsc.value(k);
      }
      // Numeric: apply updates in topological order (pattern is reverse
      // postorder: dependencies first when traversed from the back).
      for (auto it = pattern.rbegin(); it != pattern.rend(); ++it) {
        const int r = *it;
        const int pc = pinv_[r];
        if (pc < 0) continue;
        const T xs = x[r];
        if (xs == T{}) continue;
        for (int k = lp_[pc]; k < lp_[pc + 1]; ++k) x[li_[k]] -= lx_[k] * xs;
      }
      // Pivot: largest magnitude among non-pivotal rows, smallest id on ties.
      // Singularity is judged against the column's own magnitude; the blocks
      // of one matrix can live on wildly different scales.
      int piv = -1;
      double best = -1.0;
      double colmax = 0.0;
      for (int r : pattern) {
        const double m = std::abs(x[r]);
        colmax = std::max(colmax, m);
        if (pinv_[r] >= 0) continue;
        if (m > best || (m == best && piv >= 0 && r < piv)) {
          best = m;
          piv = r;
        }
      }
      if (piv < 0 || !(best > pivot_rel_tol * colmax)) {
        throw SingularMatrixError(col, best < 0 ? 0.0 : best);
      }
      const T pval = x[piv];
      pinv_[piv] = col;
      prow[col] = piv;
      udiag_[col] = pval;
      // Store U (pivotal rows) and L (non-pivotal rows, scaled).
      for (int r : pattern) {
        const T v = x[r];
        x[r] = T{};
        mark[r] = 0;
        if (r == piv) continue;
        if (pinv_[r] >= 0 && pinv_[r] < col) {
          ui_.push_back(pinv_[r]);
          ux_.push_back(v);
        } else if (pinv_[r] < 0) {
          if (v != T{}) {
            li_.push_back(r);
            lx_.push_back(v / pval);
          }
        }
      }
      lp_[col + 1] = static_cast<int>(li_.size());
      up_[col + 1] = static_cast<int>(ui_.size());
    }
    // Renumber L rows into pivot-position space.
    for (auto& r : li_) r = pinv_[r];
    // rowmap: pivot position -> original row id.
    rowmap_.resize(n_);
    for (int pos = 0; pos < n_; ++pos) rowmap_[pos] = ord_[prow[pos]];
  }

  int size() const { return n_; }
  std::size_t nnz() const { return lx_.size() + ux_.size() + n_; }

  /// Solve A x = b.
  std::vector<T> solve(const std::vector<T>& b) const {
    std::vector<T> w(n_);
    for (int pos = 0; pos < n_; ++pos) w[pos] = b[rowmap_[pos]] * rscale_[rowmap_[pos]];
    forward_(w);
    backward_(w);
    std::vector<T> out(n_);
    for (int c = 0; c < n_; ++c) out[ord_[c]] = w[c] * cscale_[ord_[c]];
    return out;
  }

  /// Solve A^T x = b (plain transpose, no conjugation).
  std::vector<T> solve_transposed(const std::vector<T>& b) const {
    std::vector<T> w(n_);
    for (int c = 0; c < n_; ++c) w[c] = b[ord_[c]] * cscale_[ord_[c]];
    // U^T z = w (forward, by columns of U).
    for (int k = 0; k < n_; ++k) {
      T s = w[k];
      for (int j = up_[k]; j < up_[k + 1]; ++j) s -= ux_[j] * w[ui_[j]];
      w[k] = s / udiag_[k];
    }
    // L^T y = z (backward, unit diagonal).
    for (int k = n_ - 1; k >= 0; --k) {
      T s = w[k];
      for (int j = lp_[k]; j < lp_[k + 1]; ++j) s -= lx_[j] * w[li_[j]];
      w[k] = s;
    }
    std::vector<T> out(n_);
    for (int pos = 0; pos < n_; ++pos) out[rowmap_[pos]] = w[pos] * rscale_[rowmap_[pos]];
    return out;
  }

 private:
  void dfs_reach(int start, std::vector<char>& mark, std::vector<int>& pattern,
                 std::vector<int>& stack, std::vector<int>& kstack) const {
    stack.clear();
    kstack.clear();
    stack.push_back(start);
    kstack.push_back(-1);
    mark[start] = 1;
    while (!stack.empty()) {
      const int r = stack.back();
      const int pc = pinv_[r];
      int k = kstack.back();
      if (k < 0) k = (pc >= 0) ? lp_[pc] : -1;
      bool descended = false;
      if (pc >= 0) {
        while (k < lp_[pc + 1]) {
          const int child_pos = li_[k];  // position space after renumber...
          ++k;
          // During factorization li_ still holds permuted-row ids.
          const int child = child_pos;
          if (!mark[child]) {
            kstack.back() = k;
            stack.push_back(child);
            kstack.push_back(-1);
            mark[child] = 1;
            descended = true;
            break;
          }
        }
      }
      if (!descended) {
        pattern.push_back(r);
        stack.pop_back();
        kstack.pop_back();
      }
    }
  }

  void forward_(std::vector<T>& w) const {  // L w, unit diagonal, position space
    for (int k = 0; k < n_; ++k) {
      const T xs = w[k];
      if (xs == T{}) continue;
      for (int j = lp_[k]; j < lp_[k + 1]; ++j) w[li_[j]] -= lx_[j] * xs;
    }
  }
  void backward_(std::vector<T>& w) const {  // U w
    for (int k = n_ - 1; k >= 0; --k) {
      const T xs = w[k] / udiag_[k];
      w[k] = xs;
      if (xs == T{}) continue;
      for (int j = up_[k]; j < up_[k + 1]; ++j) w[ui_[j]] -= ux_[j] * xs;
    }
  }

  int n_ = 0;
  std::vector<int> ord_;     // fill ordering: position -> original index
  std::vector<int> pinv_;    // permuted row id -> pivot position
  std::vector<int> rowmap_;  // pivot position -> original row id
  std::vector<double> rscale_, cscale_;  // equilibration factors
  std::vector<int> lp_, li_;
  std::vector<T> lx_;
  std::vector<int> up_, ui_;
  std::vector<T> ux_;
  std::vector<T> udiag_;
};

/// Complex solves against a real factorization: real and imaginary parts are
/// solved independently.
inline std::vector<cplx> solve_complex(const SparseLu<double>& lu, const std::vector<cplx>& b) {
  const int n = lu.size();
  std::vector<double> re(n), im(n);
  for (int i = 0; i < n; ++i) {
    re[i] = b[i].real();
    im[i] = b[i].imag();
  }
  const auto xr = lu.solve(re);
  const auto xi = lu.solve(im);
  std::vector<cplx> x(n);
  for (int i = 0; i < n; ++i) x[i] = cplx(xr[i], xi[i]);
  return x;
}

inline std::vector<cplx> solve_transposed_complex(const SparseLu<double>& lu,
                                                  const std::vector<cplx>& b) {
  const int n = lu.size();
  std::vector<double> re(n), im(n);
  for (int i = 0; i < n; ++i) {
    re[i] = b[i].real();
    im[i] = b[i].imag();
  }
  const auto xr = lu.solve_transposed(re);
  const auto xi = lu.solve_transposed(im);
  std::vector<cplx> x(n);
  for (int i = 0; i < n; ++i) x[i] = cplx(xr[i], xi[i]);
  return x;
}

}  // namespace tev
