#pragma once

// Shift-invert Arnoldi for the generalized pencil A x = lambda B x with real
// sparse A, B. The Krylov process runs on (A - sigma B)^-1 B with thick
// (Krylov-Schur) restarts; left eigenpairs come from an independent process
// on the transposed operator that reuses the same factorization. Returned
// sets are closed under conjugation (the pencil is real) and A-normalized.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "tev/dense.hpp"
#include "tev/pencil.hpp"
#include "tev/sparse.hpp"
#include "tev/sparse_lu.hpp"

namespace tev {

struct ArnoldiOptions {
  int krylov_dim = 0;  // 0: max(2q + 8, 30)
  double tol = 1e-10;
  int max_restarts = 50;
};

class ArnoldiError : public LinalgError {
 public:
  ArnoldiError(const std::string& what, std::vector<double> residuals)
      : LinalgError(what), best_residuals(std::move(residuals)) {}
  std::vector<double> best_residuals;
};

namespace detail {

// (A - sigma B)^-1 B and its transpose, with a real factorization whenever
// sigma is real.
class ShiftInvertOp {
 public:
  ShiftInvertOp(const SparseMatrix<double>& a, const SparseMatrix<double>& b, cplx sigma)
      : b_real_(&b) {
    if (sigma.imag() == 0.0) {
      lu_real_.emplace(a.add_scaled(b, -sigma.real()));
    } else {
      b_cplx_ = to_complex(b);
      lu_cplx_.emplace(to_complex(a).add_scaled(b_cplx_, -sigma));
    }
  }

  int dim() const { return b_real_->rows(); }

  std::vector<cplx> apply(const std::vector<cplx>& x, bool transposed) const {
    if (lu_real_) {
      const auto t = transposed ? b_real_->mul_transposed(x) : b_real_->mul(x);
      return transposed ? solve_transposed_complex(*lu_real_, t) : solve_complex(*lu_real_, t);
    }
    const auto t = transposed ? b_cplx_.mul_transposed(x) : b_cplx_.mul(x);
    return transposed ? lu_cplx_->solve_transposed(t) : lu_cplx_->solve(t);
  }

 private:
  const SparseMatrix<double>* b_real_;
  SparseMatrix<cplx> b_cplx_;
  std::optional<SparseLu<double>> lu_real_;
  std::optional<SparseLu<cplx>> lu_cplx_;
};

struct RitzPair {
  cplx nu;                  // eigenvalue of the shift-inverted operator
  std::vector<cplx> vec;    // unit-norm Ritz vector
  double op_residual = 0.0; // ||Op x - nu x|| estimate
  double true_residual = 0.0;
};

// Krylov-Schur iteration for the dominant eigenvalues of `op`. Convergence is
// judged by `true_residual(nu, vec)` (the pencil residual behind the
// operator), evaluated once the cheap operator residual looks promising.
template <class Op, class TrueResidual>
std::vector<RitzPair> krylov_schur_dominant(const Op& op, const TrueResidual& true_residual,
                                            int n, int nwanted, int m, double tol,
                                            int max_restarts, unsigned seed) {
  m = std::min(m, n);
  nwanted = std::min(nwanted, m);
  // Thick restart size: half the leftover space on top of the wanted set.
  // Keeping too few (e.g. only 2q) lets spurious large Ritz values starve
  // slowly-converging directions out of the basis.
  const int keep_target =
      std::min(std::max(2 * nwanted, nwanted + (m - nwanted) / 2), std::max(m - 2, nwanted));

  std::vector<std::vector<cplx>> v(static_cast<std::size_t>(m) + 1);
  Matrix<cplx> h(m + 1, m);
  int kcur = 0;   // compressed leading block size
  int mend = m;   // effective expansion end (shrinks on breakdown)

  auto normalize = [](std::vector<cplx>& w) {
    double s = 0.0;
    for (const cplx& x : w) s += std::norm(x);
    const double nrm = std::sqrt(s);
    if (nrm > 0.0)
      for (auto& x : w) x /= nrm;
    return nrm;
  };

  v[0].assign(n, cplx(0.0, 0.0));
  seeded_start(v[0], seed);
  normalize(v[0]);

  std::vector<RitzPair> best;
  double best_worst = std::numeric_limits<double>::infinity();
  int stagnant = 0;

  for (int restart = 0; restart <= max_restarts; ++restart) {
    // Arnoldi expansion from kcur to mend with DGKS reorthogonalization:
    // repeat projection passes while the norm keeps collapsing, so the basis
    // stays orthonormal to rounding even when the new direction is tiny.
    const double eps_mach = std::numeric_limits<double>::epsilon();
    auto orthogonalize = [&](std::vector<cplx>& w, int j, cplx* hcol) -> double {
      double prev = vec_norm(w);
      const double norm0 = prev;
      if (norm0 == 0.0) return 0.0;
      for (int pass = 0; pass < 5; ++pass) {
        for (int i = 0; i <= j; ++i) {
          cplx dot(0.0, 0.0);
          const auto& vi = v[i];
          for (int r = 0; r < n; ++r) dot += std::conj(vi[r]) * w[r];
          if (hcol) hcol[i] += dot;
          for (int r = 0; r < n; ++r) w[r] -= dot * vi[r];
        }
        const double now = vec_norm(w);
        if (now <= 100.0 * eps_mach * norm0) return 0.0;  // nothing new left
        if (now > 0.5 * prev) return now;                 // orthogonal enough
        prev = now;
      }
      return prev;
    };

    for (int j = kcur; j < mend; ++j) {
      std::vector<cplx> w = op(v[j]);
      std::vector<cplx> hcol(static_cast<std::size_t>(j) + 1, cplx(0.0, 0.0));
      double beta = orthogonalize(w, j, hcol.data());
      for (int i = 0; i <= j; ++i) h(i, j) = hcol[i];
      if (beta == 0.0) {
        // Invariant subspace: continue with a fresh orthonormal direction.
        h(j + 1, j) = cplx(0.0, 0.0);
        std::vector<cplx> fresh(n);
        seeded_start(fresh, seed + 777u * (j + 1));
        const double fn = orthogonalize(fresh, j, nullptr);
        if (fn == 0.0) {
          mend = j + 1;  // space exhausted
          break;
        }
        for (auto& x : fresh) x /= fn;
        v[j + 1] = std::move(fresh);
      } else {
        h(j + 1, j) = cplx(beta, 0.0);
        for (auto& x : w) x /= beta;
        v[j + 1] = std::move(w);
      }
    }

    // Analyze the active square block H(0..mend-1, 0..mend-1).
    Matrix<cplx> hm(mend, mend);
    for (int i = 0; i < mend; ++i)
      for (int j = 0; j < mend; ++j) hm(i, j) = h(i, j);
    Matrix<cplx> t, s;
    complex_schur(hm, t, s);

    // Residual row: Op V = V Hm + v_mend * r^T with r^T = H(mend, :).
    std::vector<cplx> rrow(mend);
    for (int j = 0; j < mend; ++j) rrow[j] = h(mend, j);

    // Rank Schur eigenvalues by |nu| (descending), drop near-zero nu.
    std::vector<int> rank(mend);
    for (int i = 0; i < mend; ++i) rank[i] = i;
    std::sort(rank.begin(), rank.end(), [&](int a, int b) {
      const double ma = std::abs(t(a, a)), mb = std::abs(t(b, b));
      if (ma != mb) return ma > mb;
      return a < b;
    });
    double numax = 1e-300;
    for (int i = 0; i < mend; ++i) numax = std::max(numax, std::abs(t(i, i)));

    // Ritz pairs for the wanted set. Each proximity cluster of Ritz values is
    // moved to the front of a Schur copy so its orthonormal Schur columns
    // span the invariant subspace; triangular eigenvectors would collapse
    // onto one direction for multiple eigenvalues.
    std::vector<RitzPair> pairs;
    bool converged = true;
    std::vector<char> taken(mend, 0);
    std::vector<std::vector<int>> clusters;
    for (int w = 0; w < nwanted && w < mend; ++w) {
      const int idx = rank[w];
      if (taken[idx]) continue;
      std::vector<int> cluster{idx};
      taken[idx] = 1;
      const cplx nu = t(idx, idx);
      const double rad = 1e-8 * (1.0 + std::abs(nu));
      for (int j = 0; j < mend; ++j) {
        if (!taken[j] && std::abs(t(j, j) - nu) <= rad) {
          cluster.push_back(j);
          taken[j] = 1;
        }
      }
      std::sort(cluster.begin(), cluster.end());
      clusters.push_back(std::move(cluster));
    }
    for (const auto& cluster : clusters) {
      Matrix<cplx> tc = t, sc = s;
      const int k = static_cast<int>(cluster.size());
      for (int pos = 0; pos < k; ++pos) schur_move(tc, sc, cluster[pos], pos);
      for (int j = 0; j < k; ++j) {
        const cplx nu = tc(j, j);
        double coupling2 = 0.0;  // within-cluster residual of the Schur column
        for (int i = 0; i < j; ++i) coupling2 += std::norm(tc(i, j));
        cplx rz(0.0, 0.0);
        for (int i = 0; i < mend; ++i) rz += rrow[i] * sc(i, j);
        const double res = std::sqrt(std::norm(rz) + coupling2);
        RitzPair p;
        p.nu = nu;
        p.op_residual = res;
        p.vec.assign(n, cplx(0.0, 0.0));
        for (int i = 0; i < mend; ++i) {
          const cplx c = sc(i, j);
          if (c == cplx(0.0, 0.0)) continue;
          const auto& vi = v[i];
          for (int r = 0; r < n; ++r) p.vec[r] += c * vi[r];
        }
        normalize(p.vec);
        // Judge convergence on the pencil residual itself; the operator
        // residual only gates the (mildly more expensive) evaluation.
        if (std::abs(nu) > 1e-12) {
          if (res > tol * std::max(std::abs(nu), 1e-6 * numax)) {
            p.true_residual = 1.0;
            converged = false;
          } else {
            p.true_residual = true_residual(nu, p.vec);
            if (p.true_residual > tol) converged = false;
          }
        }
        pairs.push_back(std::move(p));
        if (static_cast<int>(pairs.size()) >= nwanted) break;
      }
      if (static_cast<int>(pairs.size()) >= nwanted) break;
    }

    double worst = 0.0;
    for (const auto& p : pairs) worst = std::max(worst, p.true_residual);
    stagnant = (worst < 0.7 * best_worst) ? 0 : stagnant + 1;
    if (worst < best_worst) {
      best_worst = worst;
      best = pairs;
    }
    if (converged || restart == max_restarts || mend < m) break;
    // Residuals saturate at the rounding floor of the transformed problem;
    // accept once they stall inside the tolerance gate.
    if (stagnant >= 2 && best_worst <= 50.0 * tol) break;

    // Thick restart: reorder wanted Ritz values to the leading block.
    const int keep = std::min(keep_target, mend - 1);
    for (int p = 0; p < keep; ++p) {
      int pick = p;
      double bestmag = -1.0;
      for (int j = p; j < mend; ++j) {
        const double mg = std::abs(t(j, j));
        if (mg > bestmag) {
          bestmag = mg;
          pick = j;
        }
      }
      if (pick != p) schur_move(t, s, pick, p);
    }
    // New basis and spike.
    std::vector<std::vector<cplx>> vnew(static_cast<std::size_t>(keep));
    for (int c = 0; c < keep; ++c) {
      vnew[c].assign(n, cplx(0.0, 0.0));
      for (int i = 0; i < mend; ++i) {
        const cplx w = s(i, c);
        if (w == cplx(0.0, 0.0)) continue;
        const auto& vi = v[i];
        for (int r = 0; r < n; ++r) vnew[c][r] += w * vi[r];
      }
    }
    std::vector<cplx> spike(keep, cplx(0.0, 0.0));
    for (int c = 0; c < keep; ++c) {
      cplx acc(0.0, 0.0);
      for (int i = 0; i < mend; ++i) acc += rrow[i] * s(i, c);
      spike[c] = acc;
    }
    h = Matrix<cplx>(m + 1, m);
    for (int i = 0; i < keep; ++i)
      for (int j = 0; j < keep; ++j) h(i, j) = t(i, j);
    for (int j = 0; j < keep; ++j) h(keep, j) = spike[j];
    std::vector<cplx> vres = std::move(v[mend]);
    for (int c = 0; c < keep; ++c) v[c] = std::move(vnew[c]);
    v[keep] = std::move(vres);
    kcur = keep;
    mend = m;
  }
  return best;
}

}  // namespace detail

/// The q eigenvalues of A x = lambda B x nearest `sigma`, with A-normalized
/// right and left eigenvectors. For this real pencil the returned set is
/// closed under conjugation, so it may hold q + 1 values when a conjugate
/// pair straddles the count.
inline EigenPairSet arnoldi_shift_invert(const SparseMatrix<double>& a,
                                         const SparseMatrix<double>& b, cplx sigma, int q,
                                         const ArnoldiOptions& opt = {}) {
  if (q < 1) throw std::invalid_argument("arnoldi_shift_invert: q must be >= 1");
  const int n = a.rows();
  int m = opt.krylov_dim > 0 ? opt.krylov_dim : std::max(2 * q + 8, 30);
  if (m < 2 * q + 8) {
    throw std::invalid_argument("arnoldi_shift_invert: krylov_dim must be at least 2q + 8");
  }

  detail::ShiftInvertOp op(a, b, sigma);  // SingularMatrixError: sigma hits the spectrum
  const auto at = a.transposed();
  const auto bt = b.transposed();

  auto primal = [&](const std::vector<cplx>& x) { return op.apply(x, false); };
  auto dual = [&](const std::vector<cplx>& x) { return op.apply(x, true); };
  auto primal_res = [&](const cplx& nu, const std::vector<cplx>& x) {
    return detail::pencil_residual(a, b, sigma + 1.0 / nu, x);
  };
  auto dual_res = [&](const cplx& nu, const std::vector<cplx>& y) {
    return detail::pencil_residual(at, bt, sigma + 1.0 / nu, y);
  };

  const auto right_raw =
      detail::krylov_schur_dominant(primal, primal_res, n, q, m, opt.tol, opt.max_restarts, 12345u);
  const auto left_raw =
      detail::krylov_schur_dominant(dual, dual_res, n, q, m, opt.tol, opt.max_restarts, 54321u);

  struct Cand {
    cplx lambda;
    std::vector<cplx> vec;
  };
  auto to_cands = [&](const std::vector<detail::RitzPair>& raw) {
    std::vector<Cand> cands;
    for (const auto& p : raw) {
      if (std::abs(p.nu) < 1e-12) continue;  // infinite eigenvalue of the pencil
      cands.push_back({sigma + 1.0 / p.nu, p.vec});
    }
    std::sort(cands.begin(), cands.end(), [&](const Cand& x, const Cand& y) {
      const double dx = std::abs(x.lambda - sigma), dy = std::abs(y.lambda - sigma);
      if (dx != dy) return dx < dy;
      const double mx = std::abs(x.lambda), my = std::abs(y.lambda);
      if (mx != my) return mx < my;
      return x.lambda.imag() < y.lambda.imag();
    });
    return cands;
  };
  std::vector<Cand> rights = to_cands(right_raw);
  std::vector<Cand> lefts = to_cands(left_raw);
  if (rights.empty()) {
    throw ArnoldiError("arnoldi_shift_invert: no finite eigenvalues found near the shift", {});
  }

  // Select the q nearest, closing complex values under conjugation (the
  // conjugate eigenpair of a real pencil is exact by symmetry). A candidate
  // that merely re-finds a synthesized partner is skipped; coincident real
  // values are genuine multiplicities and all kept.
  auto is_real_value = [](const cplx& lam) { return std::abs(lam.imag()) <= 1e-9 * (1.0 + std::abs(lam)); };
  std::vector<Cand> sel;
  std::vector<cplx> synthesized;
  for (const auto& c : rights) {
    if (static_cast<int>(sel.size()) >= q) break;
    bool dup = false;
    for (std::size_t s = 0; s < synthesized.size(); ++s) {
      if (std::abs(c.lambda - synthesized[s]) <= 1e-8 * (1.0 + std::abs(c.lambda))) {
        synthesized.erase(synthesized.begin() + s);  // consume one copy
        dup = true;
        break;
      }
    }
    if (dup) continue;
    Cand cc = c;
    if (is_real_value(cc.lambda)) {
      cc.lambda = cplx(cc.lambda.real(), 0.0);
      sel.push_back(std::move(cc));
    } else {
      Cand conj_cc;
      conj_cc.lambda = std::conj(cc.lambda);
      conj_cc.vec.resize(cc.vec.size());
      for (std::size_t i = 0; i < cc.vec.size(); ++i) conj_cc.vec[i] = std::conj(cc.vec[i]);
      synthesized.push_back(conj_cc.lambda);
      sel.push_back(std::move(cc));
      sel.push_back(std::move(conj_cc));
    }
  }

  // Pair each selected eigenvalue with a left vector: the dual process finds
  // the same spectrum; y(lambda) = conj(ytilde(mu)) for the match mu ~ lambda,
  // and conjugation fills the synthesized partners.
  EigenPairSet out;
  for (const auto& c : sel) {
    const Cand* direct = nullptr;
    const Cand* conjugate = nullptr;
    double d_direct = std::numeric_limits<double>::infinity();
    double d_conj = std::numeric_limits<double>::infinity();
    for (const auto& l : lefts) {
      const double dd = std::abs(l.lambda - c.lambda);
      if (dd < d_direct) {
        d_direct = dd;
        direct = &l;
      }
      const double dc = std::abs(std::conj(l.lambda) - c.lambda);
      if (dc < d_conj) {
        d_conj = dc;
        conjugate = &l;
      }
    }
    const double rad = 1e-6 * (1.0 + std::abs(c.lambda));
    std::vector<cplx> y;
    if (direct && d_direct <= std::min(d_conj, rad)) {
      y.resize(direct->vec.size());
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::conj(direct->vec[i]);
    } else if (conjugate && d_conj <= rad) {
      y = conjugate->vec;
    } else {
      throw ArnoldiError("arnoldi_shift_invert: dual process found no matching eigenvalue", {});
    }
    out.values.push_back(c.lambda);
    out.right_vectors.push_back(a_normalize(c.vec, a));
    out.left_vectors.push_back(a_normalize(std::move(y), a));
  }

  detail::biorthogonalize_clusters(out, a);

  // True pencil residuals; the eigensolver must meet its tolerance.
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.right_residuals.push_back(
        detail::pencil_residual(a, b, out.values[i], out.right_vectors[i]));
    out.left_residuals.push_back(
        detail::pencil_residual(at, bt, std::conj(out.values[i]), out.left_vectors[i]));
    worst = std::max({worst, out.right_residuals[i], out.left_residuals[i]});
  }
  if (worst > 50.0 * opt.tol) {
    char msg[128];
    std::snprintf(msg, sizeof msg,
                  "arnoldi_shift_invert: residual %.3e above tolerance %.3e after max_restarts",
                  worst, opt.tol);
    throw ArnoldiError(msg, out.right_residuals);
  }
  return out;
}

}  // namespace tev
