#pragma once

// The multilevel correction scheme. Level 1 solves the coarse eigenproblem
// directly (primal and dual); every later level solves 2q linear boundary
// value problems on the next finer mesh and one small eigenproblem on the
// coarse space enriched by those solutions. The enriched space is always
// built over the level-1 coarse space.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "tev/arnoldi.hpp"
#include "tev/assembly.hpp"
#include "tev/bfs.hpp"
#include "tev/geometry.hpp"
#include "tev/pencil.hpp"
#include "tev/refraction.hpp"
#include "tev/sparse.hpp"
#include "tev/sparse_lu.hpp"

namespace tev {

class MultigridError : public std::runtime_error {
 public:
  explicit MultigridError(const std::string& what) : std::runtime_error(what) {}
};

struct QuasiBiorthogonality {
  double min_diag = 1.0;     // min_j |y_j^H A x_j|
  double max_offdiag = 0.0;  // max_{j != l} |y_l^H A x_j|
  bool violated = false;     // diagonal pairing below the uniform bound
};

/// Primal-dual A-pairing diagnostic for Assumption-style checks.
template <class MatT>
QuasiBiorthogonality quasi_biorthogonality(const std::vector<std::vector<cplx>>& right,
                                           const std::vector<std::vector<cplx>>& left,
                                           const MatT& a) {
  QuasiBiorthogonality r;
  const std::size_t q = right.size();
  if (q == 0 || left.size() != q) return r;
  std::vector<std::vector<cplx>> ax(q);
  for (std::size_t j = 0; j < q; ++j) ax[j] = a.mul(right[j]);
  r.min_diag = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < q; ++l) {
    for (std::size_t j = 0; j < q; ++j) {
      cplx dot(0.0, 0.0);
      for (std::size_t i = 0; i < left[l].size(); ++i) dot += std::conj(left[l][i]) * ax[j][i];
      const double m = std::abs(dot);
      if (j == l) {
        r.min_diag = std::min(r.min_diag, m);
      } else {
        r.max_offdiag = std::max(r.max_offdiag, m);
      }
    }
  }
  r.violated = r.min_diag < 1e-3;
  return r;
}

struct LevelState {
  int level = 1;
  double h = 0.0;
  int dim = 0;                          // product-space dimension at this level
  std::vector<cplx> lambdas;            // tracked eigenvalues
  std::vector<std::vector<cplx>> right; // A-normalized, this level's coefficients
  std::vector<std::vector<cplx>> left;
  std::vector<double> residuals;        // ||A x - lambda B x|| / ||A x||
  std::vector<double> left_residuals;
  double galerkin_residual = 0.0;       // max_j ||Q^H (A x - lambda B x)|| / ||A x||
  QuasiBiorthogonality qb;
  double seconds = 0.0;
};

struct MultigridConfig {
  Domain domain = Domain::UnitSquare;
  RefractionField refraction = RefractionField::constant(16.0);
  int coarse_divisions = 8;
  int levels = 1;
  int q = 1;
  cplx sigma{2.0, 0.0};
  int quad_order = 6;
  ArnoldiOptions arnoldi{};
};

struct MultigridResult {
  std::vector<LevelState> levels;
  bool ok = true;
  std::string error;
};

/// Greedy nearest-neighbor matching of new candidate eigenvalues onto the
/// tracked ones; deterministic tie-breaks (smaller |lambda|, then smaller
/// imaginary part) and conjugate-pair consistency. Returns the candidate
/// index chosen for each tracked value.
inline std::vector<int> match_pairs(const std::vector<cplx>& previous,
                                    const std::vector<cplx>& candidates) {
  const int np = static_cast<int>(previous.size());
  const int nc = static_cast<int>(candidates.size());
  if (nc == 0) throw MultigridError("match_pairs: no candidate eigenvalues");
  std::vector<int> match(np, -1);
  std::vector<char> used(nc, 0);
  for (int round = 0; round < np; ++round) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < np; ++i) {
      if (match[i] >= 0) continue;
      for (int j = 0; j < nc; ++j) {
        if (used[j]) continue;
        const double d = std::abs(previous[i] - candidates[j]);
        bool better = d < best;
        if (d == best && bj >= 0) {
          const double mj = std::abs(candidates[j]), mb = std::abs(candidates[bj]);
          if (mj != mb) {
            better = mj < mb;
          } else if (candidates[j].imag() != candidates[bj].imag()) {
            better = candidates[j].imag() < candidates[bj].imag();
          }
        }
        if (better) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) break;
    match[bi] = bj;
    used[bj] = 1;
  }
  for (int i = 0; i < np; ++i) {
    if (match[i] < 0 ||
        std::abs(previous[i] - candidates[match[i]]) > 0.5 * std::abs(previous[i])) {
      throw MultigridError("match_pairs: no candidate within radius of tracked eigenvalue " +
                           std::to_string(i));
    }
  }
  // Conjugate-pair consistency.
  for (int i = 0; i < np; ++i) {
    if (std::abs(previous[i].imag()) <= 1e-9 * (1.0 + std::abs(previous[i]))) continue;
    int partner = -1;
    for (int j = 0; j < np; ++j) {
      if (j != i &&
          std::abs(previous[j] - std::conj(previous[i])) <= 1e-6 * (1.0 + std::abs(previous[i]))) {
        partner = j;
        break;
      }
    }
    if (partner < 0) continue;
    const cplx a = candidates[match[i]];
    const cplx b = candidates[match[partner]];
    if (std::abs(b - std::conj(a)) > 1e-6 * (1.0 + std::abs(a))) {
      throw MultigridError("match_pairs: conjugate pair broke apart across levels");
    }
  }
  return match;
}

namespace detail {

inline std::vector<cplx> prolong_product(const SparseMatrix<double>& p_scalar,
                                         const std::vector<cplx>& x) {
  const int nc = p_scalar.cols();
  const int nf = p_scalar.rows();
  std::vector<cplx> u(x.begin(), x.begin() + nc), w(x.begin() + nc, x.end());
  const auto pu = p_scalar.mul(u);
  const auto pw = p_scalar.mul(w);
  std::vector<cplx> out(2 * nf);
  std::copy(pu.begin(), pu.end(), out.begin());
  std::copy(pw.begin(), pw.end(), out.begin() + nf);
  return out;
}

// Real enrichment columns spanning the (possibly complex) vectors: real and
// imaginary parts, with near-null columns dropped. The eigenvalues of the
// reduced problem depend only on the span.
inline void append_real_columns(const std::vector<cplx>& v, int offset, int block_len,
                                int total_rows, std::vector<std::vector<double>>& cols) {
  double remax = 0.0, immax = 0.0;
  for (int i = 0; i < block_len; ++i) {
    remax = std::max(remax, std::abs(v[offset + i].real()));
    immax = std::max(immax, std::abs(v[offset + i].imag()));
  }
  const double scale = std::max(remax, immax);
  if (scale <= 0.0) return;
  if (remax > 1e-12 * scale) {
    std::vector<double> c(total_rows, 0.0);
    for (int i = 0; i < block_len; ++i) c[offset + i] = v[offset + i].real();
    cols.push_back(std::move(c));
  }
  if (immax > 1e-12 * scale) {
    std::vector<double> c(total_rows, 0.0);
    for (int i = 0; i < block_len; ++i) c[offset + i] = v[offset + i].imag();
    cols.push_back(std::move(c));
  }
}

}  // namespace detail

/// Solve the level-1 eigenproblem directly (Algorithm step: coarse solve).
inline LevelState coarse_solve(const Pencil& pencil, const MultigridConfig& cfg, double h) {
  const auto t0 = std::chrono::steady_clock::now();
  LevelState st;
  st.level = 1;
  st.h = h;
  st.dim = pencil.A.rows();
  EigenPairSet set = arnoldi_shift_invert(pencil.A, pencil.B, cfg.sigma, cfg.q, cfg.arnoldi);
  st.lambdas = set.values;
  st.right = std::move(set.right_vectors);
  st.left = std::move(set.left_vectors);
  st.residuals = std::move(set.right_residuals);
  st.left_residuals = std::move(set.left_residuals);
  st.qb = quasi_biorthogonality(st.right, st.left, pencil.A);
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return st;
}

/// One boundary value problem of the correction step: solve
/// A_fine x = lambda_prev * B_fine * x_prolonged (or the transposed dual
/// variant), reusing the provided factorization of the (real, SPD) A_fine.
inline std::vector<cplx> bvp_solve(const SparseLu<double>& a_fine_lu,
                                   const SparseMatrix<double>& b_fine, cplx lambda_prev,
                                   const std::vector<cplx>& x_prolonged, bool dual) {
  std::vector<cplx> rhs = dual ? b_fine.mul_transposed(x_prolonged) : b_fine.mul(x_prolonged);
  const cplx f = dual ? std::conj(lambda_prev) : lambda_prev;
  for (auto& r : rhs) r *= f;
  return dual ? solve_transposed_complex(a_fine_lu, rhs) : solve_complex(a_fine_lu, rhs);
}

/// One correction step: 2q boundary value problems on the fine level, then
/// the eigenproblem on the level-1 coarse space enriched with the new
/// solutions. `p_cum_scalar` prolongs level-1 scalar coefficients to the fine
/// level; `p_step_scalar` prolongs the previous level's to the fine level.
inline LevelState correction_step(const LevelState& state_m, const Pencil& fine,
                                  const SparseMatrix<double>& p_cum_scalar,
                                  const SparseMatrix<double>& p_step_scalar, double h_fine) {
  const auto t0 = std::chrono::steady_clock::now();
  const int nf = p_cum_scalar.rows();   // fine scalar free dofs
  const int nc = p_cum_scalar.cols();   // level-1 scalar free dofs
  const int dim = 2 * nf;
  const int q = static_cast<int>(state_m.lambdas.size());

  // Step 1: boundary value problems (q primal, q dual).
  const SparseLu<double> a_lu(fine.A);
  std::vector<std::vector<cplx>> primal_hat(q), dual_hat(q), dual_prev(q);
  for (int j = 0; j < q; ++j) {
    const auto xp = detail::prolong_product(p_step_scalar, state_m.right[j]);
    auto yp = detail::prolong_product(p_step_scalar, state_m.left[j]);
    primal_hat[j] = bvp_solve(a_lu, fine.B, state_m.lambdas[j], xp, false);
    dual_hat[j] = bvp_solve(a_lu, fine.B, state_m.lambdas[j], yp, true);
    dual_prev[j] = std::move(yp);
  }

  // Step 2: enriched space. Columns: the prolonged coarse basis in each block
  // plus the u- and w-components of the new solutions in their blocks.
  std::vector<std::vector<double>> ecols;
  ecols.reserve(8 * q);
  for (int j = 0; j < q; ++j) {
    detail::append_real_columns(primal_hat[j], 0, nf, dim, ecols);
    detail::append_real_columns(dual_hat[j], 0, nf, dim, ecols);
  }
  for (int j = 0; j < q; ++j) {
    detail::append_real_columns(primal_hat[j], nf, nf, dim, ecols);
    detail::append_real_columns(dual_hat[j], nf, nf, dim, ecols);
  }
  const int ne = static_cast<int>(ecols.size());
  const int ncols = 2 * nc + ne;

  // Reduced matrices over Q = [diag(P,P) | E].
  const SparseMatrix<double> p2 = product_prolongation(p_cum_scalar);
  const SparseMatrix<double> p2t = p2.transposed();
  const SparseMatrix<double> ap2 = fine.A.matmul(p2);
  const SparseMatrix<double> bp2 = fine.B.matmul(p2);
  const SparseMatrix<double> acc = p2t.matmul(ap2);
  const SparseMatrix<double> bcc = p2t.matmul(bp2);

  Matrix<double> a_r(ncols, ncols), b_r(ncols, ncols);
  for (int r = 0; r < acc.rows(); ++r) {
    for (int k = acc.row_begin(r); k < acc.row_end(r); ++k) a_r(r, acc.col(k)) = acc.value(k);
    for (int k = bcc.row_begin(r); k < bcc.row_end(r); ++k) b_r(r, bcc.col(k)) = bcc.value(k);
  }
  std::vector<std::vector<double>> a_e(ne), b_e(ne);  // A*E, B*E columns
  for (int c = 0; c < ne; ++c) {
    a_e[c] = fine.A.mul(ecols[c]);
    b_e[c] = fine.B.mul(ecols[c]);
  }
  for (int c = 0; c < ne; ++c) {
    const auto pa = p2.mul_transposed(a_e[c]);
    const auto pb = p2.mul_transposed(b_e[c]);
    for (int r = 0; r < 2 * nc; ++r) {
      a_r(r, 2 * nc + c) = pa[r];
      b_r(r, 2 * nc + c) = pb[r];
    }
    // Rows for E^T A P2 / E^T B P2 are filled below via E^T (A P2) products.
  }
  // E^T A Q and E^T B Q rows.
  for (int c = 0; c < ne; ++c) {
    const auto ea = ap2.mul_transposed(ecols[c]);  // (A P2)^T e_c = P2^T A^T e_c
    const auto eb = bp2.mul_transposed(ecols[c]);
    for (int r = 0; r < 2 * nc; ++r) {
      a_r(2 * nc + c, r) = ea[r];
      b_r(2 * nc + c, r) = eb[r];
    }
    for (int d = 0; d < ne; ++d) {
      double sa = 0.0, sb = 0.0;
      for (int i = 0; i < dim; ++i) {
        sa += ecols[c][i] * a_e[d][i];
        sb += ecols[c][i] * b_e[d][i];
      }
      a_r(2 * nc + c, 2 * nc + d) = sa;
      b_r(2 * nc + c, 2 * nc + d) = sb;
    }
  }

  // Equilibrate columns to unit A-norm (a diagonal recombination; Ritz values
  // are unchanged), then rank-filter: pivots of the unit-diagonal Gram
  // measure angular independence rather than scale.
  std::vector<double> scale(ncols, 0.0);
  for (int i = 0; i < ncols; ++i) {
    const double d = a_r(i, i);
    scale[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  for (int i = 0; i < ncols; ++i)
    for (int j = 0; j < ncols; ++j) {
      const double f = scale[i] * scale[j];
      a_r(i, j) *= f;
      b_r(i, j) *= f;
    }
  double min_pivot = 0.0;
  const std::vector<int> kept = pivoted_cholesky_keep(a_r, 1e-10, &min_pivot);
  if (static_cast<int>(kept.size()) < 2 * nc) {
    throw MultigridError("correction_step: enriched basis collapsed below the coarse space");
  }
  const int nk = static_cast<int>(kept.size());
  Matrix<double> a_k(nk, nk), b_k(nk, nk);
  for (int i = 0; i < nk; ++i)
    for (int j = 0; j < nk; ++j) {
      a_k(i, j) = a_r(kept[i], kept[j]);
      b_k(i, j) = b_r(kept[i], kept[j]);
    }

  // Step 2 eigenproblem on the enriched space; eigenvectors are only needed
  // near the tracked values.
  const EigenPairSet red = dense_pencil_eig(to_complex(a_k), to_complex(b_k), &state_m.lambdas);
  if (red.size() == 0) {
    throw MultigridError("correction_step: reduced problem has no eigenvalues near the tracked set");
  }

  // Expand reduced vectors through Q (undoing the column scaling) and
  // renormalize in the fine A-norm.
  auto expand = [&](const std::vector<cplx>& z) {
    std::vector<cplx> zc(2 * nc, cplx(0.0, 0.0));
    std::vector<cplx> out(dim, cplx(0.0, 0.0));
    for (int i = 0; i < nk; ++i) {
      const int col = kept[i];
      const cplx f = z[i] * scale[col];
      if (col < 2 * nc) {
        zc[col] = f;
      } else {
        const auto& e = ecols[col - 2 * nc];
        for (int r = 0; r < dim; ++r) out[r] += f * e[r];
      }
    }
    const auto pc = detail::prolong_product(p_cum_scalar, zc);
    for (int r = 0; r < dim; ++r) out[r] += pc[r];
    return out;
  };

  // Candidate selection. Eigenvalue distance alone can latch onto a stale
  // Ritz value of an untracked neighbor (the enriched space approximates
  // those only at coarse quality), so candidates inside the tracking radius
  // are ranked by their correlation |y_prev^H A x| with the tracked dual
  // vectors; biorthogonality makes that correlation O(H^r0) for everything
  // but the continuation of the tracked eigenpair.
  const int ncand = static_cast<int>(red.size());
  std::vector<std::vector<cplx>> cand_x(ncand), cand_ax(ncand);
  for (int c = 0; c < ncand; ++c) {
    cand_x[c] = expand(red.right_vectors[c]);
    cand_ax[c] = fine.A.mul(cand_x[c]);
  }
  Matrix<double> corr(q, ncand);
  for (int j = 0; j < q; ++j) {
    for (int c = 0; c < ncand; ++c) {
      if (std::abs(state_m.lambdas[j] - red.values[c]) > 0.5 * std::abs(state_m.lambdas[j])) {
        corr(j, c) = -1.0;
        continue;
      }
      cplx dot(0.0, 0.0);
      for (int r = 0; r < dim; ++r) dot += std::conj(dual_prev[j][r]) * cand_ax[c][r];
      corr(j, c) = std::abs(dot);
    }
  }
  std::vector<int> pick(q, -1);
  std::vector<char> used(ncand, 0);
  for (int round = 0; round < q; ++round) {
    int bj = -1, bc = -1;
    double best = -1.0;
    for (int j = 0; j < q; ++j) {
      if (pick[j] >= 0) continue;
      for (int c = 0; c < ncand; ++c) {
        if (used[c] || corr(j, c) < 0.0) continue;
        bool better = corr(j, c) > best;
        if (corr(j, c) == best && bc >= 0) {
          const double mc = std::abs(red.values[c]), mb = std::abs(red.values[bc]);
          if (mc != mb) better = mc < mb;
        }
        if (better) {
          best = corr(j, c);
          bj = j;
          bc = c;
        }
      }
    }
    if (bj < 0) {
      throw MultigridError(
          "correction_step: no reduced eigenvalue within the matching radius of a tracked value");
    }
    pick[bj] = bc;
    used[bc] = 1;
  }
  // Conjugate-pair consistency across the level transition.
  for (int j = 0; j < q; ++j) {
    const cplx pj = state_m.lambdas[j];
    if (std::abs(pj.imag()) <= 1e-9 * (1.0 + std::abs(pj))) continue;
    for (int l = 0; l < q; ++l) {
      if (l == j || std::abs(state_m.lambdas[l] - std::conj(pj)) > 1e-6 * (1.0 + std::abs(pj)))
        continue;
      const cplx a = red.values[pick[j]];
      const cplx b = red.values[pick[l]];
      if (std::abs(b - std::conj(a)) > 1e-6 * (1.0 + std::abs(a))) {
        throw MultigridError("correction_step: conjugate pair broke apart across levels");
      }
    }
  }

  LevelState st;
  st.level = state_m.level + 1;
  st.h = h_fine;
  st.dim = dim;
  for (int j = 0; j < q; ++j) {
    const int c = pick[j];
    cplx lambda = red.values[c];
    if (std::abs(lambda.imag()) <= 1e-9 * (1.0 + std::abs(lambda))) lambda = cplx(lambda.real(), 0.0);
    st.lambdas.push_back(lambda);
    st.right.push_back(a_normalize(std::move(cand_x[c]), fine.A));
    st.left.push_back(a_normalize(expand(red.left_vectors[c]), fine.A));
  }

  // Residuals: full fine-space residual and its Galerkin projection onto the
  // enriched space (the latter vanishes for exact reduced eigenpairs).
  for (int j = 0; j < q; ++j) {
    const auto ax = fine.A.mul(st.right[j]);
    const auto bx = fine.B.mul(st.right[j]);
    std::vector<cplx> r(dim);
    double rn = 0.0, an = 0.0;
    for (int i = 0; i < dim; ++i) {
      r[i] = ax[i] - st.lambdas[j] * bx[i];
      rn += std::norm(r[i]);
      an += std::norm(ax[i]);
    }
    st.residuals.push_back(std::sqrt(rn / an));
    const auto aty = fine.A.mul_transposed(st.left[j]);
    const auto bty = fine.B.mul_transposed(st.left[j]);
    double rln = 0.0, aln = 0.0;
    for (int i = 0; i < dim; ++i) {
      rln += std::norm(aty[i] - std::conj(st.lambdas[j]) * bty[i]);
      aln += std::norm(aty[i]);
    }
    st.left_residuals.push_back(std::sqrt(rln / aln));
    // Q^H r: coarse block + enrichment block.
    const auto pr = p2.mul_transposed(r);
    double gn = 0.0;
    for (const auto& v : pr) gn += std::norm(v);
    for (int c = 0; c < ne; ++c) {
      cplx dot(0.0, 0.0);
      for (int i = 0; i < dim; ++i) dot += ecols[c][i] * r[i];
      gn += std::norm(dot);
    }
    st.galerkin_residual = std::max(st.galerkin_residual, std::sqrt(gn / an));
  }
  st.qb = quasi_biorthogonality(st.right, st.left, fine.A);
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return st;
}

/// Algorithm driver: coarse solve on level 1, then one correction step per
/// refinement. On failure the states computed so far are returned along with
/// the error.
inline MultigridResult run_multigrid(const MultigridConfig& cfg) {
  MultigridResult result;
  try {
    if (cfg.levels < 1) throw MultigridError("run_multigrid: levels must be >= 1");
    if (cfg.q < 1) throw MultigridError("run_multigrid: q must be >= 1");
    cfg.refraction.require_c1(cfg.domain);

    auto mesh = build_mesh(cfg.domain, cfg.coarse_divisions);
    FeSpace space = build_space(mesh);
    ProductLayout layout(space);
    Pencil pencil = assemble_pencil(layout, cfg.refraction, cfg.quad_order);

    result.levels.push_back(coarse_solve(pencil, cfg, mesh_size(*mesh)));

    // Cumulative prolongation from level 1, built per-level as a product.
    SparseMatrix<double> p_cum = SparseMatrix<double>::identity(space.n_free);
    FeSpace prev_space = space;
    for (int m = 1; m < cfg.levels; ++m) {
      auto fine_mesh = refine_uniform(prev_space.mesh);
      FeSpace fine_space = build_space(fine_mesh);
      const SparseMatrix<double> p_step = prolongation(prev_space, fine_space);
      p_cum = p_step.matmul(p_cum);
      ProductLayout fine_layout(fine_space);
      Pencil fine_pencil = assemble_pencil(fine_layout, cfg.refraction, cfg.quad_order);
      result.levels.push_back(correction_step(result.levels.back(), fine_pencil, p_cum, p_step,
                                              mesh_size(*fine_mesh)));
      prev_space = std::move(fine_space);
    }
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
  }
  return result;
}

}  // namespace tev
