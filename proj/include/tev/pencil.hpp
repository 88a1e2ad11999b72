#pragma once

// Generalized eigenpairs of pencils A x = lambda B x with A Hermitian
// positive definite: the A-norm normalization shared by every solver, and the
// dense solver used on reduced (enriched-space) problems. The dense route
// Cholesky-reduces to the standard problem L^-1 B L^-H z = (1/lambda) z,
// takes eigenvalues from Hessenberg QR, and recovers right/left vectors by
// inverse iteration on the Hessenberg form.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "tev/dense.hpp"
#include "tev/sparse.hpp"

namespace tev {

struct EigenPairSet {
  std::vector<cplx> values;
  std::vector<std::vector<cplx>> right_vectors;  // x: A x = lambda B x, x^H A x = 1
  std::vector<std::vector<cplx>> left_vectors;   // y: A^H y = conj(lambda) B^H y, y^H A y = 1
  std::vector<double> right_residuals;           // ||A x - lambda B x|| / ||A x||
  std::vector<double> left_residuals;

  std::size_t size() const { return values.size(); }
};

namespace detail {

inline double vec_norm2(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const cplx& x : v) s += std::norm(x);
  return std::sqrt(s);
}

// Phase fix: rotate so the largest-magnitude entry is real positive
// (ties resolved by the smallest index).
inline void fix_phase(std::vector<cplx>& x) {
  int best = -1;
  double mag = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    if (a > mag) {
      mag = a;
      best = static_cast<int>(i);
    }
  }
  if (best < 0 || mag == 0.0) return;
  const cplx ph = x[best] / mag;
  const cplx f = std::conj(ph);
  for (auto& xi : x) xi *= f;
}

inline bool essentially_real(const std::vector<cplx>& v, double tol = 1e-13) {
  double re = 0.0, im = 0.0;
  for (const cplx& x : v) {
    re += x.real() * x.real();
    im += x.imag() * x.imag();
  }
  return im <= tol * tol * (re + im);
}

}  // namespace detail

/// x / sqrt(x^H A x), phase fixed. A must be Hermitian positive definite.
template <class MatT>
std::vector<cplx> a_normalize(std::vector<cplx> x, const MatT& a) {
  const auto ax = a.mul(x);
  cplx dot(0.0, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) dot += std::conj(x[i]) * ax[i];
  const double nrm2 = dot.real();
  if (!(nrm2 > 0.0)) {
    throw LinalgError("a_normalize: x^H A x is not positive; A is not positive definite here");
  }
  const double s = 1.0 / std::sqrt(nrm2);
  for (auto& xi : x) xi *= s;
  detail::fix_phase(x);
  return x;
}

namespace detail {

// Residual ||A x - lambda B x|| / ||A x|| for any mat types with mul().
template <class MatA, class MatB>
double pencil_residual(const MatA& a, const MatB& b, const cplx& lambda,
                       const std::vector<cplx>& x) {
  const auto ax = a.mul(x);
  const auto bx = b.mul(x);
  double rn = 0.0, an = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    rn += std::norm(ax[i] - lambda * bx[i]);
    an += std::norm(ax[i]);
  }
  return an > 0.0 ? std::sqrt(rn / an) : std::sqrt(rn);
}

// For eigenvalue clusters (multiplicity > 1), right/left bases carry no
// natural pairing; recombine the left set so that y_j^H A x_i = delta_ij on
// the cluster, which keeps the primal-dual diagonal pairings away from zero.
template <class MatA>
void biorthogonalize_clusters(EigenPairSet& set, const MatA& a, double cluster_rel_tol = 1e-6) {
  const std::size_t m = set.size();
  std::vector<char> used(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    if (used[i]) continue;
    std::vector<int> cluster{static_cast<int>(i)};
    used[i] = 1;
    for (std::size_t j = i + 1; j < m; ++j) {
      if (!used[j] &&
          std::abs(set.values[i] - set.values[j]) <= cluster_rel_tol * (1.0 + std::abs(set.values[i]))) {
        cluster.push_back(static_cast<int>(j));
        used[j] = 1;
      }
    }
    const int q = static_cast<int>(cluster.size());
    if (q < 2) continue;
    // G(l, j) = y_l^H A x_j on the cluster.
    Matrix<cplx> g(q, q);
    std::vector<std::vector<cplx>> ax(q);
    for (int j = 0; j < q; ++j) ax[j] = a.mul(set.right_vectors[cluster[j]]);
    for (int l = 0; l < q; ++l) {
      for (int j = 0; j < q; ++j) {
        cplx dot(0.0, 0.0);
        const auto& y = set.left_vectors[cluster[l]];
        for (std::size_t r = 0; r < y.size(); ++r) dot += std::conj(y[r]) * ax[j][r];
        g(l, j) = dot;
      }
    }
    // Solve G^H C = I (so that (Y C)^H A X = I) by small Gaussian elimination.
    Matrix<cplx> gh = g.conj_transposed();
    Matrix<cplx> c = Matrix<cplx>::identity(q);
    for (int k = 0; k < q; ++k) {
      int piv = k;
      for (int r = k + 1; r < q; ++r)
        if (std::abs(gh(r, k)) > std::abs(gh(piv, k))) piv = r;
      if (std::abs(gh(piv, k)) < 1e-14) return;  // defective cluster: leave as is
      if (piv != k) {
        for (int col = 0; col < q; ++col) {
          std::swap(gh(k, col), gh(piv, col));
          std::swap(c(k, col), c(piv, col));
        }
      }
      const cplx d = gh(k, k);
      for (int col = 0; col < q; ++col) {
        gh(k, col) /= d;
        c(k, col) /= d;
      }
      for (int r = 0; r < q; ++r) {
        if (r == k) continue;
        const cplx f = gh(r, k);
        if (f == cplx(0.0, 0.0)) continue;
        for (int col = 0; col < q; ++col) {
          gh(r, col) -= f * gh(k, col);
          c(r, col) -= f * c(k, col);
        }
      }
    }
    // New lefts: y_new_j = sum_l y_l * conj(C(l, j))  (Y_new = Y C with Y as columns).
    const std::size_t dim = set.left_vectors[cluster[0]].size();
    std::vector<std::vector<cplx>> fresh(q, std::vector<cplx>(dim, cplx(0.0, 0.0)));
    for (int j = 0; j < q; ++j) {
      for (int l = 0; l < q; ++l) {
        const cplx w = c(l, j);
        if (w == cplx(0.0, 0.0)) continue;
        const auto& y = set.left_vectors[cluster[l]];
        for (std::size_t r = 0; r < dim; ++r) fresh[j][r] += w * y[r];
      }
    }
    for (int j = 0; j < q; ++j) set.left_vectors[cluster[j]] = a_normalize(std::move(fresh[j]), a);
  }
}

}  // namespace detail

namespace detail {

struct FocusData {
  const std::vector<cplx>* focus;
};

// Select nu whose lambda = 1/nu lies near a focus value (with margin beyond
// the tracking radius used by the correction step).
inline bool focus_select(const cplx& nu, const void* data) {
  const auto* fd = static_cast<const FocusData*>(data);
  if (std::abs(nu) < 1e-300) return false;
  const cplx lambda = 1.0 / nu;
  for (const cplx& f : *fd->focus) {
    if (std::abs(lambda - f) <= 0.6 * std::abs(f) + 1e-6) return true;
  }
  return false;
}

// Row-sweep forward substitution: X <- L^-1 X in place.
template <class T>
void rows_forward_solve(const Matrix<T>& l, Matrix<T>& x) {
  const int n = x.rows();
  const int m = x.cols();
  for (int i = 0; i < n; ++i) {
    T* xi = x.row(i);
    const T* li = l.row(i);
    for (int k = 0; k < i; ++k) {
      const T f = li[k];
      if (f == T{}) continue;
      const T* xk = x.row(k);
      for (int j = 0; j < m; ++j) xi[j] -= f * xk[j];
    }
    const T d = li[i];
    for (int j = 0; j < m; ++j) xi[j] /= d;
  }
}

// Row-sweep solve of C L^H = X: each row of C comes from a forward-ordered
// dot-product recurrence against the rows of L.
template <class T>
void rows_rtri_solve(const Matrix<T>& l, Matrix<T>& x) {
  const int n = x.cols();
  for (int i = 0; i < x.rows(); ++i) {
    T* xi = x.row(i);
    for (int j = 0; j < n; ++j) {
      T s = xi[j];
      const T* lj = l.row(j);
      for (int k = 0; k < j; ++k) s -= xi[k] * conj_of(lj[k]);
      xi[j] = s / conj_of(lj[j]);
    }
  }
}

}  // namespace detail

/// All finite eigenpairs of A x = lambda B x with A Hermitian positive
/// definite and B general. Right and left vectors are paired per index and
/// A-normalized; infinite eigenvalues (1/lambda below the filter) are
/// discarded. Eigenvalues are sorted by |lambda|, then imaginary part. When
/// `focus` is given, only pairs near those values are returned (with their
/// vectors); this keeps the reduced solves in the correction step cheap.
inline EigenPairSet dense_pencil_eig(const Matrix<cplx>& a_r, const Matrix<cplx>& b_r,
                                     const std::vector<cplx>* focus = nullptr) {
  const int n = a_r.rows();
  EigenPairSet out;
  if (n == 0) return out;

  bool real_input = true;
  for (const cplx& v : a_r.data())
    if (v.imag() != 0.0) {
      real_input = false;
      break;
    }
  if (real_input) {
    for (const cplx& v : b_r.data())
      if (v.imag() != 0.0) {
        real_input = false;
        break;
      }
  }

  detail::FocusData fd{focus};
  const EigSelector selector = focus ? &detail::focus_select : nullptr;
  const void* selector_data = focus ? static_cast<const void*>(&fd) : nullptr;

  // Reduce to C = L^-1 B L^-H; eigenvector mapping x = L^-H z, y = L^-H w.
  DenseEig eig;
  Matrix<cplx> lc;  // complex Cholesky factor view for the back-mapping
  if (real_input) {
    Matrix<double> l(n, n), c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        l(i, j) = a_r(i, j).real();
        c(i, j) = b_r(i, j).real();
      }
    cholesky(l);
    detail::rows_forward_solve(l, c);  // C <- L^-1 B
    detail::rows_rtri_solve(l, c);     // C <- C L^-T
    eig = eig_dense(c, /*want_right=*/true, /*want_left=*/true, selector, selector_data);
    lc = to_complex(l);
  } else {
    Matrix<cplx> l = a_r;
    cholesky(l);
    Matrix<cplx> c = b_r;
    detail::rows_forward_solve(l, c);
    detail::rows_rtri_solve(l, c);
    eig = eig_dense(c, true, true, selector, selector_data);
    lc = std::move(l);
  }

  // Map nu -> lambda = 1/nu, discard near-zero nu (infinite eigenvalues).
  double numax = 0.0;
  for (const cplx& v : eig.values) numax = std::max(numax, std::abs(v));
  const double nucut = 1e-12 * std::max(numax, 1.0);

  // Left eigenvectors of C were computed as eigenvectors of C^H paired by
  // index with conj(nu); eig_dense pairs them by eigenvalue index directly.
  std::vector<double> rres, lres;
  for (std::size_t col = 0; col < eig.vector_index.size(); ++col) {
    const int i = eig.vector_index[col];
    const cplx nu = eig.values[i];
    if (std::abs(nu) <= nucut) continue;
    const cplx lambda = 1.0 / nu;
    std::vector<cplx> z(n), w(n);
    for (int r = 0; r < n; ++r) {
      z[r] = eig.right(r, static_cast<int>(col));
      w[r] = eig.left(r, static_cast<int>(col));
    }
    solve_lower_herm(lc, z);
    solve_lower_herm(lc, w);
    out.values.push_back(lambda);
    out.right_vectors.push_back(a_normalize(std::move(z), a_r));
    out.left_vectors.push_back(a_normalize(std::move(w), a_r));
    rres.push_back(eig.right_res[col]);
    lres.push_back(eig.left_res[col]);
  }

  // Deterministic order: by |lambda|, then imaginary part, then real part.
  std::vector<std::size_t> perm(out.values.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(out.values[a]), mb = std::abs(out.values[b]);
    if (ma != mb) return ma < mb;
    if (out.values[a].imag() != out.values[b].imag())
      return out.values[a].imag() < out.values[b].imag();
    return out.values[a].real() < out.values[b].real();
  });
  EigenPairSet sorted;
  std::vector<double> rres_s, lres_s;
  for (std::size_t i : perm) {
    sorted.values.push_back(out.values[i]);
    sorted.right_vectors.push_back(std::move(out.right_vectors[i]));
    sorted.left_vectors.push_back(std::move(out.left_vectors[i]));
    rres_s.push_back(rres[i]);
    lres_s.push_back(lres[i]);
  }

  detail::biorthogonalize_clusters(sorted, a_r);
  // Exact pencil residuals are an O(n^3) afterthought for the full set; keep
  // them exact on small problems and fall back to the standard-form residual
  // estimates from the inverse iteration on large ones.
  if (n <= 400) {
    const Matrix<cplx> ah = a_r.conj_transposed();
    const Matrix<cplx> bh = b_r.conj_transposed();
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      sorted.right_residuals.push_back(
          detail::pencil_residual(a_r, b_r, sorted.values[i], sorted.right_vectors[i]));
      sorted.left_residuals.push_back(detail::pencil_residual(
          ah, bh, std::conj(sorted.values[i]), sorted.left_vectors[i]));
    }
  } else {
    sorted.right_residuals = rres_s;
    sorted.left_residuals = lres_s;
  }
  return sorted;
}

/// Convenience overload for real pencils.
inline EigenPairSet dense_pencil_eig(const Matrix<double>& a_r, const Matrix<double>& b_r) {
  return dense_pencil_eig(to_complex(a_r), to_complex(b_r));
}

}  // namespace tev
