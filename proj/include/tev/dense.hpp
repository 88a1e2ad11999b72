#pragma once

// Dense kernels for the eigensolvers: Householder reduction to Hessenberg
// form, Francis double-shift QR for real matrices (eigenvalues only),
// single-shift QR for complex matrices with optional Schur accumulation,
// Schur reordering, and inverse iteration on the Hessenberg form for
// eigenvectors. All deterministic; no external dependencies.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tev/sparse.hpp"  // for cplx

namespace tev {

class LinalgError : public std::runtime_error {
 public:
  explicit LinalgError(const std::string& what) : std::runtime_error(what) {}
};

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : r_(rows), c_(cols), a_(static_cast<std::size_t>(rows) * cols, T{}) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  T& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * c_ + j]; }
  const T& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * c_ + j]; }
  T* row(int i) { return a_.data() + static_cast<std::size_t>(i) * c_; }
  const T* row(int i) const { return a_.data() + static_cast<std::size_t>(i) * c_; }
  std::vector<T>& data() { return a_; }
  const std::vector<T>& data() const { return a_; }

  Matrix transposed() const {
    Matrix t(c_, r_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix conj_transposed() const {
    Matrix t(c_, r_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) {
        if constexpr (std::is_same_v<T, cplx>) {
          t(j, i) = std::conj((*this)(i, j));
        } else {
          t(j, i) = (*this)(i, j);
        }
      }
    return t;
  }

  std::vector<T> mul(const std::vector<T>& x) const {
    std::vector<T> y(r_, T{});
    for (int i = 0; i < r_; ++i) {
      T acc{};
      const T* ri = row(i);
      for (int j = 0; j < c_; ++j) acc += ri[j] * x[j];
      y[i] = acc;
    }
    return y;
  }

  Matrix mul(const Matrix& b) const {
    Matrix out(r_, b.c_);
    for (int i = 0; i < r_; ++i) {
      for (int k = 0; k < c_; ++k) {
        const T aik = (*this)(i, k);
        if (aik == T{}) continue;
        const T* bk = b.row(k);
        T* oi = out.row(i);
        for (int j = 0; j < b.c_; ++j) oi[j] += aik * bk[j];
      }
    }
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (const T& v : a_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  int r_ = 0, c_ = 0;
  std::vector<T> a_;
};

inline Matrix<cplx> to_complex(const Matrix<double>& a) {
  Matrix<cplx> m(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m(i, j) = cplx(a(i, j), 0.0);
  return m;
}

namespace detail {
inline double cabs1(const cplx& z) { return std::abs(z.real()) + std::abs(z.imag()); }
inline cplx conj_of(const cplx& z) { return std::conj(z); }
inline double conj_of(double x) { return x; }
}  // namespace detail

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

/// In-place lower Cholesky of a Hermitian positive definite matrix.
/// Throws LinalgError if a pivot is not strictly positive.
template <class T>
void cholesky(Matrix<T>& a) {
  const int n = a.rows();
  for (int j = 0; j < n; ++j) {
    double d = std::real(cplx(a(j, j)));
    for (int k = 0; k < j; ++k) d -= std::norm(cplx(a(j, k)));
    if (!(d > 0.0)) {
      throw LinalgError("cholesky: pivot " + std::to_string(j) + " is not positive (" +
                        std::to_string(d) + ")");
    }
    const double ljj = std::sqrt(d);
    a(j, j) = T(ljj);
    for (int i = j + 1; i < n; ++i) {
      T s = a(i, j);
      for (int k = 0; k < j; ++k) s -= a(i, k) * detail::conj_of(a(j, k));
      a(i, j) = s / T(ljj);
    }
    for (int k = j + 1; k < n; ++k) a(j, k) = T{};
  }
}

/// Greedy diagonally pivoted Cholesky of a Hermitian PSD matrix. Returns the
/// indices whose pivots exceed droptol * (largest initial diagonal), in
/// ascending order, and reports the smallest retained pivot.
template <class T>
std::vector<int> pivoted_cholesky_keep(const Matrix<T>& g, double droptol,
                                       double* smallest_kept_pivot = nullptr) {
  const int n = g.rows();
  std::vector<double> d(n);
  double dmax0 = 0.0;
  for (int i = 0; i < n; ++i) {
    d[i] = std::real(cplx(g(i, i)));
    dmax0 = std::max(dmax0, d[i]);
  }
  if (dmax0 <= 0.0) return {};
  const double cut = droptol * dmax0;

  Matrix<T> l(n, n);  // columns in pivot order
  std::vector<int> order;
  std::vector<char> done(n, 0);
  double minpivot = dmax0;
  for (int step = 0; step < n; ++step) {
    int p = -1;
    double best = cut;
    for (int i = 0; i < n; ++i) {
      if (!done[i] && d[i] > best) {
        best = d[i];
        p = i;
      }
    }
    if (p < 0) break;
    done[p] = 1;
    order.push_back(p);
    minpivot = std::min(minpivot, d[p]);
    const double root = std::sqrt(d[p]);
    l(p, step) = T(root);
    for (int i = 0; i < n; ++i) {
      if (done[i]) continue;
      T s = g(i, p);
      for (int k = 0; k < step; ++k) s -= l(i, k) * detail::conj_of(l(p, k));
      l(i, step) = s / T(root);
      d[i] -= std::norm(cplx(l(i, step)));
    }
  }
  if (smallest_kept_pivot) *smallest_kept_pivot = order.empty() ? 0.0 : minpivot;
  std::sort(order.begin(), order.end());
  return order;
}

/// Solve L x = b (lower triangular).
template <class T, class U>
void solve_lower(const Matrix<T>& l, std::vector<U>& b) {
  const int n = l.rows();
  for (int i = 0; i < n; ++i) {
    U s = b[i];
    const T* li = l.row(i);
    for (int k = 0; k < i; ++k) s -= li[k] * b[k];
    b[i] = s / li[i];
  }
}

/// Solve L^H x = b (conjugate-transposed lower triangular).
template <class T, class U>
void solve_lower_herm(const Matrix<T>& l, std::vector<U>& b) {
  const int n = l.rows();
  for (int i = n - 1; i >= 0; --i) {
    U s = b[i];
    for (int k = i + 1; k < n; ++k) s -= detail::conj_of(l(k, i)) * b[k];
    b[i] = s / detail::conj_of(l(i, i));
  }
}

// ---------------------------------------------------------------------------
// Hessenberg reduction
// ---------------------------------------------------------------------------

/// Householder reflectors of a Hessenberg reduction A = Q H Q^H; Q is kept in
/// factored form and applied on demand.
template <class T>
struct HessenbergReflectors {
  int n = 0;
  std::vector<std::vector<T>> v;   // reflector k acts on rows k+1..n-1
  std::vector<double> beta;        // 2 / (v^H v), or 0 for a skipped step

  template <class U>
  void apply_q(std::vector<U>& x) const {
    for (int k = static_cast<int>(v.size()) - 1; k >= 0; --k) {
      if (beta[k] == 0.0) continue;
      const auto& vk = v[k];
      U s{};
      for (std::size_t i = 0; i < vk.size(); ++i) s += detail::conj_of(vk[i]) * x[k + 1 + i];
      s *= beta[k];
      for (std::size_t i = 0; i < vk.size(); ++i) x[k + 1 + i] -= vk[i] * s;
    }
  }

  Matrix<T> form_q() const {
    Matrix<T> q = Matrix<T>::identity(n);
    // Accumulate backward; reflector k touches only rows/cols > k.
    for (int k = static_cast<int>(v.size()) - 1; k >= 0; --k) {
      if (beta[k] == 0.0) continue;
      const auto& vk = v[k];
      const int m = static_cast<int>(vk.size());
      for (int c = k + 1; c < n; ++c) {
        T s{};
        for (int i = 0; i < m; ++i) s += detail::conj_of(vk[i]) * q(k + 1 + i, c);
        s *= T(beta[k]);
        for (int i = 0; i < m; ++i) q(k + 1 + i, c) -= vk[i] * s;
      }
    }
    return q;
  }
};

/// Householder reduction to upper Hessenberg form, row-oriented updates.
template <class T>
void hessenberg_reduce(Matrix<T>& a, HessenbergReflectors<T>& refl) {
  const int n = a.rows();
  refl.n = n;
  refl.v.assign(std::max(n - 2, 0), {});
  refl.beta.assign(std::max(n - 2, 0), 0.0);
  std::vector<T> t(n);
  for (int k = 0; k + 2 < n; ++k) {
    const int m = n - k - 1;  // rows k+1..n-1
    double xnorm2 = 0.0;
    for (int i = k + 1; i < n; ++i) xnorm2 += std::norm(cplx(a(i, k)));
    const double xnorm = std::sqrt(xnorm2);
    if (xnorm == 0.0) continue;
    const T x0 = a(k + 1, k);
    const double ax0 = std::abs(cplx(x0));
    const T alpha = (ax0 == 0.0) ? T(-xnorm) : -(x0 / T(ax0)) * T(xnorm);

    std::vector<T> v(m);
    for (int i = 0; i < m; ++i) v[i] = a(k + 1 + i, k);
    v[0] -= alpha;
    double w = 0.0;
    for (int i = 0; i < m; ++i) w += std::norm(cplx(v[i]));
    if (w == 0.0) continue;
    const double beta = 2.0 / w;

    // A <- H A on rows k+1..n-1: t = v^H A accumulated row-wise.
    std::fill(t.begin() + k, t.end(), T{});
    for (int i = 0; i < m; ++i) {
      const T cv = detail::conj_of(v[i]);
      const T* row = a.row(k + 1 + i);
      for (int j = k; j < n; ++j) t[j] += cv * row[j];
    }
    for (int i = 0; i < m; ++i) {
      const T f = T(beta) * v[i];
      T* row = a.row(k + 1 + i);
      for (int j = k; j < n; ++j) row[j] -= f * t[j];
    }
    // A <- A H on columns k+1..n-1, one row at a time.
    for (int i = 0; i < n; ++i) {
      T* row = a.row(i);
      T s{};
      for (int j = 0; j < m; ++j) s += row[k + 1 + j] * v[j];
      s *= T(beta);
      for (int j = 0; j < m; ++j) row[k + 1 + j] -= s * detail::conj_of(v[j]);
    }
    a(k + 1, k) = alpha;
    for (int i = k + 2; i < n; ++i) a(i, k) = T{};
    refl.v[k] = std::move(v);
    refl.beta[k] = beta;
  }
}

/// Compatibility form returning the accumulated transform.
template <class T>
void hessenberg_reduce(Matrix<T>& a, Matrix<T>& p) {
  HessenbergReflectors<T> refl;
  hessenberg_reduce(a, refl);
  p = refl.form_q();
}

// ---------------------------------------------------------------------------
// Real Francis double-shift QR (eigenvalues only)
// ---------------------------------------------------------------------------

/// Eigenvalues of a real upper Hessenberg matrix; `h` is destroyed.
inline std::vector<cplx> hqr_eigenvalues(Matrix<double>& h) {
  const int nn = h.rows();
  std::vector<cplx> eig(nn);
  const double eps = std::numeric_limits<double>::epsilon();
  double exshift = 0.0;
  double p = 0, q = 0, r = 0, s = 0, z = 0, w, x, y;

  double norm = 0.0;
  for (int i = 0; i < nn; ++i)
    for (int j = std::max(i - 1, 0); j < nn; ++j) norm += std::abs(h(i, j));
  if (norm == 0.0) return eig;

  int n = nn - 1;
  int iter = 0;
  while (n >= 0) {
    // Look for a single small subdiagonal element.
    int l = n;
    while (l > 0) {
      s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
      if (s == 0.0) s = norm;
      if (std::abs(h(l, l - 1)) < eps * s) break;
      --l;
    }

    if (l == n) {
      h(n, n) += exshift;
      eig[n] = cplx(h(n, n), 0.0);
      --n;
      iter = 0;
    } else if (l == n - 1) {
      w = h(n, n - 1) * h(n - 1, n);
      p = (h(n - 1, n - 1) - h(n, n)) / 2.0;
      q = p * p + w;
      z = std::sqrt(std::abs(q));
      h(n, n) += exshift;
      h(n - 1, n - 1) += exshift;
      x = h(n, n);
      if (q >= 0) {
        z = (p >= 0) ? p + z : p - z;
        eig[n - 1] = cplx(x + z, 0.0);
        eig[n] = eig[n - 1];
        if (z != 0.0) eig[n] = cplx(x - w / z, 0.0);
      } else {
        eig[n - 1] = cplx(x + p, z);
        eig[n] = cplx(x + p, -z);
      }
      n -= 2;
      iter = 0;
    } else {
      x = h(n, n);
      y = 0.0;
      w = 0.0;
      if (l < n) {
        y = h(n - 1, n - 1);
        w = h(n, n - 1) * h(n - 1, n);
      }
      if (iter > 0 && iter % 10 == 0) {  // exceptional shift
        exshift += x;
        for (int i = 0; i <= n; ++i) h(i, i) -= x;
        s = std::abs(h(n, n - 1)) + std::abs(h(n - 1, n - 2));
        x = y = 0.75 * s;
        w = -0.4375 * s * s;
      }
      if (++iter > 100) throw LinalgError("hqr: QR iteration failed to converge");

      // Two consecutive small subdiagonals?
      int m = n - 2;
      while (m >= l) {
        z = h(m, m);
        r = x - z;
        s = y - z;
        p = (r * s - w) / h(m + 1, m) + h(m, m + 1);
        q = h(m + 1, m + 1) - z - r - s;
        r = h(m + 2, m + 1);
        s = std::abs(p) + std::abs(q) + std::abs(r);
        p /= s;
        q /= s;
        r /= s;
        if (m == l) break;
        if (std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r)) <
            eps * (std::abs(p) *
                   (std::abs(h(m - 1, m - 1)) + std::abs(z) + std::abs(h(m + 1, m + 1))))) {
          break;
        }
        --m;
      }
      for (int i = m + 2; i <= n; ++i) {
        h(i, i - 2) = 0.0;
        if (i > m + 2) h(i, i - 3) = 0.0;
      }

      // Double QR step on rows l..n.
      for (int k = m; k <= n - 1; ++k) {
        const bool notlast = (k != n - 1);
        if (k != m) {
          p = h(k, k - 1);
          q = h(k + 1, k - 1);
          r = notlast ? h(k + 2, k - 1) : 0.0;
          x = std::abs(p) + std::abs(q) + std::abs(r);
          if (x == 0.0) continue;
          p /= x;
          q /= x;
          r /= x;
        }
        s = std::sqrt(p * p + q * q + r * r);
        if (p < 0) s = -s;
        if (s == 0.0) continue;
        if (k != m) {
          h(k, k - 1) = -s * x;
        } else if (l != m) {
          h(k, k - 1) = -h(k, k - 1);
        }
        p += s;
        x = p / s;
        y = q / s;
        z = r / s;
        q /= p;
        r /= p;
        for (int j = k; j <= n; ++j) {  // row modification
          p = h(k, j) + q * h(k + 1, j);
          if (notlast) {
            p += r * h(k + 2, j);
            h(k + 2, j) -= p * z;
          }
          h(k, j) -= p * x;
          h(k + 1, j) -= p * y;
        }
        for (int i = l; i <= std::min(n, k + 3); ++i) {  // column modification
          p = x * h(i, k) + y * h(i, k + 1);
          if (notlast) {
            p += z * h(i, k + 2);
            h(i, k + 2) -= p * r;
          }
          h(i, k) -= p;
          h(i, k + 1) -= p * q;
        }
      }
    }
  }
  return eig;
}

// ---------------------------------------------------------------------------
// Complex single-shift QR
// ---------------------------------------------------------------------------

namespace detail {

// Givens rotation with c real: [c, s; -conj(s), c] * [a; b] = [r; 0].
inline void givens(const cplx& a, const cplx& b, double& c, cplx& s, cplx& r) {
  const double aa = std::abs(a), ab = std::abs(b);
  if (ab == 0.0) {
    c = 1.0;
    s = cplx(0.0, 0.0);
    r = a;
    return;
  }
  if (aa == 0.0) {
    c = 0.0;
    s = b / ab;  // makes r = |b| real; any unit phase works
    s = std::conj(s);
    r = ab;
    return;
  }
  const double h = std::hypot(aa, ab);
  c = aa / h;
  s = (a / aa) * std::conj(b) / h;
  r = (a / aa) * h;
}

// Eigenvalues of [a b; c d], ordered so that the cancellation-free root comes
// first and the second is recovered from the determinant.
inline void eig_2x2(const cplx& a, const cplx& b, const cplx& c, const cplx& d, cplx& l1,
                    cplx& l2) {
  const cplx tr = a + d;
  const cplx det = a * d - b * c;
  const cplx disc = std::sqrt(tr * tr - 4.0 * det);
  const cplx s1 = 0.5 * (tr + disc);
  const cplx s2 = 0.5 * (tr - disc);
  l1 = (std::abs(s1) >= std::abs(s2)) ? s1 : s2;
  l2 = (std::abs(l1) > 0.0) ? det / l1 : 0.5 * (tr - disc);
}

inline cplx wilkinson_shift(const cplx& a, const cplx& b, const cplx& c, const cplx& d) {
  cplx l1, l2;
  eig_2x2(a, b, c, d, l1, l2);
  return (std::abs(l1 - d) < std::abs(l2 - d)) ? l1 : l2;
}

}  // namespace detail

/// Single-shift QR on a complex upper Hessenberg matrix. When `z` is non-null
/// the full Schur form is produced (h becomes upper triangular, A = Z T Z^H
/// given Z initialized to the Hessenberg accumulation); otherwise only
/// eigenvalues are computed with window-limited updates.
inline std::vector<cplx> comqr_eigenvalues(Matrix<cplx>& h, Matrix<cplx>* z) {
  const int nn = h.rows();
  std::vector<cplx> eig(nn);
  const double eps = std::numeric_limits<double>::epsilon();

  double norm = 0.0;
  for (int i = 0; i < nn; ++i)
    for (int j = std::max(i - 1, 0); j < nn; ++j) norm += detail::cabs1(h(i, j));
  if (norm == 0.0) return eig;

  int n = nn - 1;
  int iter = 0;
  std::vector<double> cs(nn);
  std::vector<cplx> sn(nn);
  while (n >= 0) {
    int l = n;
    while (l > 0) {
      double s = detail::cabs1(h(l - 1, l - 1)) + detail::cabs1(h(l, l));
      if (s == 0.0) s = norm;
      if (std::abs(h(l, l - 1)) < eps * s) {
        h(l, l - 1) = cplx(0.0, 0.0);
        break;
      }
      --l;
    }
    if (l == n) {
      eig[n] = h(n, n);
      --n;
      iter = 0;
      continue;
    }
    if (l == n - 1) {
      // Deflate the trailing 2x2 block exactly with one unitary similarity;
      // iterating on it can stall at the rounding floor for multiple
      // eigenvalues.
      cplx l1, l2;
      detail::eig_2x2(h(n - 1, n - 1), h(n - 1, n), h(n, n - 1), h(n, n), l1, l2);
      // Eigenvector of the block for l2 (the one left in the top corner after
      // the rotation): pick the better-conditioned representation.
      const cplx xa = h(n - 1, n);
      const cplx xb = l2 - h(n - 1, n - 1);
      const cplx ya = l2 - h(n, n);
      const cplx yb = h(n, n - 1);
      cplx v0 = xa, v1 = xb;
      if (detail::cabs1(xa) + detail::cabs1(xb) < detail::cabs1(ya) + detail::cabs1(yb)) {
        v0 = ya;
        v1 = yb;
      }
      double c;
      cplx s, r;
      detail::givens(v0, v1, c, s, r);
      const int k = n - 1;
      const int colhi2 = z ? nn - 1 : n;
      const int rowlo2 = z ? 0 : l;
      for (int j = k; j <= colhi2; ++j) {
        const cplx t1 = h(k, j);
        const cplx t2 = h(k + 1, j);
        h(k, j) = c * t1 + s * t2;
        h(k + 1, j) = -std::conj(s) * t1 + c * t2;
      }
      for (int i = rowlo2; i <= k + 1; ++i) {
        const cplx t1 = h(i, k);
        const cplx t2 = h(i, k + 1);
        h(i, k) = c * t1 + std::conj(s) * t2;
        h(i, k + 1) = -s * t1 + c * t2;
      }
      if (z) {
        for (int i = 0; i < nn; ++i) {
          const cplx t1 = (*z)(i, k);
          const cplx t2 = (*z)(i, k + 1);
          (*z)(i, k) = c * t1 + std::conj(s) * t2;
          (*z)(i, k + 1) = -s * t1 + c * t2;
        }
      }
      h(n, n - 1) = cplx(0.0, 0.0);
      eig[n - 1] = h(n - 1, n - 1);
      eig[n] = h(n, n);
      n -= 2;
      iter = 0;
      continue;
    }
    if (++iter > 100) throw LinalgError("comqr: QR iteration failed to converge");

    cplx mu;
    if (iter % 10 == 0) {  // exceptional shift
      mu = cplx(std::abs(h(n, n - 1).real()) + std::abs(h(n, n - 1).imag()), 0.0) + h(n, n);
    } else {
      mu = detail::wilkinson_shift(h(n - 1, n - 1), h(n - 1, n), h(n, n - 1), h(n, n));
    }

    for (int i = l; i <= n; ++i) h(i, i) -= mu;

    // QR by Givens: annihilate subdiagonal, store rotations.
    const int colhi = z ? nn - 1 : n;
    for (int k = l; k < n; ++k) {
      cplx r;
      detail::givens(h(k, k), h(k + 1, k), cs[k], sn[k], r);
      h(k, k) = r;
      h(k + 1, k) = cplx(0.0, 0.0);
      for (int j = k + 1; j <= colhi; ++j) {
        const cplx t1 = h(k, j);
        const cplx t2 = h(k + 1, j);
        h(k, j) = cs[k] * t1 + sn[k] * t2;
        h(k + 1, j) = -std::conj(sn[k]) * t1 + cs[k] * t2;
      }
    }
    // RQ: apply rotations on the right.
    const int rowlo = z ? 0 : l;
    for (int k = l; k < n; ++k) {
      const int ihi = std::min(k + 1, n);
      for (int i = rowlo; i <= ihi; ++i) {
        const cplx t1 = h(i, k);
        const cplx t2 = h(i, k + 1);
        h(i, k) = cs[k] * t1 + std::conj(sn[k]) * t2;
        h(i, k + 1) = -sn[k] * t1 + cs[k] * t2;
      }
      if (z) {
        for (int i = 0; i < nn; ++i) {
          const cplx t1 = (*z)(i, k);
          const cplx t2 = (*z)(i, k + 1);
          (*z)(i, k) = cs[k] * t1 + std::conj(sn[k]) * t2;
          (*z)(i, k + 1) = -sn[k] * t1 + cs[k] * t2;
        }
      }
    }
    for (int i = l; i <= n; ++i) h(i, i) += mu;
  }
  return eig;
}

/// Schur decomposition A = Z T Z^H of a general complex matrix.
inline void complex_schur(Matrix<cplx> a, Matrix<cplx>& t, Matrix<cplx>& z) {
  hessenberg_reduce(a, z);
  comqr_eigenvalues(a, &z);
  t = std::move(a);
}

/// Move the Schur eigenvalue at position `from` to position `to` (< from) by
/// adjacent swaps, updating T and Z.
inline void schur_move(Matrix<cplx>& t, Matrix<cplx>& z, int from, int to) {
  const int n = t.rows();
  for (int j = from; j > to; --j) {
    // Swap diagonal entries j-1, j.
    const cplx t11 = t(j - 1, j - 1);
    const cplx t12 = t(j - 1, j);
    const cplx t22 = t(j, j);
    double c;
    cplx s, r;
    detail::givens(t12, t22 - t11, c, s, r);
    // Rows j-1, j.
    for (int k = j - 1; k < n; ++k) {
      const cplx a = t(j - 1, k);
      const cplx b = t(j, k);
      t(j - 1, k) = c * a + s * b;
      t(j, k) = -std::conj(s) * a + c * b;
    }
    // Columns j-1, j.
    for (int i = 0; i <= j; ++i) {
      const cplx a = t(i, j - 1);
      const cplx b = t(i, j);
      t(i, j - 1) = c * a + std::conj(s) * b;
      t(i, j) = -s * a + c * b;
    }
    for (int i = 0; i < n; ++i) {
      const cplx a = z(i, j - 1);
      const cplx b = z(i, j);
      z(i, j - 1) = c * a + std::conj(s) * b;
      z(i, j) = -s * a + c * b;
    }
    t(j, j - 1) = cplx(0.0, 0.0);
  }
}

// ---------------------------------------------------------------------------
// Inverse iteration on the Hessenberg form
// ---------------------------------------------------------------------------

namespace detail {

// Elimination record for (H - shift I) with partial pivoting; H upper
// Hessenberg. Supports solve and conjugate-transposed solve.
struct HessenbergLu {
  int n = 0;
  Matrix<cplx> u;            // filled upper triangle
  std::vector<cplx> mult;    // multiplier per column
  std::vector<char> swapped; // row-swap flag per column

  void factor(const Matrix<cplx>& h, cplx shift, double zero_pivot_replacement) {
    n = h.rows();
    u = h;
    for (int i = 0; i < n; ++i) u(i, i) -= shift;
    mult.assign(std::max(n - 1, 0), cplx(0.0, 0.0));
    swapped.assign(std::max(n - 1, 0), 0);
    for (int k = 0; k + 1 < n; ++k) {
      if (std::abs(u(k + 1, k)) > std::abs(u(k, k))) {
        swapped[k] = 1;
        for (int j = k; j < n; ++j) std::swap(u(k, j), u(k + 1, j));
      }
      cplx piv = u(k, k);
      if (piv == cplx(0.0, 0.0)) {
        piv = cplx(zero_pivot_replacement, 0.0);
        u(k, k) = piv;
      }
      const cplx m = u(k + 1, k) / piv;
      mult[k] = m;
      u(k + 1, k) = cplx(0.0, 0.0);
      if (m != cplx(0.0, 0.0)) {
        for (int j = k + 1; j < n; ++j) u(k + 1, j) -= m * u(k, j);
      }
    }
    if (n > 0 && u(n - 1, n - 1) == cplx(0.0, 0.0)) {
      u(n - 1, n - 1) = cplx(zero_pivot_replacement, 0.0);
    }
  }

  void solve(std::vector<cplx>& b) const {
    for (int k = 0; k + 1 < n; ++k) {
      if (swapped[k]) std::swap(b[k], b[k + 1]);
      b[k + 1] -= mult[k] * b[k];
    }
    for (int i = n - 1; i >= 0; --i) {
      cplx s = b[i];
      for (int j = i + 1; j < n; ++j) s -= u(i, j) * b[j];
      b[i] = s / u(i, i);
    }
  }

  // Solve (H - shift I)^H y = b.
  void solve_herm(std::vector<cplx>& b) const {
    for (int i = 0; i < n; ++i) {
      cplx s = b[i];
      for (int j = 0; j < i; ++j) s -= std::conj(u(j, i)) * b[j];
      b[i] = s / std::conj(u(i, i));
    }
    for (int k = n - 2; k >= 0; --k) {
      b[k] -= std::conj(mult[k]) * b[k + 1];
      if (swapped[k]) std::swap(b[k], b[k + 1]);
    }
  }
};

inline double vec_norm(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const cplx& x : v) s += std::norm(x);
  return std::sqrt(s);
}

// Deterministic xorshift-based start vector.
inline void seeded_start(std::vector<cplx>& v, unsigned seed) {
  std::uint64_t s = 0x9e3779b97f4a7c15ull ^ (static_cast<std::uint64_t>(seed) * 0xbf58476d1ce4e5b9ull + 1);
  for (auto& x : v) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    const double a = static_cast<double>(s >> 11) / 9007199254740992.0;  // [0,1)
    x = cplx(2.0 * a - 1.0, 0.0);
  }
}

}  // namespace detail

/// Right (and optionally left) eigenvectors of H for the eigenvalues at
/// `wanted` (indices into `eigenvalues`), by inverse iteration with the
/// shifted Hessenberg factorization. Eigenvalues close to each other share a
/// cluster and their vectors are orthogonalized against each other. Column c
/// of the outputs corresponds to wanted[c]. `right_res`/`left_res` receive
/// the standard-form residual estimate ||(H - nu I) v|| / ||H|| per column.
inline void hessenberg_eigenvectors(const Matrix<cplx>& h, const std::vector<cplx>& eigenvalues,
                                    const std::vector<int>& wanted, Matrix<cplx>* right,
                                    Matrix<cplx>* left, std::vector<double>* right_res = nullptr,
                                    std::vector<double>* left_res = nullptr) {
  const int n = h.rows();
  const int m = static_cast<int>(wanted.size());
  const double eps = std::numeric_limits<double>::epsilon();
  double hnorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - 1); j < n; ++j) hnorm += std::abs(h(i, j));
  hnorm = std::max(hnorm, eps);
  const double eps3 = eps * hnorm;

  if (right) *right = Matrix<cplx>(n, m);
  if (left) *left = Matrix<cplx>(n, m);
  if (right_res) right_res->assign(m, 0.0);
  if (left_res) left_res->assign(m, 0.0);

  std::vector<std::vector<int>> clusters;  // positions into `wanted`
  for (int p = 0; p < m; ++p) {
    const cplx lam = eigenvalues[wanted[p]];
    const double rad = 1e-8 * (1.0 + std::abs(lam));
    int found = -1;
    for (int c = 0; c < static_cast<int>(clusters.size()) && found < 0; ++c) {
      for (int j : clusters[c]) {
        if (std::abs(lam - eigenvalues[wanted[j]]) <= rad) {
          found = c;
          break;
        }
      }
    }
    if (found < 0) {
      found = static_cast<int>(clusters.size());
      clusters.push_back({});
    }
    clusters[found].push_back(p);
  }

  detail::HessenbergLu lu;
  std::vector<cplx> x(n), y(n);
  for (int c = 0; c < static_cast<int>(clusters.size()); ++c) {
    const auto& members = clusters[c];
    std::vector<std::vector<cplx>> done_right, done_left;
    for (std::size_t pos = 0; pos < members.size(); ++pos) {
      const int idx = members[pos];
      // Separate coincident shifts inside a cluster.
      const cplx shift = eigenvalues[wanted[idx]] + cplx(static_cast<double>(pos) * eps3, 0.0);
      lu.factor(h, shift, eps3);

      // Inverse iteration: iterate until the solve exhibits 1/eps-scale
      // growth, orthogonalizing inside the cluster after each solve.
      // Returns the final growth, whose reciprocal estimates ||(H-nu)v||.
      auto iterate = [&](std::vector<cplx>& v, bool herm, unsigned seed,
                         const std::vector<std::vector<cplx>>& prev_vecs) -> double {
        detail::seeded_start(v, seed);
        const double nrm0 = detail::vec_norm(v);
        for (auto& vi : v) vi /= nrm0;
        double growth = 0.0;
        for (int it = 0; it < 3; ++it) {
          if (herm) {
            lu.solve_herm(v);
          } else {
            lu.solve(v);
          }
          for (const auto& prev : prev_vecs) {
            cplx dot(0.0, 0.0);
            for (int i = 0; i < n; ++i) dot += std::conj(prev[i]) * v[i];
            for (int i = 0; i < n; ++i) v[i] -= dot * prev[i];
          }
          const double nrm = detail::vec_norm(v);
          if (nrm == 0.0) {
            detail::seeded_start(v, seed * 131u + 7u);
            continue;
          }
          for (auto& vi : v) vi /= nrm;
          growth = nrm;
          if (nrm * eps3 > 1e-1) break;  // residual down to ~10 eps ||H||
        }
        return growth;
      };

      const unsigned gidx = static_cast<unsigned>(wanted[idx]);
      if (right) {
        const double growth = iterate(x, false, gidx * 2u + 1u, done_right);
        done_right.push_back(x);
        for (int i = 0; i < n; ++i) (*right)(i, idx) = x[i];
        if (right_res) (*right_res)[idx] = growth > 0.0 ? 1.0 / (growth * hnorm) : 1.0;
      }
      if (left) {
        const double growth = iterate(y, true, gidx * 2u + 2u, done_left);
        done_left.push_back(y);
        for (int i = 0; i < n; ++i) (*left)(i, idx) = y[i];
        if (left_res) (*left_res)[idx] = growth > 0.0 ? 1.0 / (growth * hnorm) : 1.0;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// General dense eigenproblem driver
// ---------------------------------------------------------------------------

struct DenseEig {
  std::vector<cplx> values;       // all eigenvalues, canonical order
  std::vector<int> vector_index;  // indices whose eigenvectors were computed
  Matrix<cplx> right;             // column c <-> values[vector_index[c]]
  Matrix<cplx> left;              // eigenvectors of A^H for the conjugate value
  std::vector<double> right_res;  // standard-form residual estimates
  std::vector<double> left_res;

  int column_of(int value_index) const {
    for (std::size_t c = 0; c < vector_index.size(); ++c)
      if (vector_index[c] == value_index) return static_cast<int>(c);
    return -1;
  }
};

namespace detail {

inline void sort_eigen_canonical(std::vector<cplx>& v) {
  std::sort(v.begin(), v.end(), [](const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    const double ia = std::abs(a.imag()), ib = std::abs(b.imag());
    if (ia != ib) return ia < ib;
    return a.imag() > b.imag();
  });
}

}  // namespace detail

/// Which eigenvectors to compute: null selector means all.
using EigSelector = bool (*)(const cplx&, const void*);

/// All eigenvalues of a general real matrix, with eigenvectors for the
/// selected ones. Eigenvalues come sorted by real part, conjugate pairs
/// adjacent.
inline DenseEig eig_dense(const Matrix<double>& a, bool want_right = true, bool want_left = false,
                          EigSelector select = nullptr, const void* select_data = nullptr) {
  const int n = a.rows();
  DenseEig out;
  if (n == 0) return out;
  Matrix<double> h = a;
  HessenbergReflectors<double> refl;
  hessenberg_reduce(h, refl);
  Matrix<double> hwork = h;
  out.values = hqr_eigenvalues(hwork);
  hwork = Matrix<double>();
  detail::sort_eigen_canonical(out.values);
  if (!want_right && !want_left) return out;

  for (int i = 0; i < n; ++i) {
    if (!select || select(out.values[i], select_data)) out.vector_index.push_back(i);
  }
  const Matrix<cplx> hc = to_complex(h);
  h = Matrix<double>();
  Matrix<cplx> vr, vl;
  hessenberg_eigenvectors(hc, out.values, out.vector_index, want_right ? &vr : nullptr,
                          want_left ? &vl : nullptr, want_right ? &out.right_res : nullptr,
                          want_left ? &out.left_res : nullptr);
  const int nw = static_cast<int>(out.vector_index.size());
  std::vector<cplx> col(n);
  if (want_right) {
    out.right = Matrix<cplx>(n, nw);
    for (int c = 0; c < nw; ++c) {
      for (int i = 0; i < n; ++i) col[i] = vr(i, c);
      refl.apply_q(col);
      for (int i = 0; i < n; ++i) out.right(i, c) = col[i];
    }
  }
  if (want_left) {
    out.left = Matrix<cplx>(n, nw);
    for (int c = 0; c < nw; ++c) {
      for (int i = 0; i < n; ++i) col[i] = vl(i, c);
      refl.apply_q(col);
      for (int i = 0; i < n; ++i) out.left(i, c) = col[i];
    }
  }
  return out;
}

/// Same driver for a complex matrix.
inline DenseEig eig_dense(const Matrix<cplx>& a, bool want_right = true, bool want_left = false,
                          EigSelector select = nullptr, const void* select_data = nullptr) {
  const int n = a.rows();
  DenseEig out;
  if (n == 0) return out;
  Matrix<cplx> h = a;
  HessenbergReflectors<cplx> refl;
  hessenberg_reduce(h, refl);
  Matrix<cplx> hwork = h;
  out.values = comqr_eigenvalues(hwork, nullptr);
  hwork = Matrix<cplx>();
  detail::sort_eigen_canonical(out.values);
  if (!want_right && !want_left) return out;

  for (int i = 0; i < n; ++i) {
    if (!select || select(out.values[i], select_data)) out.vector_index.push_back(i);
  }
  Matrix<cplx> vr, vl;
  hessenberg_eigenvectors(h, out.values, out.vector_index, want_right ? &vr : nullptr,
                          want_left ? &vl : nullptr, want_right ? &out.right_res : nullptr,
                          want_left ? &out.left_res : nullptr);
  const int nw = static_cast<int>(out.vector_index.size());
  std::vector<cplx> col(n);
  if (want_right) {
    out.right = Matrix<cplx>(n, nw);
    for (int c = 0; c < nw; ++c) {
      for (int i = 0; i < n; ++i) col[i] = vr(i, c);
      refl.apply_q(col);
      for (int i = 0; i < n; ++i) out.right(i, c) = col[i];
    }
  }
  if (want_left) {
    out.left = Matrix<cplx>(n, nw);
    for (int c = 0; c < nw; ++c) {
      for (int i = 0; i < n; ++i) col[i] = vl(i, c);
      refl.apply_q(col);
      for (int i = 0; i < n; ++i) out.left(i, c) = col[i];
    }
  }
  return out;
}

}  // namespace tev
