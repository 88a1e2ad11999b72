#include <complex>
#include <random>

#include "catch_amalgamated.hpp"
#include "tev/dense.hpp"
#include "tev/pencil.hpp"

using namespace tev;

namespace {

Matrix<double> random_real(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix<double> m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

Matrix<cplx> random_complex(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix<cplx> m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(u(rng), u(rng));
  return m;
}

Matrix<cplx> random_hpd(int n, unsigned seed) {
  auto g = random_complex(n, seed);
  Matrix<cplx> m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cplx s(0.0, 0.0);
      for (int k = 0; k < n; ++k) s += g(i, k) * std::conj(g(j, k));
      m(i, j) = s;
    }
    m(i, i) += n;  // comfortably positive definite
  }
  return m;
}

// Dense complex LU solve used only by the test oracle below.
struct DenseLuOracle {
  Matrix<cplx> a;
  std::vector<int> piv;
  explicit DenseLuOracle(Matrix<cplx> m) : a(std::move(m)) {
    const int n = a.rows();
    piv.resize(n);
    for (int k = 0; k < n; ++k) {
      int p = k;
      for (int i = k + 1; i < n; ++i)
        if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
      piv[k] = p;
      if (p != k)
        for (int j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      for (int i = k + 1; i < n; ++i) {
        a(i, k) /= a(k, k);
        const cplx f = a(i, k);
        for (int j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      }
    }
  }
  std::vector<cplx> solve(std::vector<cplx> b) const {
    const int n = a.rows();
    for (int k = 0; k < n; ++k) {
      if (piv[k] != k) std::swap(b[k], b[piv[k]]);
      for (int i = k + 1; i < n; ++i) b[i] -= a(i, k) * b[k];
    }
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) b[i] -= a(i, j) * b[j];
      b[i] /= a(i, i);
    }
    return b;
  }
};

// Inverse-power iteration with a fixed shift; converges to the pencil
// eigenvalue nearest the shift. Characteristic-polynomial free.
bool inverse_power_eigenvalue(const Matrix<cplx>& a, const Matrix<cplx>& b, cplx shift,
                              unsigned seed, cplx* lambda_out) {
  const int n = a.rows();
  Matrix<cplx> shifted(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) shifted(i, j) = a(i, j) - shift * b(i, j);
  for (int i = 0; i < n; ++i) {
    bool row_ok = false;
    for (int j = 0; j < n; ++j) row_ok |= shifted(i, j) != cplx(0.0, 0.0);
    if (!row_ok) return false;
  }
  DenseLuOracle lu(shifted);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<cplx> v(n);
  for (auto& x : v) x = cplx(u(rng), u(rng));
  cplx lambda{};
  for (int it = 0; it < 400; ++it) {
    auto bv = b.mul(v);
    v = lu.solve(bv);
    double nrm = 0.0;
    for (const auto& x : v) nrm += std::norm(x);
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return false;
    for (auto& x : v) x /= nrm;
    if (it % 16 == 15) {
      const auto av = a.mul(v);
      const auto bv2 = b.mul(v);
      cplx num{}, den{};
      for (int i = 0; i < n; ++i) {
        num += std::conj(v[i]) * av[i];
        den += std::conj(v[i]) * bv2[i];
      }
      if (std::abs(den) < 1e-14) return false;
      lambda = num / den;
    }
  }
  // Only accept a converged eigenpair as oracle data.
  const auto av = a.mul(v);
  const auto bv = b.mul(v);
  double rn = 0.0, an = 0.0;
  for (int i = 0; i < n; ++i) {
    rn += std::norm(av[i] - lambda * bv[i]);
    an += std::norm(av[i]);
  }
  if (!(std::sqrt(rn) <= 1e-9 * std::sqrt(an))) return false;
  *lambda_out = lambda;
  return true;
}

}  // namespace

TEST_CASE("cholesky factors and rejects indefinite input", "[dense]") {
  auto a = random_hpd(8, 1);
  Matrix<cplx> l = a;
  cholesky(l);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      cplx s(0.0, 0.0);
      for (int k = 0; k <= std::min(i, j); ++k) s += l(i, k) * std::conj(l(j, k));
      CHECK(std::abs(s - a(i, j)) < 1e-10 * std::abs(a(i, i)));
    }
  Matrix<cplx> bad(2, 2);
  bad(0, 0) = 1.0;
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(cholesky(bad), LinalgError);
}

TEST_CASE("real and complex QR agree on the spectrum of random matrices", "[dense]") {
  for (unsigned seed : {2u, 3u, 4u}) {
    const int n = 24;
    auto m = random_real(n, seed);
    const auto er = eig_dense(m, false, false);
    const auto ec = eig_dense(to_complex(m), false, false);
    REQUIRE(er.values.size() == static_cast<std::size_t>(n));
    REQUIRE(ec.values.size() == static_cast<std::size_t>(n));
    for (const cplx& v : er.values) {
      double best = 1e300;
      for (const cplx& w : ec.values) best = std::min(best, std::abs(v - w));
      CHECK(best < 1e-9 * (1.0 + std::abs(v)));
    }
  }
}

TEST_CASE("eigenvectors from inverse iteration satisfy their pencil", "[dense]") {
  const int n = 16;
  auto m = random_real(n, 9);
  const auto e = eig_dense(m, true, true);
  REQUIRE(e.vector_index.size() == static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    const cplx lam = e.values[e.vector_index[c]];
    std::vector<cplx> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = e.right(i, c);
      y[i] = e.left(i, c);
    }
    // ||A x - lam x|| small.
    double rn = 0.0, ln = 0.0;
    for (int i = 0; i < n; ++i) {
      cplx ax{}, aty{};
      for (int j = 0; j < n; ++j) {
        ax += m(i, j) * x[j];
        aty += m(j, i) * y[j];
      }
      rn += std::norm(ax - lam * x[i]);
      ln += std::norm(aty - std::conj(lam) * y[i]);
    }
    CHECK(std::sqrt(rn) < 1e-8 * (1.0 + std::abs(lam)));
    CHECK(std::sqrt(ln) < 1e-8 * (1.0 + std::abs(lam)));
  }
}

TEST_CASE("schur decomposition reconstructs the matrix", "[dense]") {
  const int n = 12;
  auto m = random_complex(n, 21);
  Matrix<cplx> t, z;
  complex_schur(m, t, z);
  // T upper triangular.
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) CHECK(std::abs(t(i, j)) < 1e-10);
  // Z T Z^H = M.
  const auto ztzh = z.mul(t).mul(z.conj_transposed());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) CHECK(std::abs(ztzh(i, j) - m(i, j)) < 1e-9);
  // Reordering preserves the reconstruction and moves the eigenvalue.
  const cplx target = t(n - 1, n - 1);
  schur_move(t, z, n - 1, 0);
  CHECK(std::abs(t(0, 0) - target) < 1e-9);
  const auto again = z.mul(t).mul(z.conj_transposed());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) CHECK(std::abs(again(i, j) - m(i, j)) < 1e-8);
}

TEST_CASE("dense pencil: diagonal toy", "[pencil]") {
  Matrix<cplx> a = Matrix<cplx>::identity(2);
  Matrix<cplx> b(2, 2);
  b(0, 0) = 1.0;
  b(1, 1) = 2.0;
  const auto set = dense_pencil_eig(a, b);
  REQUIRE(set.size() == 2);
  CHECK(std::abs(set.values[0] - cplx(0.5, 0.0)) < 1e-12);
  CHECK(std::abs(set.values[1] - cplx(1.0, 0.0)) < 1e-12);
  for (double r : set.right_residuals) CHECK(r < 1e-12);
}

TEST_CASE("dense pencil: rotation gives the pure conjugate pair", "[pencil]") {
  Matrix<cplx> a = Matrix<cplx>::identity(2);
  Matrix<cplx> b(2, 2);
  b(0, 1) = -1.0;
  b(1, 0) = 1.0;
  const auto set = dense_pencil_eig(a, b);
  REQUIRE(set.size() == 2);
  // Values sorted by |lambda| then imaginary part: -i first.
  CHECK(std::abs(set.values[0] - cplx(0.0, -1.0)) < 1e-12);
  CHECK(std::abs(set.values[1] - cplx(0.0, 1.0)) < 1e-12);
}

TEST_CASE("dense pencil matches the inverse-power oracle on a random 12x12", "[pencil]") {
  const int n = 12;
  const auto a = random_hpd(n, 33);
  const auto b = random_complex(n, 34);
  const auto set = dense_pencil_eig(a, b);
  REQUIRE(set.size() >= 10);  // generically all 12 finite

  std::mt19937 rng(35);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  int verified = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const cplx shift(u(rng), u(rng));
    cplx lambda;
    if (!inverse_power_eigenvalue(a, b, shift, 100 + trial, &lambda)) continue;
    double best = 1e300;
    for (const auto& v : set.values) best = std::min(best, std::abs(v - lambda));
    CHECK(best < 1e-8 * (1.0 + std::abs(lambda)));
    ++verified;
  }
  CHECK(verified >= 10);  // the oracle converges for most shifts
}

TEST_CASE("dense pencil left vectors satisfy the adjoint relation", "[pencil]") {
  const int n = 10;
  const auto a = random_hpd(n, 55);
  const auto b = random_complex(n, 56);
  const auto set = dense_pencil_eig(a, b);
  const auto ah = a.conj_transposed();
  const auto bh = b.conj_transposed();
  for (std::size_t p = 0; p < set.size(); ++p) {
    const auto& y = set.left_vectors[p];
    const auto ay = ah.mul(y);
    const auto by = bh.mul(y);
    double rn = 0.0, an = 0.0;
    for (int i = 0; i < n; ++i) {
      rn += std::norm(ay[i] - std::conj(set.values[p]) * by[i]);
      an += std::norm(ay[i]);
    }
    CHECK(std::sqrt(rn / an) < 1e-7);
    // A-normalization of both sides.
    const auto ax = a.mul(set.right_vectors[p]);
    cplx xn{}, ynrm{};
    const auto ayl = a.mul(y);
    for (int i = 0; i < n; ++i) {
      xn += std::conj(set.right_vectors[p][i]) * ax[i];
      ynrm += std::conj(y[i]) * ayl[i];
    }
    CHECK(std::abs(xn - 1.0) < 1e-10);
    CHECK(std::abs(ynrm - 1.0) < 1e-10);
  }
}

TEST_CASE("dense pencil rejects an indefinite gram matrix", "[pencil]") {
  Matrix<cplx> a(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -2.0;
  Matrix<cplx> b = Matrix<cplx>::identity(2);
  CHECK_THROWS_AS(dense_pencil_eig(a, b), LinalgError);
}

TEST_CASE("pivoted cholesky keeps independent columns only", "[dense]") {
  // Gram of 4 vectors where v2 = v0 + v1.
  Matrix<cplx> v(3, 4);
  v(0, 0) = 1.0;
  v(1, 1) = 1.0;
  v(0, 2) = 1.0;
  v(1, 2) = 1.0;
  v(2, 3) = 2.0;
  Matrix<cplx> g(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      cplx s{};
      for (int k = 0; k < 3; ++k) s += std::conj(v(k, i)) * v(k, j);
      g(i, j) = s;
    }
  double minpiv = 0.0;
  const auto kept = pivoted_cholesky_keep(g, 1e-10, &minpiv);
  CHECK(kept.size() == 3);
  CHECK(minpiv > 1e-10);
}
