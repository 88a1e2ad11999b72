#pragma once

// Row-compressed sparse matrices over double or complex<double>, with the
// handful of operations the solvers need: matvec (plain and transposed),
// transpose, sparse products, and triplet -> CSR assembly. Column indices are
// strictly increasing within each row and duplicates are summed on build.

#include <algorithm>
#include <cassert>
#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace tev {

using cplx = std::complex<double>;

template <class T>
struct Triplet {
  int row = 0;
  int col = 0;
  T value{};
};

template <class T>
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  static SparseMatrix identity(int n) {
    SparseMatrix m(n, n);
    m.col_.resize(n);
    m.val_.assign(n, T(1));
    for (int i = 0; i < n; ++i) {
      m.col_[i] = i;
      m.row_ptr_[i + 1] = i + 1;
    }
    return m;
  }

  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet<T>> trips) {
    // Stable: duplicates are summed in insertion order, so symmetric inputs
    // assemble bit-symmetric.
    std::stable_sort(trips.begin(), trips.end(), [](const Triplet<T>& a, const Triplet<T>& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m(rows, cols);
    m.col_.reserve(trips.size());
    m.val_.reserve(trips.size());
    std::size_t k = 0;
    for (int r = 0; r < rows; ++r) {
      while (k < trips.size() && trips[k].row == r) {
        const int c = trips[k].col;
        T v = trips[k].value;
        ++k;
        while (k < trips.size() && trips[k].row == r && trips[k].col == c) {
          v += trips[k].value;
          ++k;
        }
        m.col_.push_back(c);
        m.val_.push_back(v);
      }
      m.row_ptr_[r + 1] = static_cast<int>(m.col_.size());
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return val_.size(); }

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_; }
  const std::vector<T>& values() const { return val_; }
  std::vector<T>& values() { return val_; }

  int row_begin(int r) const { return row_ptr_[r]; }
  int row_end(int r) const { return row_ptr_[r + 1]; }
  int col(int k) const { return col_[k]; }
  const T& value(int k) const { return val_[k]; }

  template <class U>
  auto mul(const std::vector<U>& x) const {
    using R = decltype(T{} * U{});
    assert(static_cast<int>(x.size()) == cols_);
    std::vector<R> y(rows_, R{});
    for (int r = 0; r < rows_; ++r) {
      R acc{};
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += val_[k] * x[col_[k]];
      y[r] = acc;
    }
    return y;
  }

  template <class U>
  auto mul_transposed(const std::vector<U>& x) const {
    using R = decltype(T{} * U{});
    assert(static_cast<int>(x.size()) == rows_);
    std::vector<R> y(cols_, R{});
    for (int r = 0; r < rows_; ++r) {
      const U xr = x[r];
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) y[col_[k]] += val_[k] * xr;
    }
    return y;
  }

  SparseMatrix transposed() const {
    SparseMatrix t(cols_, rows_);
    std::vector<int> count(cols_, 0);
    for (int c : col_) ++count[c];
    t.row_ptr_.assign(cols_ + 1, 0);
    for (int c = 0; c < cols_; ++c) t.row_ptr_[c + 1] = t.row_ptr_[c] + count[c];
    t.col_.resize(nnz());
    t.val_.resize(nnz());
    std::vector<int> next(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
    for (int r = 0; r < rows_; ++r) {
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
        const int pos = next[col_[k]]++;
        t.col_[pos] = r;
        t.val_[pos] = val_[k];
      }
    }
    return t;  // rows sorted ascending because source rows were scanned in order
  }

  // this * other, deterministic row-merge product.
  SparseMatrix matmul(const SparseMatrix& other) const {
    if (cols_ != other.rows_) throw std::invalid_argument("matmul: dimension mismatch");
    SparseMatrix out(rows_, other.cols_);
    std::vector<int> mark(other.cols_, -1);
    std::vector<T> acc(other.cols_, T{});
    std::vector<int> colbuf;
    for (int r = 0; r < rows_; ++r) {
      colbuf.clear();
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
        const T a = val_[k];
        const int m = col_[k];
        for (int k2 = other.row_ptr_[m]; k2 < other.row_ptr_[m + 1]; ++k2) {
          const int c = other.col_[k2];
          if (mark[c] != r) {
            mark[c] = r;
            acc[c] = T{};
            colbuf.push_back(c);
          }
          acc[c] += a * other.val_[k2];
        }
      }
      std::sort(colbuf.begin(), colbuf.end());
      for (int c : colbuf) {
        out.col_.push_back(c);
        out.val_.push_back(acc[c]);
      }
      out.row_ptr_[r + 1] = static_cast<int>(out.col_.size());
    }
    return out;
  }

  SparseMatrix scaled(T s) const {
    SparseMatrix m = *this;
    for (auto& v : m.val_) v *= s;
    return m;
  }

  // this + s * other (patterns merged).
  SparseMatrix add_scaled(const SparseMatrix& other, T s) const {
    if (rows_ != other.rows_ || cols_ != other.cols_)
      throw std::invalid_argument("add_scaled: dimension mismatch");
    SparseMatrix out(rows_, cols_);
    for (int r = 0; r < rows_; ++r) {
      int ka = row_ptr_[r], kb = other.row_ptr_[r];
      const int ea = row_ptr_[r + 1], eb = other.row_ptr_[r + 1];
      while (ka < ea || kb < eb) {
        int ca = ka < ea ? col_[ka] : cols_;
        int cb = kb < eb ? other.col_[kb] : cols_;
        if (ca < cb) {
          out.col_.push_back(ca);
          out.val_.push_back(val_[ka++]);
        } else if (cb < ca) {
          out.col_.push_back(cb);
          out.val_.push_back(s * other.val_[kb++]);
        } else {
          out.col_.push_back(ca);
          out.val_.push_back(val_[ka++] + s * other.val_[kb++]);
        }
      }
      out.row_ptr_[r + 1] = static_cast<int>(out.col_.size());
    }
    return out;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const T& v : val_) s += std::norm(cplx(v));
    return std::sqrt(s);
  }

  double max_abs() const {
    double s = 0.0;
    for (const T& v : val_) s = std::max(s, std::abs(v));
    return s;
  }

  std::vector<std::vector<T>> to_dense() const {
    std::vector<std::vector<T>> d(rows_, std::vector<T>(cols_, T{}));
    for (int r = 0; r < rows_; ++r)
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d[r][col_[k]] += val_[k];
    return d;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_;
  std::vector<T> val_;
};

inline SparseMatrix<cplx> to_complex(const SparseMatrix<double>& a) {
  std::vector<Triplet<cplx>> t;
  t.reserve(a.nnz());
  for (int r = 0; r < a.rows(); ++r)
    for (int k = a.row_begin(r); k < a.row_end(r); ++k)
      t.push_back({r, a.col(k), cplx(a.value(k), 0.0)});
  return SparseMatrix<cplx>::from_triplets(a.rows(), a.cols(), std::move(t));
}

}  // namespace tev
