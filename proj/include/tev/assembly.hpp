#pragma once

// Assembly of the sesquilinear forms on the product space S^h x S^h:
//   A((u,w),(v,z)) = (1/(n-1) lap u, lap v) + (w, z)
//   B((u,w),(v,z)) = (grad(1/(n-1) u), grad v) + (grad u, grad(n/(n-1) v))
//                    - (n/(n-1) w, v) + (u, z)
// The gradient terms are expanded by the product rule, so only first
// derivatives of the basis and the smooth coefficient appear. Rows index test
// functions, columns trial functions; A is assembled exactly symmetric.

#include <array>
#include <vector>

#include "tev/bfs.hpp"
#include "tev/geometry.hpp"
#include "tev/quadrature.hpp"
#include "tev/refraction.hpp"
#include "tev/sparse.hpp"

namespace tev {

namespace detail {

struct BasisTables {
  std::vector<QuadPoint> qp;
  // [quad point][local dof], physical derivatives on a cell of side s
  std::vector<std::array<double, 16>> val, dx, dy, lap;
};

inline BasisTables make_basis_tables(double cell_side, int quad_order) {
  BasisTables t;
  t.qp = gauss_rule(quad_order);
  const std::size_t nq = t.qp.size();
  t.val.resize(nq);
  t.dx.resize(nq);
  t.dy.resize(nq);
  t.lap.resize(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    for (int d = 0; d < 16; ++d) {
      const double xi = t.qp[q].x, eta = t.qp[q].y;
      t.val[q][d] = element_eval(cell_side, d, xi, eta, Deriv::Val);
      t.dx[q][d] = element_eval(cell_side, d, xi, eta, Deriv::Dx);
      t.dy[q][d] = element_eval(cell_side, d, xi, eta, Deriv::Dy);
      t.lap[q][d] = element_eval(cell_side, d, xi, eta, Deriv::Dxx) +
                    element_eval(cell_side, d, xi, eta, Deriv::Dyy);
    }
  }
  return t;
}

using Local16 = std::array<std::array<double, 16>, 16>;

// Scatter a local block into product-space triplets with the given block
// offsets; constrained dofs drop out.
inline void scatter(const FeSpace& space, int cell, const Local16& loc, int row_offset,
                    int col_offset, double sign, std::vector<Triplet<double>>& trips) {
  const auto& nodes = space.mesh->cells[cell];
  int gdof[16];
  for (int d = 0; d < 16; ++d) gdof[d] = space.dof(nodes[d / 4], d % 4);
  for (int i = 0; i < 16; ++i) {
    if (gdof[i] == kConstrained) continue;
    for (int j = 0; j < 16; ++j) {
      if (gdof[j] == kConstrained) continue;
      trips.push_back({row_offset + gdof[i], col_offset + gdof[j], sign * loc[i][j]});
    }
  }
}

}  // namespace detail

/// Matrix of the A form on the product space (2 n_free square, symmetric
/// positive definite under (C1)).
inline SparseMatrix<double> assemble_A(const ProductLayout& layout, const RefractionField& n,
                                       int quad_order = 6) {
  const FeSpace& space = *layout.scalar_space;
  const RectMesh& mesh = *space.mesh;
  n.require_c1(mesh.domain);
  const auto tab = detail::make_basis_tables(mesh.cell_side, quad_order);
  const double area = mesh.cell_side * mesh.cell_side;
  const std::size_t nq = tab.qp.size();

  detail::Local16 kn{}, m{};
  auto accumulate = [&](int cell) {
    for (auto& row : kn) row.fill(0.0);
    for (auto& row : m) row.fill(0.0);
    const Vec2 o = mesh.cell_origin(cell);
    for (std::size_t q = 0; q < nq; ++q) {
      const double px = o.x + mesh.cell_side * tab.qp[q].x;
      const double py = o.y + mesh.cell_side * tab.qp[q].y;
      const double wq = tab.qp[q].w * area;
      const double c1 = wq * n.inv_nm1(px, py);
      for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
          kn[i][j] += c1 * (tab.lap[q][i] * tab.lap[q][j]);
          m[i][j] += wq * (tab.val[q][i] * tab.val[q][j]);
        }
      }
    }
  };

  std::vector<Triplet<double>> trips;
  trips.reserve(space.mesh->cells.size() * 512);
  const int nf = layout.n_free;
  if (n.is_constant()) {
    accumulate(0);
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
      detail::scatter(space, static_cast<int>(c), kn, 0, 0, 1.0, trips);
      detail::scatter(space, static_cast<int>(c), m, nf, nf, 1.0, trips);
    }
  } else {
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
      accumulate(static_cast<int>(c));
      detail::scatter(space, static_cast<int>(c), kn, 0, 0, 1.0, trips);
      detail::scatter(space, static_cast<int>(c), m, nf, nf, 1.0, trips);
    }
  }
  return SparseMatrix<double>::from_triplets(2 * nf, 2 * nf, std::move(trips));
}

/// Matrix of the B form on the product space; the (w,w) block is zero.
inline SparseMatrix<double> assemble_B(const ProductLayout& layout, const RefractionField& n,
                                       int quad_order = 6) {
  const FeSpace& space = *layout.scalar_space;
  const RectMesh& mesh = *space.mesh;
  n.require_c1(mesh.domain);
  const auto tab = detail::make_basis_tables(mesh.cell_side, quad_order);
  const double area = mesh.cell_side * mesh.cell_side;
  const std::size_t nq = tab.qp.size();

  detail::Local16 bu{}, mn{}, m{};
  auto accumulate = [&](int cell) {
    for (auto& row : bu) row.fill(0.0);
    for (auto& row : mn) row.fill(0.0);
    for (auto& row : m) row.fill(0.0);
    const Vec2 o = mesh.cell_origin(cell);
    for (std::size_t q = 0; q < nq; ++q) {
      const double px = o.x + mesh.cell_side * tab.qp[q].x;
      const double py = o.y + mesh.cell_side * tab.qp[q].y;
      const double wq = tab.qp[q].w * area;
      const double cg = wq * (n.inv_nm1(px, py) + n.n_over_nm1(px, py));
      const double c3 = wq * n.n_over_nm1(px, py);
      const auto g = n.grad_coeff(px, py);
      double gv[16];
      for (int i = 0; i < 16; ++i) gv[i] = wq * (g[0] * tab.dx[q][i] + g[1] * tab.dy[q][i]);
      for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
          bu[i][j] += cg * (tab.dx[q][i] * tab.dx[q][j] + tab.dy[q][i] * tab.dy[q][j]) +
                      (gv[i] * tab.val[q][j] + gv[j] * tab.val[q][i]);
          mn[i][j] += c3 * (tab.val[q][i] * tab.val[q][j]);
          m[i][j] += wq * (tab.val[q][i] * tab.val[q][j]);
        }
      }
    }
  };

  std::vector<Triplet<double>> trips;
  trips.reserve(space.mesh->cells.size() * 768);
  const int nf = layout.n_free;
  auto scatter_all = [&](int cell) {
    detail::scatter(space, cell, bu, 0, 0, 1.0, trips);    // (v test, u trial)
    detail::scatter(space, cell, mn, 0, nf, -1.0, trips);  // -(n/(n-1) w, v)
    detail::scatter(space, cell, m, nf, 0, 1.0, trips);    // (u, z)
  };
  if (n.is_constant()) {
    accumulate(0);
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) scatter_all(static_cast<int>(c));
  } else {
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
      accumulate(static_cast<int>(c));
      scatter_all(static_cast<int>(c));
    }
  }
  return SparseMatrix<double>::from_triplets(2 * nf, 2 * nf, std::move(trips));
}

/// Assembled pencil of one discretization level.
struct Pencil {
  SparseMatrix<double> A;
  SparseMatrix<double> B;
};

inline Pencil assemble_pencil(const ProductLayout& layout, const RefractionField& n,
                              int quad_order = 6) {
  return {assemble_A(layout, n, quad_order), assemble_B(layout, n, quad_order)};
}

}  // namespace tev
