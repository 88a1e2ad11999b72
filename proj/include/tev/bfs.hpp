#pragma once

// Bogner-Fox-Schmit bicubic rectangle element and the clamped scalar space
// S^h in H^2_0(D). Nodal unknowns are (value, d/dx, d/dy, d2/dxdy), stored as
// true physical derivatives; shape functions carry the cell-side scaling, so
// transfers between nested meshes are exact pointwise Hermite interpolation.

#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "tev/geometry.hpp"
#include "tev/sparse.hpp"

namespace tev {

enum class Deriv { Val, Dx, Dy, Dxx, Dyy, Dxy };

/// Cubic Hermite factors on [0,1] in the order (value@0, slope@0, value@1,
/// slope@1); derivative_order selects the function, first or second derivative.
inline std::array<double, 4> hermite_basis(double t, int derivative_order) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  switch (derivative_order) {
    case 0:
      return {1.0 - 3.0 * t2 + 2.0 * t3, t - 2.0 * t2 + t3, 3.0 * t2 - 2.0 * t3, -t2 + t3};
    case 1:
      return {-6.0 * t + 6.0 * t2, 1.0 - 4.0 * t + 3.0 * t2, 6.0 * t - 6.0 * t2, -2.0 * t + 3.0 * t2};
    case 2:
      return {-6.0 + 12.0 * t, -4.0 + 6.0 * t, 6.0 - 12.0 * t, -2.0 + 6.0 * t};
    default:
      throw std::invalid_argument("hermite_basis: derivative_order must be 0, 1 or 2");
  }
}

namespace detail {

// Corner reference coordinates, ccw from lower-left.
constexpr int kCornerA[4] = {0, 1, 1, 0};
constexpr int kCornerB[4] = {0, 0, 1, 1};

// 1D factor for a single end: pick (value, slope) interpolant of end a.
inline double hermite_factor(int end, int dof_is_slope, double t, int order) {
  const auto h = hermite_basis(t, order);
  return h[2 * end + dof_is_slope];
}

}  // namespace detail

/// Shape function `local_dof` (= 4*corner + type with type 0:val 1:dx 2:dy
/// 3:dxy) of a cell with side `cell_side`, evaluated at reference (xi, eta)
/// in [0,1]^2. Returns the physical value/derivative selected by `deriv`.
inline double element_eval(double cell_side, int local_dof, double xi, double eta, Deriv deriv) {
  const int corner = local_dof / 4;
  const int type = local_dof % 4;
  const int sx = (type == 1 || type == 3) ? 1 : 0;  // slope dof in x
  const int sy = (type == 2 || type == 3) ? 1 : 0;  // slope dof in y
  int ox = 0, oy = 0;
  switch (deriv) {
    case Deriv::Val: break;
    case Deriv::Dx: ox = 1; break;
    case Deriv::Dy: oy = 1; break;
    case Deriv::Dxx: ox = 2; break;
    case Deriv::Dyy: oy = 2; break;
    case Deriv::Dxy: ox = 1, oy = 1; break;
  }
  const double fx = detail::hermite_factor(detail::kCornerA[corner], sx, xi, ox);
  const double fy = detail::hermite_factor(detail::kCornerB[corner], sy, eta, oy);
  // dof scaling s^(sx+sy), chain rule s^-(ox+oy)
  int p = sx + sy - ox - oy;
  double scale = 1.0;
  for (; p > 0; --p) scale *= cell_side;
  for (; p < 0; ++p) scale /= cell_side;
  return fx * fy * scale;
}

constexpr int kConstrained = -1;

/// Scalar BFS space with the clamped-plate boundary conditions built in:
/// all four unknowns at boundary nodes are eliminated.
struct FeSpace {
  std::shared_ptr<const RectMesh> mesh;
  static constexpr int dofs_per_node = 4;
  std::vector<int> free_index;  // node*4 + type -> free dof id, or kConstrained
  int n_free = 0;

  int dof(int node, int type) const { return free_index[static_cast<std::size_t>(node) * 4 + type]; }
};

inline FeSpace build_space(std::shared_ptr<const RectMesh> mesh) {
  FeSpace s;
  s.mesh = std::move(mesh);
  s.free_index.assign(s.mesh->nodes.size() * 4, kConstrained);
  int next = 0;
  for (std::size_t n = 0; n < s.mesh->nodes.size(); ++n) {
    if (s.mesh->node_on_boundary[n]) continue;
    for (int t = 0; t < 4; ++t) s.free_index[n * 4 + t] = next++;
  }
  s.n_free = next;
  return s;
}

/// Product space S^h x S^h: coefficients are (u-block, w-block) stacked.
struct ProductLayout {
  const FeSpace* scalar_space = nullptr;
  int n_free = 0;

  explicit ProductLayout(const FeSpace& s) : scalar_space(&s), n_free(s.n_free) {}
  int total_dim() const { return 2 * n_free; }
  int u_index(int scalar_dof) const { return scalar_dof; }
  int w_index(int scalar_dof) const { return n_free + scalar_dof; }
};

/// Point evaluation of a finite element function given by free-dof
/// coefficients (constrained dofs are zero).
template <class T>
T evaluate(const FeSpace& space, std::span<const T> coeffs, Vec2 p, Deriv deriv) {
  const RectMesh& mesh = *space.mesh;
  const int cell = mesh.locate(p);
  if (cell < 0) throw MeshError("evaluate: point outside the domain");
  const Vec2 o = mesh.cell_origin(cell);
  const double s = mesh.cell_side;
  const double xi = (p.x - o.x) / s;
  const double eta = (p.y - o.y) / s;
  T acc{};
  for (int c = 0; c < 4; ++c) {
    const int node = mesh.cells[cell][c];
    for (int t = 0; t < 4; ++t) {
      const int gd = space.dof(node, t);
      if (gd == kConstrained) continue;
      acc += coeffs[gd] * element_eval(s, 4 * c + t, xi, eta, deriv);
    }
  }
  return acc;
}

inline double evaluate(const FeSpace& space, const std::vector<double>& coeffs, Vec2 p, Deriv deriv) {
  return evaluate<double>(space, std::span<const double>(coeffs), p, deriv);
}

/// Prolongation between consecutive nested spaces: P maps coarse free
/// coefficients to the fine coefficients of the same function. Columns hold
/// the Hermite data (value, d/dx, d/dy, d2/dxdy) of coarse basis functions at
/// fine nodes.
inline SparseMatrix<double> prolongation(const FeSpace& coarse, const FeSpace& fine) {
  if (!fine.mesh->parent || fine.mesh->parent.get() != coarse.mesh.get()) {
    throw MeshError("prolongation: fine mesh is not a refinement of the coarse mesh");
  }
  const RectMesh& fm = *fine.mesh;
  const RectMesh& cm = *coarse.mesh;
  static constexpr Deriv kDofDeriv[4] = {Deriv::Val, Deriv::Dx, Deriv::Dy, Deriv::Dxy};

  std::vector<Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(fine.n_free) * 16);
  for (std::size_t fn = 0; fn < fm.nodes.size(); ++fn) {
    if (fm.node_on_boundary[fn]) continue;  // constrained rows vanish exactly
    const Vec2 p = fm.nodes[fn];
    const int ccell = cm.locate(p);
    if (ccell < 0) throw MeshError("prolongation: fine node outside coarse mesh");
    const Vec2 o = cm.cell_origin(ccell);
    const double s = cm.cell_side;
    const double xi = (p.x - o.x) / s;
    const double eta = (p.y - o.y) / s;
    for (int c = 0; c < 4; ++c) {
      const int cnode = cm.cells[ccell][c];
      for (int t = 0; t < 4; ++t) {
        const int col = coarse.dof(cnode, t);
        if (col == kConstrained) continue;
        for (int ft = 0; ft < 4; ++ft) {
          const int row = fine.dof(static_cast<int>(fn), ft);
          const double v = element_eval(s, 4 * c + t, xi, eta, kDofDeriv[ft]);
          if (v != 0.0) trips.push_back({row, col, v});
        }
      }
    }
  }
  return SparseMatrix<double>::from_triplets(fine.n_free, coarse.n_free, std::move(trips));
}

/// Block-diagonal product-space prolongation diag(P, P).
inline SparseMatrix<double> product_prolongation(const SparseMatrix<double>& p_scalar) {
  std::vector<Triplet<double>> trips;
  trips.reserve(2 * p_scalar.nnz());
  const int rn = p_scalar.rows(), cn = p_scalar.cols();
  for (int r = 0; r < rn; ++r) {
    for (int k = p_scalar.row_begin(r); k < p_scalar.row_end(r); ++k) {
      trips.push_back({r, p_scalar.col(k), p_scalar.value(k)});
      trips.push_back({r + rn, p_scalar.col(k) + cn, p_scalar.value(k)});
    }
  }
  return SparseMatrix<double>::from_triplets(2 * rn, 2 * cn, std::move(trips));
}

}  // namespace tev
