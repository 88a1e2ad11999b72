#pragma once

// Structured square-cell meshes on the unit square and the L-shaped domain
// (-1,1)^2 \ [0,1)x(-1,0], with nested dyadic refinement. Node ordering is
// lexicographic by (y, x); cells are ordered by their lower-left node, so
// all downstream assembly is deterministic.

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tev {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

enum class Domain { UnitSquare, LShape };

inline double domain_area(Domain d) { return d == Domain::UnitSquare ? 1.0 : 3.0; }
inline const char* domain_name(Domain d) { return d == Domain::UnitSquare ? "unit_square" : "l_shape"; }

class MeshError : public std::runtime_error {
 public:
  explicit MeshError(const std::string& what) : std::runtime_error(what) {}
};

struct RectMesh {
  Domain domain = Domain::UnitSquare;
  int level = 1;
  int divisions = 1;       // cells per unit length
  double cell_side = 1.0;  // side of every (square) cell

  std::vector<Vec2> nodes;
  std::vector<std::array<int, 4>> cells;  // node ids, ccw from lower-left
  std::vector<char> node_on_boundary;

  std::shared_ptr<const RectMesh> parent;
  // children[c] = the 4 fine cells covering parent cell c: (ll, lr, ul, ur)
  std::vector<std::array<int, 4>> children;

  // Structured lookup. Grid coordinates (i, j) run over the bounding box
  // [lo, lo+units]^2 scaled by `divisions`; missing nodes/cells are -1.
  int grid_lo = 0;  // -1 for the L-shape, 0 for the unit square
  int units = 1;    // bounding box edge length in units

  int nodes_per_side() const { return units * divisions + 1; }
  int cells_per_side() const { return units * divisions; }

  int node_id(int i, int j) const {
    const int n = nodes_per_side();
    if (i < 0 || j < 0 || i >= n || j >= n) return -1;
    return node_grid_[static_cast<std::size_t>(j) * n + i];
  }
  int cell_id(int i, int j) const {
    const int n = cells_per_side();
    if (i < 0 || j < 0 || i >= n || j >= n) return -1;
    return cell_grid_[static_cast<std::size_t>(j) * n + i];
  }
  // Grid index pair of a cell's lower-left corner.
  std::array<int, 2> cell_grid_coords(int cell) const { return cell_coords_[cell]; }

  Vec2 cell_origin(int cell) const {
    const auto [ci, cj] = cell_coords_[cell];
    return {coord(ci), coord(cj)};
  }

  // Exact nodal coordinate: single rounding of (grid_lo*divisions + i)/divisions,
  // so coinciding nodes of nested meshes agree bit for bit.
  double coord(int i) const {
    return static_cast<double>(grid_lo * divisions + i) / static_cast<double>(divisions);
  }

  // Deterministic point location: the candidate cell right/above the point wins,
  // with fallbacks for points on the upper/right edges of the grid. Returns -1
  // if the point lies outside the domain.
  int locate(Vec2 p, double tol = 1e-12) const {
    const double gx = (p.x - grid_lo) / cell_side;  // grid units
    const double gy = (p.y - grid_lo) / cell_side;
    const int i0 = static_cast<int>(std::floor(gx));
    const int j0 = static_cast<int>(std::floor(gy));
    for (int dj : {0, -1}) {
      for (int di : {0, -1}) {
        const int c = cell_id(i0 + di, j0 + dj);
        if (c < 0) continue;
        const Vec2 o = cell_origin(c);
        if (p.x >= o.x - tol && p.x <= o.x + cell_side + tol && p.y >= o.y - tol &&
            p.y <= o.y + cell_side + tol) {
          return c;
        }
      }
    }
    return -1;
  }

  std::vector<int> node_grid_;
  std::vector<int> cell_grid_;
  std::vector<std::array<int, 2>> cell_coords_;
};

namespace detail {

inline bool lshape_node_removed(int i, int j, int d) { return i > d && j < d; }
inline bool lshape_cell_removed(int i, int j, int d) { return i >= d && j < d; }

inline bool node_on_domain_boundary(Domain dom, int i, int j, int d) {
  const int top = (dom == Domain::UnitSquare) ? d : 2 * d;
  if (i == 0 || j == 0 || i == top || j == top) return true;
  if (dom == Domain::LShape) {
    if (i == d && j <= d) return true;  // re-entrant edge x = 0, y <= 0
    if (j == d && i >= d) return true;  // re-entrant edge y = 0, x >= 0
  }
  return false;
}

inline std::shared_ptr<RectMesh> make_mesh(Domain domain, int divisions, int level) {
  if (divisions < 1) throw MeshError("divisions_per_unit must be >= 1");
  auto m = std::make_shared<RectMesh>();
  m->domain = domain;
  m->level = level;
  m->divisions = divisions;
  m->cell_side = 1.0 / static_cast<double>(divisions);
  m->grid_lo = (domain == Domain::UnitSquare) ? 0 : -1;
  m->units = (domain == Domain::UnitSquare) ? 1 : 2;

  const int n = m->nodes_per_side();
  const int nc = m->cells_per_side();
  m->node_grid_.assign(static_cast<std::size_t>(n) * n, -1);
  m->cell_grid_.assign(static_cast<std::size_t>(nc) * nc, -1);

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (domain == Domain::LShape && lshape_node_removed(i, j, divisions)) continue;
      m->node_grid_[static_cast<std::size_t>(j) * n + i] = static_cast<int>(m->nodes.size());
      m->nodes.push_back({m->coord(i), m->coord(j)});
      m->node_on_boundary.push_back(node_on_domain_boundary(domain, i, j, divisions) ? 1 : 0);
    }
  }
  for (int j = 0; j < nc; ++j) {
    for (int i = 0; i < nc; ++i) {
      if (domain == Domain::LShape && lshape_cell_removed(i, j, divisions)) continue;
      m->cell_grid_[static_cast<std::size_t>(j) * nc + i] = static_cast<int>(m->cells.size());
      m->cells.push_back({m->node_id(i, j), m->node_id(i + 1, j), m->node_id(i + 1, j + 1),
                          m->node_id(i, j + 1)});
      m->cell_coords_.push_back({i, j});
    }
  }
  return m;
}

}  // namespace detail

/// Coarse mesh covering `domain` with squares of side 1/divisions_per_unit.
inline std::shared_ptr<const RectMesh> build_mesh(Domain domain, int divisions_per_unit) {
  return detail::make_mesh(domain, divisions_per_unit, 1);
}

/// Quadrisect every cell; the result is nested in `mesh` and carries parent links.
inline std::shared_ptr<const RectMesh> refine_uniform(const std::shared_ptr<const RectMesh>& mesh) {
  if (!mesh) throw MeshError("refine_uniform: null mesh");
  auto fine = detail::make_mesh(mesh->domain, 2 * mesh->divisions, mesh->level + 1);
  fine->parent = mesh;
  fine->children.resize(mesh->cells.size());
  for (std::size_t c = 0; c < mesh->cells.size(); ++c) {
    const auto [ci, cj] = mesh->cell_grid_coords(static_cast<int>(c));
    fine->children[c] = {fine->cell_id(2 * ci, 2 * cj), fine->cell_id(2 * ci + 1, 2 * cj),
                         fine->cell_id(2 * ci, 2 * cj + 1), fine->cell_id(2 * ci + 1, 2 * cj + 1)};
  }
  return fine;
}

/// Mesh size h, reported as the cell diagonal.
inline double mesh_size(const RectMesh& mesh) { return mesh.cell_side * std::sqrt(2.0); }

}  // namespace tev
