#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "tev/assembly.hpp"
#include "tev/bfs.hpp"
#include "tev/geometry.hpp"

using namespace tev;

TEST_CASE("hermite factors interpolate value and slope data", "[bfs]") {
  auto h0 = hermite_basis(0.0, 0);
  CHECK(h0[0] == 1.0);
  CHECK(h0[1] == 0.0);
  CHECK(h0[2] == 0.0);
  CHECK(h0[3] == 0.0);
  auto h1 = hermite_basis(1.0, 0);
  CHECK(h1[0] == 0.0);
  CHECK(h1[1] == 0.0);
  CHECK(h1[2] == 1.0);
  CHECK(h1[3] == 0.0);
  auto d0 = hermite_basis(0.0, 1);
  CHECK(d0[0] == 0.0);
  CHECK(d0[1] == 1.0);
  CHECK(d0[2] == 0.0);
  CHECK(d0[3] == 0.0);
  auto d1 = hermite_basis(1.0, 1);
  CHECK(d1[3] == 1.0);
}

TEST_CASE("shape functions are nodal and form a partition of unity", "[bfs]") {
  const double s = 0.25;
  // Value shape of corner c equals 1 at its own corner, 0 at the others.
  const double corners[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int c = 0; c < 4; ++c) {
    for (int other = 0; other < 4; ++other) {
      const double v = element_eval(s, 4 * c + 0, corners[other][0], corners[other][1], Deriv::Val);
      CHECK(v == Catch::Approx(c == other ? 1.0 : 0.0).margin(1e-14));
    }
  }
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const double xi = u(rng), eta = u(rng);
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) sum += element_eval(s, 4 * c + 0, xi, eta, Deriv::Val);
    CHECK(sum == Catch::Approx(1.0).margin(1e-13));
  }
}

namespace {

// Hermite data of f(x,y) = x^3 y^3 for the interpolation tests.
struct Cubic {
  static double f(double x, double y) { return x * x * x * y * y * y; }
  static double fx(double x, double y) { return 3 * x * x * y * y * y; }
  static double fy(double x, double y) { return 3 * x * x * x * y * y; }
  static double fxy(double x, double y) { return 9 * x * x * y * y; }
};

}  // namespace

TEST_CASE("bicubic functions are reproduced exactly on a single cell", "[bfs]") {
  const double s = 0.5, x0 = 0.25, y0 = 0.125;  // arbitrary physical cell
  const double cx[4] = {x0, x0 + s, x0 + s, x0};
  const double cy[4] = {y0, y0, y0 + s, y0 + s};
  double coeffs[16];
  for (int c = 0; c < 4; ++c) {
    coeffs[4 * c + 0] = Cubic::f(cx[c], cy[c]);
    coeffs[4 * c + 1] = Cubic::fx(cx[c], cy[c]);
    coeffs[4 * c + 2] = Cubic::fy(cx[c], cy[c]);
    coeffs[4 * c + 3] = Cubic::fxy(cx[c], cy[c]);
  }
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 25; ++t) {
    const double xi = t == 0 ? 0.5 : u(rng), eta = t == 0 ? 0.5 : u(rng);
    double val = 0.0;
    for (int d = 0; d < 16; ++d) val += coeffs[d] * element_eval(s, d, xi, eta, Deriv::Val);
    CHECK(val == Catch::Approx(Cubic::f(x0 + s * xi, y0 + s * eta)).margin(1e-12));
  }
}

TEST_CASE("clamped space sizes", "[bfs]") {
  auto s8 = build_space(build_mesh(Domain::UnitSquare, 8));
  CHECK(s8.n_free == 196);  // 4 * 7 * 7
  auto s16 = build_space(build_mesh(Domain::UnitSquare, 16));
  CHECK(s16.n_free == 900);  // 4 * 225
  auto l8 = build_space(build_mesh(Domain::LShape, 8));
  CHECK(l8.n_free == 644);  // 4 * 161 interior nodes
  ProductLayout layout(s8);
  CHECK(layout.total_dim() == 392);
  CHECK(layout.u_index(3) == 3);
  CHECK(layout.w_index(3) == 199);
}

TEST_CASE("evaluate: zero coefficients, nodal unit, boundary zero", "[bfs]") {
  auto space = build_space(build_mesh(Domain::UnitSquare, 4));
  std::vector<double> zero(space.n_free, 0.0);
  CHECK(evaluate(space, zero, {0.3, 0.7}, Deriv::Val) == 0.0);

  // A unit value dof at an interior node evaluates to 1 there.
  const auto& mesh = *space.mesh;
  int node = -1;
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) {
    if (!mesh.node_on_boundary[n]) {
      node = static_cast<int>(n);
      break;
    }
  }
  REQUIRE(node >= 0);
  std::vector<double> c(space.n_free, 0.0);
  c[space.dof(node, 0)] = 1.0;
  CHECK(evaluate(space, c, mesh.nodes[node], Deriv::Val) == Catch::Approx(1.0).margin(1e-14));

  // Any coefficient vector vanishes (with normal derivative) on the boundary.
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : c) v = u(rng);
  std::uniform_real_distribution<double> t(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const double s = t(rng);
    CHECK(std::abs(evaluate(space, c, {s, 0.0}, Deriv::Val)) < 1e-13);
    CHECK(std::abs(evaluate(space, c, {s, 0.0}, Deriv::Dy)) < 1e-12);
    CHECK(std::abs(evaluate(space, c, {0.0, s}, Deriv::Val)) < 1e-13);
    CHECK(std::abs(evaluate(space, c, {0.0, s}, Deriv::Dx)) < 1e-12);
    CHECK(std::abs(evaluate(space, c, {s, 1.0}, Deriv::Val)) < 1e-13);
    CHECK(std::abs(evaluate(space, c, {1.0, s}, Deriv::Val)) < 1e-13);
  }
  CHECK_THROWS_AS(evaluate(space, c, {2.0, 0.5}, Deriv::Val), MeshError);
}

TEST_CASE("C1 continuity across interior edges", "[bfs]") {
  auto space = build_space(build_mesh(Domain::UnitSquare, 4));
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(space.n_free);
  for (auto& v : c) v = u(rng);

  const double s = space.mesh->cell_side;
  std::uniform_real_distribution<double> t(0.01, 0.99);
  for (int trial = 0; trial < 10; ++trial) {
    // Vertical interior edge x = 2s, approach from both sides.
    const double y = (1.0 + t(rng) * 2.0) * s;
    const double xe = 2.0 * s;
    const double eps = 1e-9;
    for (Deriv d : {Deriv::Val, Deriv::Dx, Deriv::Dy}) {
      const double a = evaluate(space, c, {xe - eps, y}, d);
      const double b = evaluate(space, c, {xe + eps, y}, d);
      CHECK(std::abs(a - b) < 1e-6);  // finite-difference probes straddle the edge
    }
    // Exactly on the edge both candidate cells agree to rounding.
    const double direct = evaluate(space, c, {xe, y}, Deriv::Val);
    CHECK(std::abs(direct - evaluate(space, c, {xe - eps, y}, Deriv::Val)) < 1e-6);
  }
}

TEST_CASE("C1 conformity: one-sided traces agree to 1e-12", "[bfs]") {
  // Evaluate the same interface point from the two adjacent cells explicitly
  // by assembling the local data on each side.
  auto mesh = build_mesh(Domain::UnitSquare, 4);
  auto space = build_space(mesh);
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(space.n_free);
  for (auto& v : c) v = u(rng);

  auto eval_on_cell = [&](int cell, Vec2 p, Deriv d) {
    const Vec2 o = mesh->cell_origin(cell);
    const double s = mesh->cell_side;
    double acc = 0.0;
    for (int corner = 0; corner < 4; ++corner) {
      const int node = mesh->cells[cell][corner];
      for (int tdof = 0; tdof < 4; ++tdof) {
        const int gd = space.dof(node, tdof);
        if (gd == kConstrained) continue;
        acc += c[gd] * element_eval(s, 4 * corner + tdof, (p.x - o.x) / s, (p.y - o.y) / s, d);
      }
    }
    return acc;
  };

  std::uniform_real_distribution<double> t(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    // Interface between cell (1,1) and (2,1): vertical edge at x = 0.5.
    const int left = mesh->cell_id(1, 1);
    const int right = mesh->cell_id(2, 1);
    const Vec2 p{0.5, 0.25 + 0.25 * t(rng)};
    CHECK(std::abs(eval_on_cell(left, p, Deriv::Val) - eval_on_cell(right, p, Deriv::Val)) < 1e-12);
    CHECK(std::abs(eval_on_cell(left, p, Deriv::Dx) - eval_on_cell(right, p, Deriv::Dx)) < 1e-12);
    // Horizontal edge at y = 0.5 between (1,1) and (1,2).
    const int below = mesh->cell_id(1, 1);
    const int above = mesh->cell_id(1, 2);
    const Vec2 ph{0.25 + 0.25 * t(rng), 0.5};
    CHECK(std::abs(eval_on_cell(below, ph, Deriv::Val) - eval_on_cell(above, ph, Deriv::Val)) <
          1e-12);
    CHECK(std::abs(eval_on_cell(below, ph, Deriv::Dy) - eval_on_cell(above, ph, Deriv::Dy)) <
          1e-12);
  }
}

TEST_CASE("prolongation reproduces the coarse function exactly", "[bfs]") {
  for (Domain dom : {Domain::UnitSquare, Domain::LShape}) {
    auto coarse_mesh = build_mesh(dom, 4);
    auto fine_mesh = refine_uniform(coarse_mesh);
    auto coarse = build_space(coarse_mesh);
    auto fine = build_space(fine_mesh);
    auto p = prolongation(coarse, fine);
    REQUIRE(p.rows() == fine.n_free);
    REQUIRE(p.cols() == coarse.n_free);

    std::vector<double> zero(coarse.n_free, 0.0);
    auto pz = p.mul(zero);
    for (double v : pz) CHECK(v == 0.0);

    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> c(coarse.n_free);
    for (auto& v : c) v = u(rng);
    const auto pc = p.mul(c);

    const double lo = dom == Domain::UnitSquare ? 0.0 : -1.0;
    std::uniform_real_distribution<double> pt(lo, 1.0);
    int tested = 0;
    for (int trial = 0; tested < 100 && trial < 1000; ++trial) {
      const Vec2 x{pt(rng), pt(rng)};
      if (coarse_mesh->locate(x) < 0) continue;
      ++tested;
      for (Deriv d : {Deriv::Val, Deriv::Dx, Deriv::Dy}) {
        const double a = evaluate(coarse, c, x, d);
        const double b = evaluate(fine, pc, x, d);
        CHECK(std::abs(a - b) < 1e-12 * (1.0 + std::abs(a)));
      }
    }
    CHECK(tested == 100);
  }
}

TEST_CASE("prolongation rejects non-child spaces", "[bfs]") {
  auto m1 = build_mesh(Domain::UnitSquare, 4);
  auto m2 = build_mesh(Domain::UnitSquare, 8);  // same sizes, no parent link
  auto s1 = build_space(m1);
  auto s2 = build_space(m2);
  CHECK_THROWS_AS(prolongation(s1, s2), MeshError);
}

TEST_CASE("Galerkin identity through the prolongation", "[bfs][assembly]") {
  for (Domain dom : {Domain::UnitSquare, Domain::LShape}) {
    auto coarse_mesh = build_mesh(dom, 4);
    auto fine_mesh = refine_uniform(coarse_mesh);
    auto coarse = build_space(coarse_mesh);
    auto fine = build_space(fine_mesh);
    const auto p2 = product_prolongation(prolongation(coarse, fine));

    const auto n = RefractionField::constant(16.0);
    ProductLayout lc(coarse), lf(fine);
    const auto ac = assemble_A(lc, n);
    const auto af = assemble_A(lf, n);
    const auto bc = assemble_B(lc, n);
    const auto bf = assemble_B(lf, n);

    const auto p2t = p2.transposed();
    const auto a_proj = p2t.matmul(af.matmul(p2));
    const auto b_proj = p2t.matmul(bf.matmul(p2));
    CHECK(a_proj.add_scaled(ac, -1.0).frobenius_norm() / ac.frobenius_norm() < 1e-10);
    CHECK(b_proj.add_scaled(bc, -1.0).frobenius_norm() / bc.frobenius_norm() < 1e-10);
  }
}
