// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failing criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tev/arnoldi.hpp"
#include "tev/assembly.hpp"
#include "tev/multigrid.hpp"
#include "tev/report.hpp"

using namespace tev;

namespace {

struct Harness {
  int failures = 0;

  void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
};


std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double k_of(const LevelState& st, int j) { return principal_k(st.lambdas[j]).real(); }

}  // namespace

int main() {
  Harness h;

  // ------------------------------------------------------------------ 1
  // Reference regression: n = 16, unit square, H = sqrt(2)/8, sigma = 3.
  MultigridConfig c1;
  c1.domain = Domain::UnitSquare;
  c1.refraction = RefractionField::constant(16.0);
  c1.coarse_divisions = 8;
  c1.levels = 4;
  c1.q = 4;
  c1.sigma = cplx(3.0, 0.0);
  const auto t1_start = std::chrono::steady_clock::now();
  const auto run1 = run_multigrid(c1);
  const double run1_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t1_start).count();
  {
    const double k1_ref[4] = {1.880051827, 1.879621633, 1.879593109, 1.879591295};
    const double k23_ref[4] = {2.446255515, 2.444371226, 2.444244719, 2.444236640};
    const double k4_ref[4] = {2.868193148, 2.866560541, 2.866446979, 2.866439605};
    bool pass = run1.ok && run1.levels.size() == 4;
    std::ostringstream detail;
    if (pass) {
      double worst1 = 0, worst23 = 0, worst4 = 0;
      for (int m = 0; m < 4; ++m) {
        const auto& st = run1.levels[m];
        worst1 = std::max(worst1, std::abs(k_of(st, 0) - k1_ref[m]) / k1_ref[m]);
        worst23 = std::max(worst23, std::abs(k_of(st, 1) - k23_ref[m]) / k23_ref[m]);
        worst23 = std::max(worst23, std::abs(k_of(st, 2) - k23_ref[m]) / k23_ref[m]);
        worst4 = std::max(worst4, std::abs(k_of(st, 3) - k4_ref[m]) / k4_ref[m]);
      }
      pass = worst1 <= 1e-5 && worst23 <= 1e-4 && worst4 <= 1e-4 && run1_seconds <= 60.0;
      detail << "max rel err: k1 " << fmt(worst1) << ", k2/k3 " << fmt(worst23) << ", k4 "
             << fmt(worst4) << "; runtime " << fmt(run1_seconds) << " s (budget 60 s)";
    } else {
      detail << "run failed: " << run1.error;
    }
    h.report(1, "n=16 unit-square regression, levels 1-4", pass, detail.str());
  }

  // ------------------------------------------------------------------ 2
  // Complex-pair regression: n = 4, H = sqrt(2)/16, N = 3.
  MultigridConfig c2;
  c2.domain = Domain::UnitSquare;
  c2.refraction = RefractionField::constant(4.0);
  c2.coarse_divisions = 16;
  c2.levels = 3;
  c2.q = 2;
  c2.sigma = cplx(17.0, 10.0);
  const auto run2 = run_multigrid(c2);
  {
    bool pass = run2.ok && run2.levels.size() == 3;
    std::ostringstream detail;
    if (pass) {
      const auto& st = run2.levels.back();
      cplx ka = principal_k(st.lambdas[0]);
      cplx kb = principal_k(st.lambdas[1]);
      if (ka.imag() < 0) std::swap(ka, kb);
      const double re_err = std::abs(ka.real() - 4.271696373) / 4.271696373;
      const double im_err = std::abs(ka.imag() - 1.147433642) / 1.147433642;
      const double conj_err = std::abs(ka - std::conj(kb));
      pass = re_err <= 1e-4 && im_err <= 1e-4 && conj_err <= 1e-8;
      detail << "k = " << fmt(ka.real()) << " + " << fmt(ka.imag()) << "i; rel err re "
             << fmt(re_err) << ", im " << fmt(im_err) << "; conjugation defect " << fmt(conj_err);
    } else {
      detail << "run failed: " << run2.error;
    }
    h.report(2, "complex pair (n=4, h=sqrt(2)/64)", pass, detail.str());
  }

  // ------------------------------------------------------------------ 3
  // Variable coefficient n = 8 + x1 - x2 on the unit square.
  MultigridConfig c3;
  c3.domain = Domain::UnitSquare;
  c3.refraction = RefractionField::affine(8.0, 1.0, -1.0);
  c3.coarse_divisions = 8;
  c3.levels = 3;
  c3.q = 2;
  c3.sigma = cplx(8.0, 0.0);
  const auto run3a = run_multigrid(c3);
  c3.q = 2;
  c3.sigma = cplx(19.5, 7.8);
  const auto run3b = run_multigrid(c3);
  {
    bool pass = run3a.ok && run3b.ok;
    std::ostringstream detail;
    if (pass) {
      const double k1 = k_of(run3a.levels.back(), 0);
      const double k1_err = std::abs(k1 - 2.822194508) / 2.822194508;
      cplx kp = principal_k(run3b.levels.back().lambdas[0]);
      if (kp.imag() < 0) kp = std::conj(kp);
      const double re_err = std::abs(kp.real() - 4.4965518150) / 4.4965518150;
      const double im_err = std::abs(kp.imag() - 0.8714987351) / 0.8714987351;
      pass = k1_err <= 1e-4 && re_err <= 1e-3 && im_err <= 1e-3;
      detail << "k1 rel err " << fmt(k1_err) << "; pair rel err re " << fmt(re_err) << ", im "
             << fmt(im_err);
    } else {
      detail << "run failed: " << (run3a.ok ? run3b.error : run3a.error);
    }
    h.report(3, "variable coefficient (n=8+x1-x2, h=sqrt(2)/32)", pass, detail.str());
  }

  // ------------------------------------------------------------------ 4
  // L-shape regression: n = 16, H = sqrt(2)/8, N = 4.
  MultigridConfig c4;
  c4.domain = Domain::LShape;
  c4.refraction = RefractionField::constant(16.0);
  c4.coarse_divisions = 8;
  c4.levels = 4;
  c4.q = 4;
  c4.sigma = cplx(2.0, 0.0);
  const auto run4 = run_multigrid(c4);
  {
    bool pass = run4.ok && run4.levels.size() == 4;
    std::ostringstream detail;
    if (pass) {
      const double k1 = k_of(run4.levels.back(), 0);
      const double k2 = k_of(run4.levels.back(), 1);
      const double e1 = std::abs(k1 - 1.4770116) / 1.4770116;
      const double e2 = std::abs(k2 - 1.5697385) / 1.5697385;
      pass = e1 <= 1e-4 && e2 <= 1e-4;
      detail << "k1 rel err " << fmt(e1) << ", k2 rel err " << fmt(e2);
    } else {
      detail << "run failed: " << run4.error;
    }
    h.report(4, "L-shape regression (n=16, h=sqrt(2)/64)", pass, detail.str());
  }

  // ------------------------------------------------------------------ 5
  // Convergence orders from the runs above (Richardson reference).
  {
    bool pass = run1.ok && run4.ok;
    std::ostringstream detail;
    if (pass) {
      std::vector<std::pair<double, double>> errs_sq, errs_ls;
      for (int m = 0; m + 1 < 4; ++m) {
        errs_sq.push_back({run1.levels[m].h,
                           std::abs(k_of(run1.levels[m], 0) - k_of(run1.levels[3], 0))});
        errs_ls.push_back({run4.levels[m].h,
                           std::abs(k_of(run4.levels[m], 0) - k_of(run4.levels[3], 0))});
      }
      const double slope_sq = convergence_order(errs_sq);
      const double slope_ls = convergence_order(errs_ls);
      pass = slope_sq >= 3.7 && slope_sq <= 4.3 && slope_ls < 2.0;
      detail << "unit square slope " << fmt(slope_sq) << " (want [3.7, 4.3]); L-shape slope "
             << fmt(slope_ls) << " (want < 2)";
    } else {
      detail << "prerequisite runs failed";
    }
    h.report(5, "convergence orders", pass, detail.str());
  }

  // ------------------------------------------------------------------ 6
  // Multigrid matches the direct solve on every level of run 1.
  {
    bool pass = run1.ok;
    std::ostringstream detail;
    if (pass) {
      ArnoldiOptions direct_opt;
      direct_opt.tol = 1e-8;  // conditioning bounds the attainable residual on fine meshes
      double worst = 0.0;
      double direct_seconds = 0.0;
      auto mesh = build_mesh(Domain::UnitSquare, 8);
      for (int m = 0; m < 4; ++m) {
        if (m > 0) mesh = refine_uniform(mesh);
        const auto space = build_space(mesh);
        ProductLayout layout(space);
        const auto pencil = assemble_pencil(layout, c1.refraction);
        const auto td = std::chrono::steady_clock::now();
        const auto direct = arnoldi_shift_invert(pencil.A, pencil.B, c1.sigma, 4, direct_opt);
        direct_seconds +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - td).count();
        for (int j = 0; j < 4; ++j) {
          const double km = k_of(run1.levels[m], j);
          const double kd = principal_k(direct.values[j]).real();
          worst = std::max(worst, std::abs(km - kd) / std::abs(kd));
        }
      }
      pass = worst <= 1e-5;
      detail << "max |k_mg - k_direct|/|k_direct| = " << fmt(worst) << "; multigrid path "
             << fmt(run1_seconds) << " s vs direct fine-grid path " << fmt(direct_seconds)
             << " s (logged comparison)";
    } else {
      detail << "prerequisite run failed";
    }
    h.report(6, "multigrid matches the direct solve per level", pass, detail.str());
  }

  // ------------------------------------------------------------------ 7
  // Oracle equivalence on the small pencil; primal/dual spectra coincide.
  {
    const auto space = build_space(build_mesh(Domain::UnitSquare, 4));
    ProductLayout layout(space);
    const auto pencil = assemble_pencil(layout, RefractionField::constant(16.0));
    const int dim = pencil.A.rows();
    Matrix<cplx> ad(dim, dim), bd(dim, dim);
    const auto adense = pencil.A.to_dense();
    const auto bdense = pencil.B.to_dense();
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        ad(i, j) = adense[i][j];
        bd(i, j) = bdense[i][j];
      }
    const auto dense = dense_pencil_eig(ad, bd);
    const auto krylov = arnoldi_shift_invert(pencil.A, pencil.B, cplx(3.0, 0.0), 4);
    bool pass = krylov.size() == 4;
    double worst_oracle = 0.0, worst_dual = 0.0;
    if (pass) {
      for (std::size_t i = 0; i < 4; ++i) {
        double best = 1e300;
        for (const auto& v : dense.values) best = std::min(best, std::abs(krylov.values[i] - v));
        worst_oracle = std::max(worst_oracle, best / (1.0 + std::abs(krylov.values[i])));
      }
      // Dual spectrum: an independent run on the transposed pencil.
      const auto at = pencil.A.transposed();
      const auto bt = pencil.B.transposed();
      const auto left = arnoldi_shift_invert(at, bt, cplx(3.0, 0.0), 4);
      for (std::size_t i = 0; i < 4 && i < left.size(); ++i) {
        double best = 1e300;
        for (const auto& v : krylov.values)
          best = std::min(best, std::abs(std::conj(left.values[i]) - v));
        worst_dual = std::max(worst_dual, best / (1.0 + std::abs(left.values[i])));
      }
      pass = worst_oracle <= 1e-8 && worst_dual <= 1e-8;
    }
    std::ostringstream detail;
    detail << "rel gap to dense oracle " << fmt(worst_oracle) << "; primal vs dual spectrum gap "
           << fmt(worst_dual);
    h.report(7, "shift-invert Arnoldi vs dense oracle on (UnitSquare, 4)", pass, detail.str());
  }

  // ------------------------------------------------------------------ 8
  // Property suites.
  {
    std::ostringstream detail;
    bool pass = true;

    // Galerkin identity on nested meshes, constant n.
    {
      auto coarse_mesh = build_mesh(Domain::UnitSquare, 8);
      auto fine_mesh = refine_uniform(coarse_mesh);
      auto coarse = build_space(coarse_mesh);
      auto fine = build_space(fine_mesh);
      const auto p2 = product_prolongation(prolongation(coarse, fine));
      const auto n = RefractionField::constant(16.0);
      ProductLayout lc(coarse), lf(fine);
      const auto ah = assemble_A(lf, n);
      const auto ac = assemble_A(lc, n);
      const auto bh = assemble_B(lf, n);
      const auto bc = assemble_B(lc, n);
      const auto p2t = p2.transposed();
      const double ga =
          p2t.matmul(ah.matmul(p2)).add_scaled(ac, -1.0).frobenius_norm() / ac.frobenius_norm();
      const double gb =
          p2t.matmul(bh.matmul(p2)).add_scaled(bc, -1.0).frobenius_norm() / bc.frobenius_norm();
      if (ga > 1e-10 || gb > 1e-10) pass = false;
      detail << "galerkin A " << fmt(ga) << ", B " << fmt(gb);
    }

    // C1 continuity and bicubic reproduction at 1e-12.
    {
      auto mesh = build_mesh(Domain::UnitSquare, 4);
      auto space = build_space(mesh);
      std::mt19937 rng(101);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<double> coeffs(space.n_free);
      for (auto& v : coeffs) v = u(rng);
      auto eval_on_cell = [&](int cell, Vec2 p, Deriv d) {
        const Vec2 o = mesh->cell_origin(cell);
        const double s = mesh->cell_side;
        double acc = 0.0;
        for (int corner = 0; corner < 4; ++corner) {
          const int node = mesh->cells[cell][corner];
          for (int t = 0; t < 4; ++t) {
            const int gd = space.dof(node, t);
            if (gd == kConstrained) continue;
            acc += coeffs[gd] *
                   element_eval(s, 4 * corner + t, (p.x - o.x) / s, (p.y - o.y) / s, d);
          }
        }
        return acc;
      };
      double c1_defect = 0.0;
      std::uniform_real_distribution<double> tpos(0.0, 1.0);
      for (int trial = 0; trial < 10; ++trial) {
        const Vec2 p{0.5, 0.25 + 0.25 * tpos(rng)};
        const int left = mesh->cell_id(1, 1), right = mesh->cell_id(2, 1);
        c1_defect = std::max(c1_defect, std::abs(eval_on_cell(left, p, Deriv::Val) -
                                                 eval_on_cell(right, p, Deriv::Val)));
        c1_defect = std::max(c1_defect, std::abs(eval_on_cell(left, p, Deriv::Dx) -
                                                 eval_on_cell(right, p, Deriv::Dx)));
      }
      double cubic_defect = 0.0;
      {
        const double s = 0.5, x0 = 0.25, y0 = 0.125;
        const double cx[4] = {x0, x0 + s, x0 + s, x0};
        const double cy[4] = {y0, y0, y0 + s, y0 + s};
        double cc[16];
        for (int c = 0; c < 4; ++c) {
          cc[4 * c + 0] = cx[c] * cx[c] * cx[c] * cy[c] * cy[c] * cy[c];
          cc[4 * c + 1] = 3 * cx[c] * cx[c] * cy[c] * cy[c] * cy[c];
          cc[4 * c + 2] = 3 * cx[c] * cx[c] * cx[c] * cy[c] * cy[c];
          cc[4 * c + 3] = 9 * cx[c] * cx[c] * cy[c] * cy[c];
        }
        for (int trial = 0; trial < 20; ++trial) {
          const double xi = tpos(rng), eta = tpos(rng);
          double val = 0.0;
          for (int d = 0; d < 16; ++d) val += cc[d] * element_eval(s, d, xi, eta, Deriv::Val);
          const double px = x0 + s * xi, py = y0 + s * eta;
          cubic_defect = std::max(cubic_defect, std::abs(val - px * px * px * py * py * py));
        }
      }
      if (c1_defect > 1e-12 || cubic_defect > 1e-12) pass = false;
      detail << "; C1 defect " << fmt(c1_defect) << ", bicubic defect " << fmt(cubic_defect);
    }

    // Affine-n B assembly against the order-10 quadrature oracle.
    {
      auto space = build_space(build_mesh(Domain::UnitSquare, 2));
      ProductLayout layout(space);
      const auto n = RefractionField::affine(8.0, 1.0, -1.0);
      const auto bdef = assemble_B(layout, n).to_dense();
      const auto b10m = assemble_B(layout, n, 10);
      const auto b10 = b10m.to_dense();
      const double scale = b10m.max_abs();
      double worst = 0.0;
      for (std::size_t i = 0; i < bdef.size(); ++i)
        for (std::size_t j = 0; j < bdef.size(); ++j) {
          const double err = std::abs(bdef[i][j] - b10[i][j]);
          worst = std::max(worst, err / std::max(std::abs(b10[i][j]), 1e-6 * scale));
        }
      if (worst > 1e-10) pass = false;
      detail << "; B quadrature-oracle rel err " << fmt(worst);
    }

    // a_normalize scale and phase invariance.
    {
      const auto space = build_space(build_mesh(Domain::UnitSquare, 2));
      ProductLayout layout(space);
      const auto a = assemble_A(layout, RefractionField::constant(16.0));
      std::mt19937 rng(77);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<cplx> x(a.rows());
      for (auto& v : x) v = cplx(u(rng), u(rng));
      const auto base = a_normalize(x, a);
      auto scaled = x;
      for (auto& v : scaled) v *= 2.0;
      auto rotated = x;
      const cplx ph = std::polar(1.0, 1.2345);
      for (auto& v : rotated) v *= ph;
      const auto s2 = a_normalize(scaled, a);
      const auto r2 = a_normalize(rotated, a);
      double defect = 0.0;
      for (std::size_t i = 0; i < base.size(); ++i) {
        defect = std::max(defect, std::abs(s2[i] - base[i]));
        defect = std::max(defect, std::abs(r2[i] - base[i]));
      }
      if (defect > 1e-12) pass = false;
      detail << "; a_normalize invariance defect " << fmt(defect);
    }

    // Quasi-biorthogonality diagonal scores across the four regression runs.
    {
      double min_diag = 1e300;
      for (const auto* run : {&run1, &run2, &run3a, &run3b, &run4}) {
        if (!run->ok) continue;
        for (const auto& st : run->levels) min_diag = std::min(min_diag, st.qb.min_diag);
      }
      if (!(min_diag > 1e-3)) pass = false;
      detail << "; min primal-dual diagonal pairing " << fmt(min_diag);
    }

    h.report(8, "property suites", pass, detail.str());
  }

  std::printf("%d of 8 criteria passed\n", 8 - h.failures);
  return h.failures;
}
