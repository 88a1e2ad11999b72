// tev: transmission eigenvalues by a multigrid-corrected C1 finite element
// method. `tev run` drives one experiment and writes the CSV/SVG tables.

#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tev/report.hpp"

namespace {

int run_command(const std::string& config_path, const std::vector<std::string>& overrides) {
  tev::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = tev::parse_config_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw tev::ConfigError("override needs key=value: " + kv);
      tev::apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  }

  tev::ReportBundle bundle;
  try {
    bundle = tev::run_experiment(cfg);
    tev::emit_outputs(bundle, cfg.out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 2;
  }
  if (!bundle.run.ok) {
    std::fprintf(stderr, "solver error: %s\n", bundle.run.error.c_str());
    std::fprintf(stderr, "partial results for %zu level(s) written to %s\n",
                 bundle.run.levels.size(), cfg.out_dir.c_str());
    return 2;
  }

  std::printf("# level        h      j            k            residual   seconds\n");
  for (const auto& r : bundle.eigen_rows) {
    std::printf("%7d %12.10g %4d %14.10f %+.10fi %9.2e %9.3f\n", r.level, r.h, r.j, r.k.real(),
                r.k.imag(), r.residual, r.seconds);
  }
  for (const auto& [j, slope] : bundle.orders) {
    std::printf("# fitted convergence order for k_%d: %.3f\n", j, slope);
  }
  std::printf("# outputs written to %s\n", cfg.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transmission eigenvalue solver (multigrid-corrected BFS elements)"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one experiment and write report tables");
  std::string config_path;
  std::string domain, n_const, out_dir, reference;
  std::vector<double> n_affine;
  int coarse_div = -1, levels = -1, q = -1, quad_order = -1, krylov_dim = -1, max_restarts = -1;
  double shift_re = 0.0, shift_im = 0.0, tol = -1.0;
  bool has_shift_re = false, has_shift_im = false;

  run->add_option("--config", config_path, "configuration file (key = value lines)");
  run->add_option("--domain", domain, "unit_square or l_shape");
  run->add_option("--n", n_const, "constant index of refraction");
  run->add_option("--n-affine", n_affine, "affine index a b1 b2 (n = a + b1 x1 + b2 x2)")
      ->expected(3);
  run->add_option("--coarse-div", coarse_div, "coarse cells per unit length");
  run->add_option("--levels", levels, "number of mesh levels");
  run->add_option("--q", q, "number of tracked eigenvalues");
  run->add_option("--shift-re", shift_re, "real part of the spectral shift")
      ->each([&](const std::string&) { has_shift_re = true; });
  run->add_option("--shift-im", shift_im, "imaginary part of the spectral shift")
      ->each([&](const std::string&) { has_shift_im = true; });
  run->add_option("--quad-order", quad_order, "Gauss points per direction (default 5)");
  run->add_option("--tol", tol, "eigensolver residual tolerance");
  run->add_option("--krylov-dim", krylov_dim, "Krylov subspace dimension");
  run->add_option("--max-restarts", max_restarts, "maximum Arnoldi restarts");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--reference", reference, "comma-separated reference k values");

  CLI11_PARSE(app, argc, argv);

  std::vector<std::string> overrides;
  if (!domain.empty()) overrides.push_back("domain=" + domain);
  if (!n_const.empty()) overrides.push_back("n=" + n_const);
  if (!n_affine.empty()) {
    overrides.push_back("n=affine " + std::to_string(n_affine[0]) + " " +
                        std::to_string(n_affine[1]) + " " + std::to_string(n_affine[2]));
  }
  if (coarse_div >= 0) overrides.push_back("coarse_div=" + std::to_string(coarse_div));
  if (levels >= 0) overrides.push_back("levels=" + std::to_string(levels));
  if (q >= 0) overrides.push_back("q=" + std::to_string(q));
  if (has_shift_re) overrides.push_back("shift_re=" + std::to_string(shift_re));
  if (has_shift_im) overrides.push_back("shift_im=" + std::to_string(shift_im));
  if (quad_order >= 0) overrides.push_back("quad_order=" + std::to_string(quad_order));
  if (tol >= 0) overrides.push_back("tol=" + std::to_string(tol));
  if (krylov_dim >= 0) overrides.push_back("krylov_dim=" + std::to_string(krylov_dim));
  if (max_restarts >= 0) overrides.push_back("max_restarts=" + std::to_string(max_restarts));
  if (!out_dir.empty()) overrides.push_back("out=" + out_dir);
  if (!reference.empty()) overrides.push_back("reference=" + reference);

  return run_command(config_path, overrides);
}
