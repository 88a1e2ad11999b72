#pragma once

// Experiment driving and reporting: run configuration (file or flags), the
// eigenvalue/error/order tables, CSV and SVG emission. Numbers are printed
// with 10 significant digits; identical configurations produce identical
// eigenvalue data (the wall-time column is the one nondeterministic field).

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tev/multigrid.hpp"

namespace tev {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
  Domain domain = Domain::UnitSquare;
  RefractionField refraction = RefractionField::constant(16.0);
  int coarse_divisions = 8;
  int levels = 1;
  int q = 1;
  cplx shift{2.0, 0.0};
  int quad_order = 6;
  double tol = 1e-10;
  int krylov_dim = 0;
  int max_restarts = 50;
  std::string out_dir = "tev_out";
  std::vector<cplx> reference;  // optional reference k values for error curves

  MultigridConfig multigrid() const {
    MultigridConfig m;
    m.domain = domain;
    m.refraction = refraction;
    m.coarse_divisions = coarse_divisions;
    m.levels = levels;
    m.q = q;
    m.sigma = shift;
    m.quad_order = quad_order;
    m.arnoldi.tol = tol;
    m.arnoldi.krylov_dim = krylov_dim;
    m.arnoldi.max_restarts = max_restarts;
    return m;
  }

  void validate() const {
    if (levels < 1) throw ConfigError("levels must be >= 1");
    if (q < 1) throw ConfigError("q must be >= 1");
    if (coarse_divisions < 1) throw ConfigError("coarse_div must be >= 1");
    if (quad_order < 1 || quad_order > 10) throw ConfigError("quad_order must be in [1, 10]");
    try {
      refraction.require_c1(domain);
    } catch (const RefractionError& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw ConfigError("invalid number '" + s + "' for key '" + key + "'");
  }
}

inline int parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw ConfigError("invalid integer '" + s + "' for key '" + key + "'");
  }
}

// Accepts "a", "a+bi", "a-bi", "bi".
inline cplx parse_complex(std::string s, const std::string& key) {
  s = trim(s);
  if (s.empty()) throw ConfigError("empty complex value for key '" + key + "'");
  if (s.back() == 'i' || s.back() == 'I') {
    s.pop_back();
    // Split at the last +/- that is not an exponent sign and not leading.
    std::size_t split = std::string::npos;
    for (std::size_t p = s.size(); p-- > 1;) {
      if ((s[p] == '+' || s[p] == '-') && s[p - 1] != 'e' && s[p - 1] != 'E') {
        split = p;
        break;
      }
    }
    if (split == std::string::npos) {
      return cplx(0.0, s.empty() || s == "+" ? 1.0 : (s == "-" ? -1.0 : parse_double(s, key)));
    }
    const std::string re = s.substr(0, split);
    std::string im = s.substr(split);
    if (im == "+") im = "1";
    if (im == "-") im = "-1";
    return cplx(parse_double(re, key), parse_double(im, key));
  }
  return cplx(parse_double(s, key), 0.0);
}

inline std::string fmt10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

/// Apply one key=value setting; unknown keys are rejected.
inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  const std::string v = detail::trim(value);
  if (key == "domain") {
    if (v == "unit_square" || v == "square") {
      cfg.domain = Domain::UnitSquare;
    } else if (v == "l_shape" || v == "lshape") {
      cfg.domain = Domain::LShape;
    } else {
      throw ConfigError("unknown domain '" + v + "' (use unit_square or l_shape)");
    }
  } else if (key == "n") {
    const auto parts = detail::split_ws(v);
    if (parts.size() == 4 && parts[0] == "affine") {
      cfg.refraction = RefractionField::affine(detail::parse_double(parts[1], key),
                                               detail::parse_double(parts[2], key),
                                               detail::parse_double(parts[3], key));
    } else if (parts.size() == 1) {
      cfg.refraction = RefractionField::constant(detail::parse_double(parts[0], key));
    } else {
      throw ConfigError("key 'n' expects '<const>' or 'affine <a> <b1> <b2>'");
    }
  } else if (key == "coarse_div") {
    cfg.coarse_divisions = detail::parse_int(v, key);
  } else if (key == "levels") {
    cfg.levels = detail::parse_int(v, key);
  } else if (key == "q") {
    cfg.q = detail::parse_int(v, key);
  } else if (key == "shift") {
    cfg.shift = detail::parse_complex(v, key);
  } else if (key == "shift_re") {
    cfg.shift = cplx(detail::parse_double(v, key), cfg.shift.imag());
  } else if (key == "shift_im") {
    cfg.shift = cplx(cfg.shift.real(), detail::parse_double(v, key));
  } else if (key == "quad_order") {
    cfg.quad_order = detail::parse_int(v, key);
  } else if (key == "tol") {
    cfg.tol = detail::parse_double(v, key);
  } else if (key == "krylov_dim") {
    cfg.krylov_dim = detail::parse_int(v, key);
  } else if (key == "max_restarts") {
    cfg.max_restarts = detail::parse_int(v, key);
  } else if (key == "out") {
    cfg.out_dir = v;
  } else if (key == "reference") {
    cfg.reference.clear();
    std::string item;
    std::istringstream is(v);
    while (std::getline(is, item, ',')) {
      item = detail::trim(item);
      if (!item.empty()) cfg.reference.push_back(detail::parse_complex(item, key));
    }
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

/// Parse `key = value` lines ('#' starts a comment). Whitespace-separated
/// `key=value` tokens on one line are also accepted.
inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + line + "'");
    apply_config_entry(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

/// Principal square root with nonnegative real part.
inline cplx principal_k(const cplx& lambda) {
  cplx k = std::sqrt(lambda);
  if (k.real() < 0.0 || (k.real() == 0.0 && k.imag() < 0.0)) k = -k;
  return k;
}

struct EigenRow {
  int level = 1;
  double h = 0.0;
  int j = 1;  // 1-based tracked index
  cplx k;
  double residual = 0.0;
  double seconds = 0.0;
};

struct ErrorRow {
  double h = 0.0;
  int j = 1;
  double abs_error = 0.0;
};

struct DiagnosticRow {
  int level = 1;
  double qb_min_diag = 0.0;
  double qb_max_offdiag = 0.0;
  double galerkin_residual = 0.0;
};

struct ReportBundle {
  std::vector<EigenRow> eigen_rows;
  std::vector<ErrorRow> error_rows;
  std::vector<std::pair<int, double>> orders;  // (j, slope)
  std::vector<DiagnosticRow> diagnostics;
  MultigridResult run;
};

/// Least-squares slope of log e against log h over the finest three points
/// with positive error. Throws when fewer than three are usable.
inline double convergence_order(std::vector<std::pair<double, double>> errors) {
  std::erase_if(errors, [](const auto& p) { return !(p.second > 0.0) || !(p.first > 0.0); });
  std::sort(errors.begin(), errors.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  if (errors.size() < 3) {
    throw ConfigError("convergence_order: need at least 3 levels with positive error");
  }
  const std::size_t n0 = errors.size() - 3;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = n0; i < errors.size(); ++i) {
    const double x = std::log(errors[i].first);
    const double y = std::log(errors[i].second);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = 3.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Run the configured experiment and build all tables.
inline ReportBundle run_experiment(const RunConfig& cfg) {
  cfg.validate();
  ReportBundle bundle;
  bundle.run = run_multigrid(cfg.multigrid());
  const auto& levels = bundle.run.levels;

  for (const auto& st : levels) {
    for (std::size_t j = 0; j < st.lambdas.size(); ++j) {
      EigenRow row;
      row.level = st.level;
      row.h = st.h;
      row.j = static_cast<int>(j) + 1;
      row.k = principal_k(st.lambdas[j]);
      row.residual = st.residuals[j];
      row.seconds = st.seconds;
      bundle.eigen_rows.push_back(row);
    }
    DiagnosticRow d;
    d.level = st.level;
    d.qb_min_diag = st.qb.min_diag;
    d.qb_max_offdiag = st.qb.max_offdiag;
    d.galerkin_residual = st.galerkin_residual;
    bundle.diagnostics.push_back(d);
  }

  // Error curves: per tracked eigenvalue against the reference (finest level
  // when none injected, excluding that level from the table).
  if (!levels.empty()) {
    const std::size_t ntrack = levels.front().lambdas.size();
    const bool external = !cfg.reference.empty();
    for (std::size_t j = 0; j < ntrack; ++j) {
      std::optional<cplx> ref;
      if (external) {
        if (j < cfg.reference.size()) ref = cfg.reference[j];
      } else if (levels.size() >= 2 && levels.back().lambdas.size() > j) {
        ref = principal_k(levels.back().lambdas[j]);
      }
      if (!ref) continue;
      std::vector<std::pair<double, double>> errs;
      for (std::size_t m = 0; m < levels.size(); ++m) {
        if (!external && m + 1 == levels.size()) break;  // Richardson: drop the reference level
        if (levels[m].lambdas.size() <= j) continue;
        const double e = std::abs(principal_k(levels[m].lambdas[j]) - *ref);
        if (e > 0.0) {
          bundle.error_rows.push_back({levels[m].h, static_cast<int>(j) + 1, e});
          errs.push_back({levels[m].h, e});
        }
      }
      try {
        bundle.orders.push_back({static_cast<int>(j) + 1, convergence_order(errs)});
      } catch (const ConfigError&) {
        // fewer than 3 usable levels: no order row for this eigenvalue
      }
    }
  }
  return bundle;
}

namespace detail {

inline void write_svg(const ReportBundle& bundle, const std::filesystem::path& path) {
  std::ofstream f(path);
  const int width = 640, height = 480, ml = 70, mr = 20, mt = 20, mb = 50;
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  f << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

  // Collect per-eigenvalue curves in log10 coordinates.
  std::vector<int> js;
  for (const auto& row : bundle.error_rows) {
    if (std::find(js.begin(), js.end(), row.j) == js.end()) js.push_back(row.j);
  }
  std::sort(js.begin(), js.end());
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& row : bundle.error_rows) {
    const double x = std::log10(row.h), y = std::log10(row.abs_error);
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (js.empty()) {
    xmin = -2;
    xmax = 0;
    ymin = -10;
    ymax = 0;
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

  f << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
    << height - mb << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
    << "\" stroke=\"black\"/>\n";
  f << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 14
    << "\" text-anchor=\"middle\" font-size=\"14\">log10(h)</text>\n";
  f << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
    << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
    << (mt + height - mb) / 2 << ")\">log10(error)</text>\n";

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  for (std::size_t ji = 0; ji < js.size(); ++ji) {
    const int j = js[ji];
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : bundle.error_rows) {
      if (row.j == j) pts.push_back({std::log10(row.h), std::log10(row.abs_error)});
    }
    std::sort(pts.begin(), pts.end());
    f << "<polyline fill=\"none\" stroke=\"" << kColors[ji % 8] << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : pts) f << fmt10(px(p.first)) << "," << fmt10(py(p.second)) << " ";
    f << "\"/>\n";
    for (const auto& p : pts) {
      f << "<circle cx=\"" << fmt10(px(p.first)) << "\" cy=\"" << fmt10(py(p.second))
        << "\" r=\"3\" fill=\"" << kColors[ji % 8] << "\"/>\n";
    }
    f << "<text x=\"" << width - mr - 60 << "\" y=\"" << mt + 16 + 16 * static_cast<int>(ji)
      << "\" font-size=\"13\" fill=\"" << kColors[ji % 8] << "\">k_" << j << "</text>\n";
  }
  f << "</svg>\n";
}

}  // namespace detail

/// Write eigenvalues.csv, errors.csv, orders.csv, diagnostics.csv and
/// errors_loglog.svg into `dir`.
inline void emit_outputs(const ReportBundle& bundle, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto check = [&](const std::ofstream& f, const char* name) {
    if (!f) throw std::runtime_error(std::string("emit_outputs: cannot write ") + name + " in " + dir);
  };
  {
    std::ofstream f(fs::path(dir) / "eigenvalues.csv");
    check(f, "eigenvalues.csv");
    f << "level,h,j,k_re,k_im,residual,seconds\n";
    for (const auto& r : bundle.eigen_rows) {
      f << r.level << "," << detail::fmt10(r.h) << "," << r.j << "," << detail::fmt10(r.k.real())
        << "," << detail::fmt10(r.k.imag()) << "," << detail::fmt10(r.residual) << ","
        << detail::fmt10(r.seconds) << "\n";
    }
  }
  {
    std::ofstream f(fs::path(dir) / "errors.csv");
    check(f, "errors.csv");
    f << "h,j,abs_error\n";
    for (const auto& r : bundle.error_rows) {
      f << detail::fmt10(r.h) << "," << r.j << "," << detail::fmt10(r.abs_error) << "\n";
    }
  }
  {
    std::ofstream f(fs::path(dir) / "orders.csv");
    check(f, "orders.csv");
    f << "j,slope\n";
    for (const auto& [j, slope] : bundle.orders) {
      f << j << "," << detail::fmt10(slope) << "\n";
    }
  }
  {
    std::ofstream f(fs::path(dir) / "diagnostics.csv");
    check(f, "diagnostics.csv");
    f << "level,qb_min_diag,qb_max_offdiag,galerkin_residual\n";
    for (const auto& d : bundle.diagnostics) {
      f << d.level << "," << detail::fmt10(d.qb_min_diag) << "," << detail::fmt10(d.qb_max_offdiag)
        << "," << detail::fmt10(d.galerkin_residual) << "\n";
    }
  }
  detail::write_svg(bundle, fs::path(dir) / "errors_loglog.svg");
}

}  // namespace tev
