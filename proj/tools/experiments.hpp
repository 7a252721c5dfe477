#pragma once

// Experiment kinds of the command-line runner. prepare() reads and checks the
// whole config and returns a Plan; nothing is computed until Plan::run.

#include <boost/version.hpp>
#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "nevlab/expr.hpp"
#include "nevlab/nevanlinna.hpp"
#include "nevlab/nevconst.hpp"
#include "nevlab/smt.hpp"
#include "nevlab/stochastic.hpp"
#include "svg.hpp"
#include "table.hpp"

namespace nevlab::cli {

inline constexpr const char* version = "1.0.0";

struct Assertion {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct Outputs {
  json results = json::object();
  std::vector<std::pair<std::string, Table>> tables;
  std::vector<std::pair<std::string, std::string>> plots;  ///< file stem, SVG text
  std::vector<Assertion> assertions;
  json rng = json::object();

  void plot(const std::string& stem, const std::string& table, PlotSpec spec) {
    for (const auto& [name, t] : tables)
      if (name == table) {
        plots.emplace_back(stem, plot_svg(t, spec));
        return;
      }
    throw Error("no table named " + table);
  }
  void check(std::string name, bool pass, std::string detail) {
    assertions.push_back({std::move(name), pass, std::move(detail)});
  }
};

struct Plan {
  std::string experiment;
  std::string name;
  std::string output;
  json resolved;
  std::function<Outputs()> run;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"fmt", "ldl", "calculus", "cartan", "smt", "nev", "mc-validate",
                                                 "surface-validate"};
  return kinds;
}

// ---------------------------------------------------------------------------
// Shared pieces of the schema

inline SurfaceModel read_surface(Obj& top) {
  return top.object("surface", [](Obj& s) {
    const auto kind = s.choice("kind", {"euclidean", "poincare", "custom"}, "euclidean");
    if (kind == "euclidean") return SurfaceModel(MetricProfile::euclidean());
    if (kind == "poincare") {
      const double a = s.number("a", 1.0);
      if (!(a > 0.0)) s.fail_at("a", "poincare curvature parameter must be positive");
      return SurfaceModel(MetricProfile::poincare(a));
    }
    const json& table = s.array("table");
    std::vector<std::pair<double, double>> samples;
    for (std::size_t k = 0; k < table.size(); ++k) {
      const auto& p = table[k];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        s.fail_at("table", "entry " + std::to_string(k) + " must be a [rho_e, h] pair of numbers");
      samples.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    try {
      return SurfaceModel(MetricProfile::from_table(samples));
    } catch (const Error& e) {
      s.fail_at("table", e.what());
    }
  });
}

inline RGrid read_grid(Obj& top, const SurfaceModel& surface) {
  return top.object(
      "grid",
      [&](Obj& g) {
        const double lo = g.number("min");
        const double hi = g.number("max");
        const auto count = g.integer("count", 20);
        const auto spacing = g.choice("spacing", {"log", "linear"}, "log");
        if (count < 1 || count > 10000) g.fail_at("count", "grid count must be between 1 and 10000");
        if (!(lo > 0.0) || !(hi >= lo)) g.fail("grid needs 0 < min <= max");
        RGrid grid = spacing == "log" ? RGrid::log_spaced(lo, hi, int(count)) : RGrid::linear(lo, hi, int(count));
        try {
          grid.validate(surface);
        } catch (const Error& e) {
          g.fail(e.what());
        }
        return grid;
      },
      true);
}

inline QuadSettings read_quadrature(Obj& top) {
  return top.object("tolerances", [](Obj& t) {
    QuadSettings q;
    q.boundary_tol = t.number("boundary", q.boundary_tol);
    q.radial_tol = t.number("radial", q.radial_tol);
    q.angular_tol = t.number("angular", q.angular_tol);
    if (!(q.boundary_tol > 0) || !(q.radial_tol > 0) || !(q.angular_tol > 0)) t.fail("tolerances must be positive");
    return q;
  });
}

inline PathPolicy read_policy(Obj& top) {
  return top.object("policy", [](Obj& p) {
    PathPolicy pol;
    pol.seed = static_cast<std::uint64_t>(p.integer("seed", static_cast<long long>(pol.seed)));
    pol.n_paths = static_cast<std::size_t>(p.integer("n_paths", static_cast<long long>(pol.n_paths)));
    pol.batches = static_cast<std::size_t>(p.integer("batches", static_cast<long long>(pol.batches)));
    pol.base_step = p.number("base_step", pol.base_step);
    pol.shrink = p.number("shrink", pol.shrink);
    pol.floor_step = p.number("floor_step", pol.floor_step);
    pol.max_steps = static_cast<std::uint64_t>(p.integer("max_steps", static_cast<long long>(pol.max_steps)));
    pol.antithetic = p.boolean("antithetic", pol.antithetic);
    try {
      pol.validate();
    } catch (const Error& e) {
      p.fail(e.what());
    }
    return pol;
  });
}

inline ProjectiveCurve read_curve(Obj& top, const std::string& key = "curve") {
  const json& arr = top.array(key);
  std::vector<HoloExpr> comps;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string ptr = top.child(key) + "/" + std::to_string(k);
    if (!arr[k].is_string()) throw ConfigError(top.doc().where(ptr) + ": curve components must be strings");
    comps.push_back(top.expression(ptr, arr[k].get<std::string>(), [](const std::string& s) { return expr::parse_holo(s); }));
  }
  try {
    return ProjectiveCurve(std::move(comps));
  } catch (const Error& e) {
    top.fail_at(key, e.what());
  }
}

inline HomogeneousPoly read_form(const Obj& o, const std::string& ptr, const json& v, int n) {
  if (!v.is_string()) throw ConfigError(o.doc().where(ptr) + ": polynomials must be strings in w0..w" + std::to_string(n));
  return o.expression(ptr, v.get<std::string>(), [n](const std::string& s) { return expr::parse_homogeneous(s, n); });
}

/// Divisor entries are either "poly" strings or {"poly": ..., "mult": ...}.
inline DivisorSum read_divisor(Obj& top, int n, const std::string& key = "divisor") {
  const json& arr = top.array(key);
  std::vector<DivisorComponent> comps;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string ptr = top.child(key) + "/" + std::to_string(k);
    if (arr[k].is_object()) {
      Obj c(top.doc(), arr[k], ptr);
      const json& poly = c.raw("poly");
      const auto mult = c.integer("mult", 1);
      if (mult < 1) c.fail_at("mult", "multiplicities must be positive");
      comps.push_back({read_form(c, ptr + "/poly", poly, n), static_cast<int>(mult)});
      c.finish();
    } else {
      comps.push_back({read_form(top, ptr, arr[k], n), 1});
    }
  }
  try {
    return DivisorSum(std::move(comps));
  } catch (const Error& e) {
    top.fail_at(key, e.what());
  }
}

/// Non-negative real functions on the surface.
struct SurfaceFnSpec {
  std::string label;
  SurfaceFn fn;
};

inline SurfaceFnSpec read_surface_fn(Obj& o) {
  const auto kind = o.choice("kind", {"const", "abs2", "fs"});
  if (kind == "const") {
    const double v = o.number("value", 1.0);
    if (!(v >= 0.0)) o.fail_at("value", "constant must be non-negative");
    return {"const(" + fmt_num(v) + ")", [v](cplx) { return v; }};
  }
  if (kind == "abs2") {
    const auto src = o.string("expr");
    auto g = o.expression(o.child("expr"), src, [](const std::string& s) { return expr::parse_holo(s); });
    return {"|" + src + "|^2", [g](cplx z) {
              const auto v = g(z);
              return std::norm(v.value());
            }};
  }
  auto curve = read_curve(o);
  std::string label = "fs[";
  for (std::size_t k = 0; k < o.resolved()["curve"].size(); ++k)
    label += (k ? ":" : "") + o.resolved()["curve"][k].get<std::string>();
  return {label + "]", [curve](cplx z) { return fs_density(curve, z); }};
}

inline double grid_resolution(const RGrid& g) {
  double w = 0.0;
  for (std::size_t i = 1; i < g.radii.size(); ++i) w = std::max(w, g.radii[i] - g.radii[i - 1]);
  return w;
}

// ---------------------------------------------------------------------------
// Reporting helpers

inline json trace_json(const InequalityTrace& tr) {
  json rows = json::array();
  for (const auto& r : tr.rows) {
    json row = {{"r", r.r},           {"T", r.T},         {"lhs", r.lhs},
                {"main", r.main},     {"log_t", r.log_t}, {"curvature", r.curvature},
                {"loglog", r.loglog}, {"rhs", r.rhs},     {"margin", r.margin},
                {"ratio", r.ratio},   {"allowance", r.allowance}, {"flagged", r.flagged},
                {"ok", r.ok()}};
    if (r.flagged) row["reason"] = r.reason;
    for (const auto& [k, v] : r.extra) row[k] = v;
    rows.push_back(std::move(row));
  }
  return {{"name", tr.name},
          {"all_ok", tr.all_ok()},
          {"flagged_measure", tr.flagged_measure},
          {"rows", std::move(rows)}};
}

inline Table trace_table(const InequalityTrace& tr) {
  Table t;
  t.columns = {"r", "T", "lhs", "main", "log_t", "curvature", "loglog", "rhs", "margin", "ratio", "allowance", "flagged",
               "ok", "reason"};
  if (!tr.rows.empty())
    for (const auto& [k, v] : tr.rows[0].extra) t.columns.push_back(k);
  for (const auto& r : tr.rows) {
    std::vector<std::string> row = {fmt_num(r.r),      fmt_num(r.T),       fmt_num(r.lhs),    fmt_num(r.main),
                                    fmt_num(r.log_t),  fmt_num(r.curvature), fmt_num(r.loglog), fmt_num(r.rhs),
                                    fmt_num(r.margin), fmt_num(r.ratio),   fmt_num(r.allowance),
                                    r.flagged ? "1" : "0", r.ok() ? "1" : "0", r.reason};
    for (const auto& [k, v] : r.extra) row.push_back(fmt_num(v));
    t.add(std::move(row));
  }
  return t;
}

inline std::string first_failure(const InequalityTrace& tr) {
  for (const auto& r : tr.rows)
    if (!r.ok())
      return "r=" + fmt_num(r.r) + ": margin " + fmt_num(r.margin) + " < -allowance " + fmt_num(-r.allowance);
  return "all unflagged rows within allowance";
}

inline void add_trace(Outputs& out, const InequalityTrace& tr, const std::string& label) {
  out.results[label] = trace_json(tr);
  out.tables.emplace_back(label, trace_table(tr));
  out.check(label + ".margins", tr.all_ok(), first_failure(tr));
}

inline std::string rat(const Rational& q) {
  std::ostringstream os;
  os << q;
  return os.str();
}

inline json certificate_json(const NevCertificate& c, const DivisorSum& D) {
  json entries = json::array();
  for (const auto& e : c.entries)
    entries.push_back({{"stratum", detail::key_string(e.stratum, D)},
                       {"component", D.components()[e.component].poly.to_string()},
                       {"order_sum", rat(e.order_sum)},
                       {"required", rat(e.required)},
                       {"margin", rat(e.margin)},
                       {"pass", e.pass}});
  json j = {{"pass", c.pass}, {"dim_V", c.dim_V}, {"mu", rat(c.mu)}, {"bound", rat(c.bound)}, {"entries", entries}};
  if (!c.failure.empty()) j["failure"] = c.failure;
  return j;
}

// ---------------------------------------------------------------------------
// Experiments

inline std::function<Outputs()> plan_fmt(Obj& top, const SurfaceModel& surface, const std::string& engine) {
  auto curve = read_curve(top);
  const int n = static_cast<int>(curve.dimension());
  auto D = read_divisor(top, n);
  auto grid = read_grid(top, surface);
  auto q = read_quadrature(top);
  const bool mc = engine != "quadrature";
  std::optional<PathPolicy> policy;
  if (mc || top.has("policy")) policy = read_policy(top);
  auto [norm, max_osc] = top.object("settings", [](Obj& s) {
    const auto norm = s.choice("norm", {"l2", "max"}, "l2");
    return std::pair{norm == "max" ? WeilNorm::max : WeilNorm::l2, s.number("max_oscillation", 0.1)};
  });
  return [=, &surface]() {
    Outputs out;
    const WeilSpec spec{D, norm};
    const auto rep = fmt_residual(curve, spec, surface, grid, q);
    std::vector<McNevanlinna> mcs(grid.radii.size());
    if (mc)
      for (std::size_t i = 0; i < grid.radii.size(); ++i) {
        PathPolicy p = *policy;
        p.seed = policy->seed + i;  // one stream family per radius
        mcs[i] = mc_nevanlinna(curve, spec, surface, grid.radii[i], p);
      }
    Table t;
    t.columns = {"r", "rho_e", "T", "T_jensen", "m", "N", "residual", "defect_ratio", "boundary_zeros"};
    if (mc) t.columns.insert(t.columns.end(), {"T_mc", "T_mc_stderr", "m_mc", "m_mc_stderr", "residual_mc"});
    json rows = json::array();
    bool mc_ok = true;
    std::string mc_detail = "all MC estimates within 3 standard errors";
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const auto& r = rep.rows[i];
      std::vector<std::string> row = {fmt_num(r.r),        fmt_num(r.rho),      fmt_num(r.T),
                                      fmt_num(r.T_jensen), fmt_num(r.m),        fmt_num(r.N),
                                      fmt_num(r.residual), fmt_num(r.defect_ratio), std::to_string(r.boundary_zeros)};
      json jr = {{"r", r.r},   {"rho_e", r.rho},           {"T", r.T},
                 {"T_jensen", r.T_jensen}, {"m", r.m},     {"N", r.N},
                 {"residual", r.residual}, {"defect_ratio", r.defect_ratio}, {"boundary_zeros", r.boundary_zeros}};
      if (mc) {
        const auto& e = mcs[i];
        const double res = e.T.mean - e.m.mean - r.N;
        row.insert(row.end(), {fmt_num(e.T.mean), fmt_num(e.T.stderr_), fmt_num(e.m.mean), fmt_num(e.m.stderr_),
                               fmt_num(res)});
        jr["T_mc"] = {{"mean", e.T.mean}, {"stderr", e.T.stderr_}};
        jr["m_mc"] = {{"mean", e.m.mean}, {"stderr", e.m.stderr_}};
        jr["residual_mc"] = res;
        if (engine == "both") {
          if (std::abs(e.T.mean - r.T) > 3.0 * e.T.stderr_ && mc_ok) {
            mc_ok = false;
            mc_detail = "r=" + fmt_num(r.r) + ": T_mc " + fmt_num(e.T.mean) + " vs T " + fmt_num(r.T) + " (stderr " +
                        fmt_num(e.T.stderr_) + ")";
          } else if (std::abs(e.m.mean - r.m) > 3.0 * e.m.stderr_ && mc_ok) {
            mc_ok = false;
            mc_detail = "r=" + fmt_num(r.r) + ": m_mc " + fmt_num(e.m.mean) + " vs m " + fmt_num(r.m) + " (stderr " +
                        fmt_num(e.m.stderr_) + ")";
          }
        }
      }
      t.add(std::move(row));
      rows.push_back(std::move(jr));
    }
    const auto d = defect_from(rep);
    out.results["degree"] = rep.degree;
    out.results["rows"] = std::move(rows);
    out.results["residual_oscillation"] = rep.residual_oscillation();
    out.results["defect"] = {{"liminf_m_over_T", d.defect}, {"one_minus_max_N_over_T", d.alt_defect},
                             {"inconclusive", d.inconclusive}};
    out.check("fmt.residual_oscillation", rep.residual_oscillation() < max_osc,
              "oscillation " + fmt_num(rep.residual_oscillation()) + " against limit " + fmt_num(max_osc));
    if (engine == "both") out.check("fmt.mc_agreement", mc_ok, mc_detail);
    if (mc) out.rng = {{"seed", policy->seed}, {"streams_per_radius", 2 * policy->n_paths},
                       {"radii", grid.radii.size()}};
    out.tables.emplace_back("fmt", std::move(t));
    out.plot("residual", "fmt", {.x = "r", .y = {"residual"}, .log_x = true, .shade = "", .title = "FMT residual T - m - N"});
    out.plot("defect", "fmt", {.x = "r", .y = {"defect_ratio"}, .log_x = true, .shade = "", .title = "m / T"});
    return out;
  };
}

inline std::function<Outputs()> plan_ldl(Obj& top, const SurfaceModel& surface, double delta) {
  const auto src = top.string("function");
  auto psi = top.expression(top.child("function"), src, [](const std::string& s) { return expr::parse_meromorphic(s); });
  const int k = static_cast<int>(top.integer("k", 1));
  if (k < 1 || k > 8) top.fail_at("k", "derivative order must be between 1 and 8");
  const auto vsrc = top.string("vector_field", "1");
  auto coef = top.expression(top.child("vector_field"), vsrc, [](const std::string& s) { return expr::parse_holo(s); });
  auto field = top.expression(top.child("vector_field"), vsrc, [&](const std::string&) {
    return VectorField(coef, surface.profile().domain_radius());
  });
  auto grid = read_grid(top, surface);
  auto q = read_quadrature(top);
  struct S {
    LdlSettings ldl;
    GrowthSettings growth;
    bool run_growth;
  };
  S s = top.object("settings", [&](Obj& o) {
    S s;
    s.ldl.delta = s.growth.delta = delta;
    s.ldl.slack = o.number("slack", s.ldl.slack);
    s.growth.slack = o.number("growth_slack", s.growth.slack);
    s.run_growth = o.boolean("growth", true);
    return s;
  });
  try {
    detail::check_nonconstant(psi);
  } catch (const Error& e) {
    top.fail_at("function", e.what());
  }
  return [=, &surface]() {
    Outputs out;
    add_trace(out, ldl_report(psi, field, k, surface, grid, s.ldl, q), "ldl");
    out.plot("ldl_ratio", "ldl", {.x = "r", .y = {"ratio"}, .log_x = true, .shade = "flagged",
                                  .title = "m(r, X^k psi / psi) / rhs"});
    if (s.run_growth) {
      add_trace(out, derivative_growth_check(psi, field, k, surface, grid, s.growth, q), "growth");
      out.plot("growth_margin", "growth", {.x = "r", .y = {"margin"}, .log_x = true, .shade = "flagged",
                                           .title = "derivative growth margin"});
    }
    return out;
  };
}

inline std::function<Outputs()> plan_calculus(Obj& top, const SurfaceModel& surface, const std::string& engine,
                                              double delta) {
  auto k = top.object("kfun", [](Obj& o) { return read_surface_fn(o); }, true);
  auto grid = read_grid(top, surface);
  auto q = read_quadrature(top);
  CalculusSettings s = top.object("settings", [&](Obj& o) {
    CalculusSettings s;
    s.delta = delta;
    s.C = o.number("C", s.C);
    s.ratio_bound = o.number("ratio_bound", s.ratio_bound);
    return s;
  });
  if (engine != "quadrature") s.mc = read_policy(top);
  return [=, &surface]() {
    Outputs out;
    add_trace(out, calculus_lemma_report(surface, k.fn, grid, s, q), "calculus");
    out.results["kfun"] = k.label;
    if (s.mc) out.rng = {{"seed", s.mc->seed}, {"streams_per_radius", s.mc->n_paths}, {"radii", grid.radii.size()}};
    out.plot("calculus_ratio", "calculus", {.x = "r", .y = {"ratio"}, .log_x = true, .log_y = true,
                                            .shade = "flagged", .title = "calculus lemma ratio"});
    return out;
  };
}

inline std::function<Outputs()> plan_cartan(Obj& top, const SurfaceModel& surface, double delta) {
  auto curve = read_curve(top);
  const int n = static_cast<int>(curve.dimension());
  const json& arr = top.array("hyperplanes");
  std::vector<HomogeneousPoly> H;
  for (std::size_t k = 0; k < arr.size(); ++k) H.push_back(read_form(top, top.child("hyperplanes") + "/" + std::to_string(k), arr[k], n));
  if (H.empty()) top.fail_at("hyperplanes", "at least one hyperplane is required");
  if (H.size() > 12) top.fail_at("hyperplanes", "at most 12 hyperplanes are supported");
  auto grid = read_grid(top, surface);
  auto q = read_quadrature(top);
  struct S {
    CartanSettings c;
    bool defects;
  };
  S s = top.object("settings", [&](Obj& o) {
    S s;
    s.c.delta = delta;
    s.c.slack_log = o.number("slack_log", s.c.slack_log);
    s.c.slack_const = o.number("slack_const", s.c.slack_const);
    s.defects = o.boolean("defects", true);
    return s;
  });
  return [=, &surface]() {
    Outputs out;
    add_trace(out, cartan_smt_report(curve, H, surface, grid, s.c, q), "cartan");
    out.plot("cartan_margin", "cartan", {.x = "r", .y = {"margin"}, .log_x = true, .shade = "flagged",
                                         .title = "Cartan margin"});
    if (s.defects) {
      json defects = json::array();
      double sum = 0.0;
      Table t;
      t.columns = {"hyperplane", "defect", "alt_defect", "inconclusive"};
      for (const auto& h : H) {
        const auto d = defect(curve, WeilSpec{DivisorSum({{h, 1}})}, surface, grid, q);
        sum += d.defect;
        defects.push_back({{"hyperplane", h.to_string()}, {"defect", d.defect}, {"alt_defect", d.alt_defect},
                           {"inconclusive", d.inconclusive}});
        t.add({h.to_string(), fmt_num(d.defect), fmt_num(d.alt_defect), d.inconclusive ? "1" : "0"});
      }
      out.results["defects"] = std::move(defects);
      out.results["defect_sum"] = sum;
      out.tables.emplace_back("defects", std::move(t));
      out.check("cartan.defect_sum", sum <= n + 1 + 0.05,
                "sum of defects " + fmt_num(sum) + " against n + 1 + 0.05 = " + fmt_num(n + 1.05));
    }
    return out;
  };
}

inline std::function<Outputs()> plan_smt(Obj& top, const SurfaceModel& surface, double delta) {
  auto curve = read_curve(top);
  const int n = static_cast<int>(curve.dimension());
  auto D = read_divisor(top, n);
  auto grid = read_grid(top, surface);
  auto q = read_quadrature(top);
  struct S {
    SmtSettings smt;
    int d_L = 1;
    std::optional<double> bound;
    int k_max = 2;
  };
  S s = top.object("settings", [&](Obj& o) {
    S s;
    s.smt.delta = delta;
    s.d_L = static_cast<int>(o.integer("d_L", 1));
    if (s.d_L < 1) o.fail_at("d_L", "d_L must be positive");
    if (o.has("bound") && o.raw("bound").is_string()) {
      if (o.string("bound") != "auto") o.fail_at("bound", "bound must be a positive number or \"auto\"");
    } else if (o.has("bound")) {
      s.bound = o.number("bound");
      if (!(*s.bound > 0.0)) o.fail_at("bound", "bound must be positive");
    } else {
      o.string("bound", "auto");
    }
    s.k_max = static_cast<int>(o.integer("k_max", 2));
    s.smt.t_fraction = o.number("t_fraction", s.smt.t_fraction);
    s.smt.slack = o.number("slack", s.smt.slack);
    s.smt.veronese_degree = static_cast<int>(o.integer("veronese_degree", 0));
    return s;
  });
  return [=, &surface]() {
    Outputs out;
    double bound;
    if (s.bound) {
      bound = *s.bound;
      out.results["bound"] = {{"value", bound}, {"source", "config"}};
    } else {
      const auto nb = nev_upper_bound(D, bundled_candidates(D, s.d_L, s.k_max));
      if (!nb.value) throw ConfigError("no bundled candidate certifies a finite Nevanlinna constant: " + nb.explanation);
      bound = nb.value->convert_to<double>();
      out.results["bound"] = {{"value", bound}, {"exact", rat(*nb.value)}, {"source", "bundled candidates"},
                              {"explanation", nb.explanation}};
    }
    const auto tr = smt_full_check(curve, D, s.d_L, bound, surface, grid, s.smt, q);
    add_trace(out, tr, "smt");
    const double res = grid_resolution(grid);
    const double limit = 1.0 / delta + res;
    out.results["borel"] = {{"flagged_measure", tr.flagged_measure}, {"c_phi", 1.0 / delta}, {"resolution", res}};
    out.check("smt.borel_measure", tr.flagged_measure <= limit,
              "flagged measure " + fmt_num(tr.flagged_measure) + " against 1/delta + resolution = " + fmt_num(limit));
    out.plot("smt_margin", "smt", {.x = "r", .y = {"margin"}, .log_x = true, .shade = "flagged",
                                   .title = "second main theorem margin"});
    return out;
  };
}

inline NevTriple read_triple(Obj& o, int n, const DivisorSum& D) {
  NevTriple t;
  t.k = static_cast<int>(o.integer("k"));
  t.d_L = static_cast<int>(o.integer("d_L", 1));
  if (t.k < 1 || t.d_L < 1) o.fail("k and d_L must be positive");
  t.label = o.string("label", "declared");
  const json& mu = o.raw("mu");
  if (mu.is_string()) {
    const std::string src = mu.get<std::string>();
    o.resolved()["mu"] = src;
    auto p = o.expression(o.child("mu"), src, [](const std::string& s) { return expr::parse_homogeneous(s, 1); });
    if (p.degree() != 0) o.fail_at("mu", "mu must be a rational constant");
    const auto& c = p.terms().begin()->second;
    if (c.im != 0 || !(c.re > 0)) o.fail_at("mu", "mu must be a positive rational");
    t.mu = c.re;
  } else if (mu.is_number_integer() && mu.get<long long>() > 0) {
    o.resolved()["mu"] = mu;
    t.mu = Rational(mu.get<long long>());
  } else {
    o.fail_at("mu", "mu must be a positive integer or a rational string such as \"3/2\"");
  }
  const json& V = o.array("V");
  for (std::size_t j = 0; j < V.size(); ++j) t.V.push_back(read_form(o, o.child("V") + "/" + std::to_string(j), V[j], n));
  if (o.has("bases")) {
    o.objects("bases", [&](Obj& b, std::size_t) {
      const json& st = b.array("stratum");
      StratumKey key;
      for (const auto& v : st) {
        if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() >= int(D.components().size()))
          b.fail_at("stratum", "stratum entries must be component indices");
        key.push_back(v.get<int>());
      }
      std::sort(key.begin(), key.end());
      const json& basis = b.array("basis");
      std::vector<HomogeneousPoly> polys;
      for (std::size_t j = 0; j < basis.size(); ++j)
        polys.push_back(read_form(b, b.child("basis") + "/" + std::to_string(j), basis[j], n));
      t.bases[key] = std::move(polys);
    });
  }
  return t;
}

inline std::function<Outputs()> plan_nev(Obj& top) {
  const int n = static_cast<int>(top.integer("n"));
  if (n < 1 || n > 6) top.fail_at("n", "projective dimension must be between 1 and 6");
  auto D = read_divisor(top, n);
  struct S {
    int k_max = 2, d_L = 1;
    bool bundled = true;
  };
  S s = top.object("settings", [](Obj& o) {
    S s;
    s.k_max = static_cast<int>(o.integer("k_max", 2));
    s.d_L = static_cast<int>(o.integer("d_L", 1));
    s.bundled = o.boolean("bundled", true);
    return s;
  });
  std::vector<NevTriple> declared;
  if (top.has("triples"))
    top.objects("triples", [&](Obj& o, std::size_t) { declared.push_back(read_triple(o, n, D)); });
  return [=]() {
    Outputs out;
    const auto st = stratify(D, n);
    json strata = json::array();
    for (const auto& x : st.strata) {
      json through = json::array();
      for (int j : x.through) through.push_back(D.components()[j].poly.to_string());
      strata.push_back({{"stratum", detail::key_string(x.components, D)}, {"through", through}, {"method", x.method}});
    }
    out.results["strata"] = std::move(strata);
    Table t;
    t.columns = {"candidate", "label", "stratum", "component", "order_sum", "required", "margin", "pass"};
    auto tabulate = [&](std::size_t idx, const NevTriple& tr, const NevCertificate& c) {
      for (const auto& e : c.entries)
        t.add({std::to_string(idx), tr.label, detail::key_string(e.stratum, D),
               D.components()[e.component].poly.to_string(), rat(e.order_sum), rat(e.required), rat(e.margin),
               e.pass ? "1" : "0"});
    };
    std::vector<NevTriple> all = declared;
    if (s.bundled) {
      bool hyperplanes = true;
      for (const auto& c : D.components()) hyperplanes = hyperplanes && c.poly.is_linear();
      if (hyperplanes) {
        auto b = bundled_candidates(D, s.d_L, s.k_max);
        all.insert(all.end(), b.begin(), b.end());
      } else {
        out.results["bundled_note"] = "bundled candidates are only generated for hyperplane divisors";
      }
    }
    const auto nb = nev_upper_bound(D, all);
    json certs = json::array();
    for (std::size_t i = 0; i < all.size(); ++i) {
      json c = certificate_json(nb.certificates[i], D);
      c["label"] = all[i].label;
      c["k"] = all[i].k;
      c["declared"] = i < declared.size();
      certs.push_back(std::move(c));
      tabulate(i, all[i], nb.certificates[i]);
      if (i < declared.size())
        out.check("nev.triple[" + std::to_string(i) + "]", nb.certificates[i].pass,
                  nb.certificates[i].pass ? "certified bound " + rat(nb.certificates[i].bound)
                                          : nb.certificates[i].failure);
    }
    out.results["certificates"] = std::move(certs);
    if (nb.value) out.results["nev_upper_bound"] = rat(*nb.value);
    else out.results["nev_upper_bound"] = "inf";
    out.results["explanation"] = nb.explanation;
    out.tables.emplace_back("certificates", std::move(t));
    return out;
  };
}

inline std::function<Outputs()> plan_mc_validate(Obj& top, const SurfaceModel& surface) {
  auto grid = read_grid(top, surface);
  auto policy = read_policy(top);
  std::vector<SurfaceFnSpec> phis;
  if (top.has("phis")) {
    top.objects("phis", [&](Obj& o, std::size_t) { phis.push_back(read_surface_fn(o)); });
  } else {
    phis.push_back({"const(1)", [](cplx) { return 1.0; }});
    phis.push_back({"|z|^2", [](cplx z) { return std::norm(z); }});
  }
  const double sigmas = top.object("settings", [](Obj& o) { return o.number("sigmas", 3.0); });
  return [=, &surface]() {
    Outputs out;
    Table t, e;
    t.columns = {"r", "phi", "mc", "stderr", "quad", "delta", "z", "abandoned"};
    e.columns = {"r", "E_tau", "stderr", "bound", "margin", "bias_bound"};
    const bool flat = surface.profile().kind() == MetricKind::euclidean;
    bool ok = true, tau_ok = true;
    std::string detail = "all |delta| <= " + fmt_num(sigmas) + " stderr", tau_detail = "exit times consistent";
    std::vector<SurfaceFn> fns;
    for (const auto& p : phis) fns.push_back(p.fn);
    json rows = json::array();
    for (std::size_t i = 0; i < grid.radii.size(); ++i) {
      const double r = grid.radii[i];
      PathPolicy p = policy;
      p.seed = policy.seed + i;
      const auto b = simulate_paths(surface, r, fns, p);
      for (std::size_t k = 0; k < phis.size(); ++k) {
        const double quad = green_integral(surface, phis[k].fn, r);
        const auto& est = b.estimates[k];
        const double delta = est.mean - quad;
        const double zs = est.stderr_ > 0 ? delta / est.stderr_ : 0.0;
        t.add({fmt_num(r), phis[k].label, fmt_num(est.mean), fmt_num(est.stderr_), fmt_num(quad), fmt_num(delta),
               fmt_num(zs), std::to_string(b.abandoned)});
        rows.push_back({{"r", r}, {"phi", phis[k].label}, {"mc", est.mean}, {"stderr", est.stderr_}, {"quad", quad},
                        {"delta", delta}});
        if (std::abs(delta) > sigmas * est.stderr_ && ok) {
          ok = false;
          detail = "r=" + fmt_num(r) + ", phi=" + phis[k].label + ": delta " + fmt_num(delta) + " exceeds " +
                   fmt_num(sigmas) + " stderr " + fmt_num(est.stderr_);
        }
      }
      const double bound = 0.5 * r * r;
      e.add({fmt_num(r), fmt_num(b.time.mean), fmt_num(b.time.stderr_), fmt_num(bound), fmt_num(bound - b.time.mean),
             fmt_num(b.bias_bound)});
      const bool good = flat ? std::abs(b.time.mean - bound) <= sigmas * b.time.stderr_ + b.bias_bound
                             : b.time.mean - sigmas * b.time.stderr_ <= bound + b.bias_bound;
      if (!good && tau_ok) {
        tau_ok = false;
        tau_detail = "r=" + fmt_num(r) + ": E tau " + fmt_num(b.time.mean) + " against r^2/2 = " + fmt_num(bound);
      }
    }
    out.results["rows"] = std::move(rows);
    out.check("mc.green_agreement", ok, detail);
    out.check("mc.exit_time", tau_ok, tau_detail);
    out.rng = {{"seed", policy.seed}, {"streams_per_radius", policy.n_paths}, {"radii", grid.radii.size()},
               {"generator", "mt19937_64 seeded by splitmix64(seed, path)"}};
    out.tables.emplace_back("mc", std::move(t));
    out.tables.emplace_back("exit_time", std::move(e));
    out.plot("mc_z", "mc", {.x = "r", .y = {"z"}, .shade = "", .title = "(MC - quadrature) / stderr"});
    out.plot("exit_time", "exit_time", {.x = "r", .y = {"E_tau", "bound"}, .shade = "", .title = "E tau against r^2/2"});
    return out;
  };
}

inline std::function<Outputs()> plan_surface_validate(Obj& top, const SurfaceModel& surface) {
  auto grid = read_grid(top, surface);
  auto [eta, tol] = top.object("settings", [](Obj& o) {
    return std::pair{o.number("eta", 0.5), o.number("tol", 1e-8)};
  });
  if (!(eta > 0.0)) top.fail_at("settings", "eta must be positive");
  return [=, &surface]() {
    Outputs out;
    const double r_max = grid.radii.back();
    const auto sol = jacobi_solve(kappa_function(surface, r_max), r_max);
    const auto inv = check_jacobi(sol, tol);
    std::vector<double> outer;
    for (double r : grid.radii)
      if (r > eta) outer.push_back(r);
    std::optional<GreenLowerBoundReport> glb;
    if (!outer.empty()) glb = green_lower_bound_check(surface, eta, outer);
    Table t;
    t.columns = {"r", "rho_e", "roundtrip_error", "kappa", "G", "G_lower", "G_upper", "green_ratio_inf"};
    double worst = 0.0;
    std::size_t j = 0;
    for (double r : grid.radii) {
      const double rho = surface.euclidean_radius(r);
      const double err = std::abs(surface.geodesic_radius(rho) - r) / std::max(1.0, r);
      worst = std::max(worst, err);
      const double k = surface.kappa(r);
      const double inf = r > eta && glb ? glb->infimum[j++] : std::nan("");
      t.add({fmt_num(r), fmt_num(rho), fmt_num(err), fmt_num(k), fmt_num(sol.G(r)), fmt_num(r),
             fmt_num(r * std::exp(r * std::sqrt(-k))), fmt_num(inf)});
    }
    out.results["jacobi"] = {{"starts_correctly", inv.starts_correctly}, {"increasing", inv.increasing},
                             {"above_identity", inv.above_identity}, {"log_integral_bound", inv.log_integral_bound},
                             {"exponential_bound", inv.exponential_bound}};
    out.results["max_roundtrip_error"] = worst;
    out.check("surface.roundtrip", worst <= 1e-10, "max relative round-trip error " + fmt_num(worst));
    out.check("surface.jacobi_bounds", inv.all(), "Jacobi invariants (G(0)=0, G'(0)=1, increasing, t <= G <= t e^{t sqrt(-kappa)}, int dt/G <= log r)");
    if (glb) {
      out.results["green_lower_bound"] = {{"eta", eta}, {"infimum", glb->overall_infimum},
                                          {"bounded_away_from_zero", glb->bounded_away_from_zero}};
      out.check("surface.green_lower_bound", glb->bounded_away_from_zero,
                "infimum of the Green ratio " + fmt_num(glb->overall_infimum));
    }
    out.tables.emplace_back("surface", std::move(t));
    out.plot("jacobi", "surface", {.x = "r", .y = {"G", "G_lower", "G_upper"}, .log_y = true, .shade = "",
                                   .title = "Jacobi solution and its bounds"});
    return out;
  };
}

/// Reads and checks the whole config. The returned plan refers to the
/// surface stored in `surface_slot`, which must outlive it.
inline Plan prepare(const Document& doc, std::optional<SurfaceModel>& surface_slot) {
  Obj top(doc, doc.root, "");
  Plan plan;
  plan.experiment = top.choice("experiment", experiment_kinds());
  plan.name = top.string("name", plan.experiment);
  plan.output = top.string("output", "out/" + plan.name);
  surface_slot.emplace(read_surface(top));
  const SurfaceModel& surface = *surface_slot;
  const auto& e = plan.experiment;
  const bool engine_applies = e == "fmt" || e == "calculus";
  const auto engine = engine_applies ? top.choice("engine", {"quadrature", "mc", "both"}, "quadrature") : "quadrature";
  if (!engine_applies && top.has("engine")) top.fail_at("engine", "experiment '" + e + "' has no engine choice");
  const bool uses_delta = e == "ldl" || e == "calculus" || e == "cartan" || e == "smt";
  double delta = 0.1;
  if (uses_delta) {
    delta = top.number("delta", 0.1);
    if (!(delta > 0.0)) top.fail_at("delta", "delta must be positive");
  }
  if (e == "fmt") plan.run = plan_fmt(top, surface, engine);
  else if (e == "ldl") plan.run = plan_ldl(top, surface, delta);
  else if (e == "calculus") plan.run = plan_calculus(top, surface, engine, delta);
  else if (e == "cartan") plan.run = plan_cartan(top, surface, delta);
  else if (e == "smt") plan.run = plan_smt(top, surface, delta);
  else if (e == "nev") plan.run = plan_nev(top);
  else if (e == "mc-validate") plan.run = plan_mc_validate(top, surface);
  else plan.run = plan_surface_validate(top, surface);
  top.finish();
  plan.resolved = top.resolved();
  return plan;
}

/// report.json: deterministic given the config and seed (no timings, no
/// thread counts).
inline json make_report(const Plan& plan, const Outputs& out) {
  json asserts = json::array();
  bool pass = true;
  for (const auto& a : out.assertions) {
    asserts.push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
    pass = pass && a.pass;
  }
  json tables = json::array(), plots = json::array();
  for (const auto& [name, t] : out.tables) tables.push_back("tables/" + name + ".csv");
  for (const auto& [name, p] : out.plots) plots.push_back("plots/" + name + ".svg");
  return {{"nevlab_version", version},
          {"versions", {{"boost", BOOST_LIB_VERSION},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                      "." + std::to_string(EIGEN_MINOR_VERSION)},
                        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
          {"experiment", plan.experiment},
          {"name", plan.name},
          {"config", plan.resolved},
          {"status", pass ? "pass" : "assertion_failure"},
          {"assertions", asserts},
          {"rng", out.rng},
          {"outputs", {{"tables", tables}, {"plots", plots}}},
          {"results", out.results}};
}

}  // namespace nevlab::cli
