#ifndef FUNNEL_EXPERIMENTS_SCAN_HPP
#define FUNNEL_EXPERIMENTS_SCAN_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "funnel/analysis/circle_dynamics.hpp"
#include "funnel/analysis/fixed_points.hpp"
#include "funnel/analysis/horseshoe.hpp"
#include "funnel/analysis/invariant_curve.hpp"
#include "funnel/analysis/map_lyapunov.hpp"
#include "funnel/burster/classify.hpp"
#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"
#include "funnel/experiments/builders.hpp"
#include "funnel/experiments/config.hpp"
#include "funnel/experiments/table.hpp"

namespace funnel::experiments {

using Rng = std::mt19937_64;

/// A per-point analysis: reads the point's config, returns its scalar cells.
struct Analysis {
  std::string target;
  std::vector<std::string> columns;
  std::function<Table::Row(const Config&, Rng&)> run;
};

inline burster::RegimeOptions regime_options_from(const Config& c) {
  burster::RegimeOptions o;
  o.transient = c.get_double("classify", "transient", o.transient);
  o.t_max = c.get_double("classify", "t_max", o.t_max);
  o.spike_threshold = c.get_double("classify", "spike_threshold", o.spike_threshold);
  o.prominence = c.get_double("classify", "prominence", o.prominence);
  o.gap_factor = c.get_double("classify", "gap_factor", o.gap_factor);
  o.cv_tol = c.get_double("classify", "cv_tol", o.cv_tol);
  o.min_spikes = c.get_count("classify", "min_spikes", o.min_spikes);
  o.analyze_attractor = c.get_bool("classify", "analyze_attractor", o.analyze_attractor);
  o.sim.rtol = c.get_double("classify", "rtol", o.sim.rtol);
  o.sim.atol = c.get_double("classify", "atol", o.sim.atol);
  o.section.sim = o.sim;
  o.lyapunov.rtol = o.sim.rtol;
  o.lyapunov.atol = o.sim.atol;
  o.lyapunov.T = c.get_double("classify", "lyapunov_T", o.lyapunov.T);
  return o;
}

inline Table::Row regime_row(const burster::RegimeLabel& r) {
  Table::Row row{{"label", std::string(burster::to_string(r.label))},
                 {"reason", r.reason},
                 {"spikes", static_cast<std::int64_t>(r.spikes)},
                 {"bursts", static_cast<std::int64_t>(r.bursts)},
                 {"median_isi", r.median_isi},
                 {"isi_cv", r.isi_cv},
                 {"max_isi", r.max_isi},
                 {"v_range", r.v_range}};
  if (r.lyapunov) {
    row.emplace_back("lambda1", r.lyapunov->exponents[0]);
    row.emplace_back("lambda2", r.lyapunov->exponents[1]);
    row.emplace_back("lambda3", r.lyapunov->exponents[2]);
  }
  if (r.topology) {
    row.emplace_back("section_points", static_cast<std::int64_t>(r.topology->points));
    row.emplace_back("clusters", static_cast<std::int64_t>(r.topology->clusters));
    row.emplace_back("closed_curves", static_cast<std::int64_t>(r.topology->closed_curves));
  }
  return row;
}

inline const std::vector<std::string>& regime_columns() {
  static const std::vector<std::string> cols{
      "label",   "reason",  "spikes",  "bursts",         "median_isi", "isi_cv",
      "max_isi", "v_range", "lambda1", "lambda2",        "lambda3",    "section_points",
      "clusters", "closed_curves"};
  return cols;
}

/// Lower bound of the circle-map derivative on a grid; > 0 means invertible.
template <LiftedCircleMap M>
double min_derivative(const M& f, std::size_t grid = 1024) {
  double m = f.derivative(0.0);
  for (std::size_t j = 1; j < grid; ++j) m = std::min(m, f.derivative(two_pi * j / grid));
  return m;
}

template <typename F>
decltype(auto) with_circle_map(const Config& c, F&& f) {
  const std::string kind = c.get_string("circle-map", "kind", "profile");
  if (kind == "profile") {
    return f(CircleMap(saddle_from(c), profile_from(c), omega_tilde_from(c),
                       static_cast<int>(c.get_int("global", "n", 1))));
  }
  if (kind == "sine") {
    SineCircleMap s = sine_from(c);
    s.omega_tilde = omega_tilde_from(c);
    return f(s);
  }
  fail(ErrorKind::config, "circle-map.kind must be profile or sine, got '" + kind + "'");
}

inline const std::map<std::string, Analysis>& analyses() {
  static const std::map<std::string, Analysis> table{
      {"rotation-number",
       {"circle-map",
        {"rotation_number", "turns", "convergence", "min_derivative"},
        [](const Config& c, Rng&) {
          return with_circle_map(c, [&](const auto& f) {
            // Rotation numbers of locked orbits come out exact once the orbit has
            // settled and the iteration count is a multiple of the period.
            double phi = c.get_double("circle-map", "phi0", 0.0);
            const std::size_t transient = c.get_count("circle-map", "transient", 1000);
            for (std::size_t k = 0; k < transient; ++k) phi = f.lift(phi);
            phi = wrap_angle(phi);
            const auto r = rotation_number(f, phi, c.get_count("circle-map", "iterations", 5040));
            return Table::Row{{"rotation_number", r.value},
                              {"turns", r.turns},
                              {"convergence", r.convergence_estimate},
                              {"min_derivative", min_derivative(f)}};
          });
        }}},
      {"circle-lyapunov",
       {"circle-map",
        {"lyapunov"},
        [](const Config& c, Rng& rng) {
          return with_circle_map(c, [&](const auto& f) {
            std::uniform_real_distribution<double> u(0.0, two_pi);
            const double phi0 = c.get_double("circle-map", "phi0", u(rng));
            return Table::Row{
                {"lyapunov",
                 lyapunov_exponent_1d(f, phi0, c.get_count("circle-map", "iterations", 20000))}};
          });
        }}},
      {"horseshoe",
       {"circle-map",
        {"certified", "symbols", "expansion_lower_bound"},
        [](const Config& c, Rng&) {
          return with_circle_map(c, [&](const auto& f) {
            const auto r = horseshoe_certify(f, static_cast<int>(c.get_int("horseshoe", "m", 2)));
            return Table::Row{
                {"certified", static_cast<std::int64_t>(r.certificate.has_value())},
                {"symbols", static_cast<std::int64_t>(r.best_symbols)},
                {"expansion_lower_bound", r.best_expansion}};
          });
        }}},
      {"invariant-curve",
       {"map-family",
        {"residual", "iterations", "h_min", "h_max", "diffeo_sup"},
        [](const Config& c, Rng&) {
          InvariantCurveOptions o;
          o.grid = c.get_count("invariant-curve", "grid", o.grid);
          o.tol = c.get_double("invariant-curve", "tol", o.tol);
          o.max_iterations = c.get_count("invariant-curve", "max_iterations", o.max_iterations);
          const auto diffeo = check_diffeo_condition(saddle_from(c), profile_from(c));
          return with_annulus_map(
              c.get_string("invariant-curve", "map", "rescaled"), c, [&](const auto& m) {
                const auto r = find_invariant_curve(m, o);
                const auto& h = r.curve.heights();
                return Table::Row{{"residual", r.residual},
                                  {"iterations", static_cast<std::int64_t>(r.iterations)},
                                  {"h_min", *std::min_element(h.begin(), h.end())},
                                  {"h_max", *std::max_element(h.begin(), h.end())},
                                  {"diffeo_sup", diffeo.sup_value}};
              });
        }}},
      {"map-lyapunov",
       {"map-family",
        {"lambda1", "lambda2"},
        [](const Config& c, Rng& rng) {
          MapLyapunovOptions o;
          o.iterations = c.get_count("map-lyapunov", "iterations", o.iterations);
          o.transient = c.get_count("map-lyapunov", "transient", o.transient);
          return with_annulus_map(
              c.get_string("map-lyapunov", "map", "rescaled"), c, [&](const auto& m) {
                std::uniform_real_distribution<double> u(0.0, two_pi);
                const double phi0 = c.get_double("map-lyapunov", "phi0", u(rng));
                const double z0 = c.get_double("map-lyapunov", "z0", 0.5 * m.z_max());
                const auto r = lyapunov_exponents_map(m, AnnulusPoint::from_lift(z0, phi0), o);
                return Table::Row{{"lambda1", r.lambda1}, {"lambda2", r.lambda2}};
              });
        }}},
      {"fixed-points",
       {"map-family",
        {"count", "stable_count", "phi_fp", "z_fp", "max_abs_eigenvalue"},
        [](const Config& c, Rng&) {
          const SingularLimitMap m(saddle_from(c), profile_from(c), omega_tilde_from(c), 0);
          const auto fps = find_fixed_points_n0(m);
          std::int64_t stable = 0;
          for (const auto& f : fps) stable += f.stable;
          Table::Row row{{"count", static_cast<std::int64_t>(fps.size())},
                         {"stable_count", stable}};
          if (!fps.empty()) {
            row.emplace_back("phi_fp", fps[0].phi_fp);
            row.emplace_back("z_fp", fps[0].z_fp);
            row.emplace_back("max_abs_eigenvalue", std::max(std::abs(fps[0].eigenvalues[0]),
                                                            std::abs(fps[0].eigenvalues[1])));
          }
          return row;
        }}},
      {"diffeo-condition",
       {"map-family",
        {"sup_value", "argmax_phi", "satisfied"},
        [](const Config& c, Rng&) {
          const auto d = check_diffeo_condition(saddle_from(c), profile_from(c));
          return Table::Row{{"sup_value", d.sup_value},
                            {"argmax_phi", d.argmax_phi},
                            {"satisfied", static_cast<std::int64_t>(d.satisfied)}};
        }}},
      {"prop2",
       {"map-family",
        {"alternative", "margin", "margin_decreasing", "margin_steep"},
        [](const Config& c, Rng&) {
          const auto iv = c.get_doubles("prop2", "interval", {pi / 2, 3 * pi / 2});
          if (iv.size() != 2) fail(ErrorKind::config, "prop2.interval needs two numbers");
          const auto r = check_prop2_conditions(saddle_from(c), profile_from(c), iv[0], iv[1],
                                                static_cast<int>(c.get_int("prop2", "m", 2)));
          return Table::Row{{"alternative", std::string(to_string(r.branch))},
                            {"margin", r.margin},
                            {"margin_decreasing", r.margin_decreasing},
                            {"margin_steep", r.margin_steep}};
        }}},
      {"classify-regime",
       {"burster", regime_columns(),
        [](const Config& c, Rng&) {
          return regime_row(burster::classify_regime(burster_from(c), regime_options_from(c)));
        }}},
      {"slow-nullcline",
       {"burster",
        {"v", "w", "y", "structure", "right_of_tip", "stable", "c_tip"},
        [](const Config& c, Rng&) {
          const auto r = burster::slow_nullcline_position(burster_from(c));
          return Table::Row{{"v", r.equilibrium.v},
                            {"w", r.equilibrium.w},
                            {"y", r.equilibrium.y},
                            {"structure", r.structure},
                            {"right_of_tip", static_cast<std::int64_t>(r.right_of_tip)},
                            {"stable", static_cast<std::int64_t>(r.stable)},
                            {"c_tip", r.c_tip}};
        }}},
  };
  return table;
}

/// Axis names each target accepts, and the config key each one sets.
inline const std::map<std::string, std::string>& target_parameters(const std::string& target) {
  static const std::map<std::string, std::map<std::string, std::string>> table{
      {"map-family",
       {{"mu", "global.mu"},
        {"phi_star", "global.phi_star"},
        {"eps_r", "global.eps_r"},
        {"eps_phi", "global.eps_phi"},
        {"a", "profile.a"},
        {"rho", "saddle.rho"},
        {"nu", "saddle.nu"},
        {"omega_over_rho", "saddle.omega_over_rho"},
        {"omega_tilde", "map.omega_tilde"}}},
      {"circle-map",
       {{"a", "profile.a"},
        {"omega_over_rho", "saddle.omega_over_rho"},
        {"omega_tilde", "map.omega_tilde"},
        {"amplitude", "sine.amplitude"}}},
      {"burster",
       {{"c", "burster.c"},
        {"delta", "burster.delta"},
        {"mu_slow", "burster.mu_slow"},
        {"I", "burster.I"}}},
  };
  const auto it = table.find(target);
  if (it == table.end()) {
    fail(ErrorKind::config, "scan target must be map-family, circle-map or burster, got '" + target + "'");
  }
  return it->second;
}

struct Axis {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  std::size_t count = 2;
  bool log = false;

  double value(std::size_t i) const {
    if (i == 0) return min;
    if (i + 1 == count) return max;
    const double s = static_cast<double>(i) / static_cast<double>(count - 1);
    if (log) return std::exp(std::log(min) + s * (std::log(max) - std::log(min)));
    return min + s * (max - min);
  }
};

struct ScanSpec {
  std::string target;
  std::string analysis;
  std::vector<Axis> axes;
  std::uint64_t seed = 0;
  std::size_t workers = 0;  // 0: one per hardware thread
  Config base;              // fixed parameters and analysis options

  std::size_t points() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.count;
    return n;
  }
};

/// "name min max count [linear|log]"
inline Axis parse_axis(const std::string& text) {
  const auto w = Config::words(text);
  if (w.size() != 4 && w.size() != 5) {
    fail(ErrorKind::config, "axis expects 'name min max count [linear|log]', got '" + text + "'");
  }
  Axis a;
  a.name = w[0];
  a.min = Config::parse_double(w[1], "axis " + a.name + " min");
  a.max = Config::parse_double(w[2], "axis " + a.name + " max");
  const double count = Config::parse_double(w[3], "axis " + a.name + " count");
  if (!(count >= 2.0) || count != std::floor(count)) {
    fail(ErrorKind::config, "axis " + a.name + ": count must be an integer >= 2");
  }
  a.count = static_cast<std::size_t>(count);
  if (w.size() == 5) {
    if (w[4] == "log") {
      a.log = true;
    } else if (w[4] != "linear") {
      fail(ErrorKind::config, "axis " + a.name + ": spacing must be linear or log");
    }
  }
  return a;
}

inline void validate(const ScanSpec& s) {
  const auto& params = target_parameters(s.target);
  const auto it = analyses().find(s.analysis);
  if (it == analyses().end()) fail(ErrorKind::config, "unknown analysis '" + s.analysis + "'");
  if (it->second.target != s.target) {
    fail(ErrorKind::config, "analysis " + s.analysis + " runs on target " + it->second.target +
                                ", not " + s.target);
  }
  if (s.axes.empty() || s.axes.size() > 2) fail(ErrorKind::config, "a scan needs 1 or 2 axes");
  for (const auto& a : s.axes) {
    if (!params.count(a.name)) {
      fail(ErrorKind::config, "axis '" + a.name + "' is not a parameter of target " + s.target);
    }
    if (a.count < 2) fail(ErrorKind::config, "axis " + a.name + ": count must be >= 2");
    if (!std::isfinite(a.min) || !std::isfinite(a.max)) {
      fail(ErrorKind::config, "axis " + a.name + ": bounds must be finite");
    }
    if (a.log && !(a.min > 0.0 && a.max > 0.0)) {
      fail(ErrorKind::config, "axis " + a.name + ": log spacing needs a positive range");
    }
  }
  if (s.axes.size() == 2 && s.axes[0].name == s.axes[1].name) {
    fail(ErrorKind::config, "the two axes must differ");
  }
}

/// From [scan]: target, analysis, axis1, axis2 (optional), seed, workers.
inline ScanSpec scan_spec_from(const Config& c) {
  ScanSpec s;
  s.target = c.get_string("scan", "target", "");
  s.analysis = c.get_string("scan", "analysis", "");
  s.axes.push_back(parse_axis(c.raw("scan", "axis1")));
  if (c.has("scan", "axis2")) s.axes.push_back(parse_axis(c.raw("scan", "axis2")));
  const auto seed = c.get_int("scan", "seed", 0);
  s.seed = static_cast<std::uint64_t>(seed);
  s.workers = c.get_count("scan", "workers", 0);
  s.base = c;
  validate(s);
  return s;
}

struct ScanResult {
  ScanSpec spec;
  Table table;
  std::size_t errors = 0;
};

/// Runs of rotation numbers equal to 1e-6 over >= 3 neighbours along the
/// omega_tilde axis (the first axis if there is none) are flagged as locked.
inline void flag_mode_locking(ScanResult& r, double tol = 1e-6, std::size_t min_run = 3) {
  const auto& axes = r.spec.axes;
  std::size_t along = 0;
  for (std::size_t i = 0; i < axes.size(); ++i)
    if (axes[i].name == "omega_tilde") along = i;
  const std::size_t n = axes[along].count;
  const std::size_t stride = along + 1 < axes.size() ? axes[along + 1].count : 1;
  const std::size_t lines = r.table.size() / n;
  for (std::size_t line = 0; line < lines; ++line) {
    // Index of element k on this line: axis 0 is the slow index.
    auto index = [&](std::size_t k) {
      return along == 0 ? line + k * stride : line * n + k;
    };
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) values[k] = r.table.number(index(k), "rotation_number");
    std::vector<std::int64_t> locked(n, 0);
    for (const auto& p : find_plateaus(values, tol, min_run))
      for (std::size_t k = p.first; k <= p.last; ++k) locked[k] = 1;
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isnan(values[k])) r.table.set(index(k), "locked", locked[k]);
    }
  }
}

/// Evaluates every grid point, in parallel, and returns records in grid order
/// (axis 1 slowest). A failing point becomes a record with status
/// error(kind); it never stops the scan.
inline ScanResult run_scan(const ScanSpec& spec) {
  validate(spec);
  const Analysis& an = analyses().at(spec.analysis);
  const auto& params = target_parameters(spec.target);
  std::vector<std::string> cols{"index"};
  for (const auto& a : spec.axes) cols.push_back(a.name);
  cols.insert(cols.end(), {"status", "message"});
  cols.insert(cols.end(), an.columns.begin(), an.columns.end());
  if (spec.analysis == "rotation-number") cols.push_back("locked");

  const std::size_t total = spec.points();
  std::vector<Table::Row> rows(total);
  auto evaluate = [&](std::size_t index) {
    Config c = spec.base;
    Table::Row row{{"index", static_cast<std::int64_t>(index)}};
    std::size_t rest = index;
    std::vector<std::size_t> idx(spec.axes.size());
    for (std::size_t k = spec.axes.size(); k-- > 0;) {
      idx[k] = rest % spec.axes[k].count;
      rest /= spec.axes[k].count;
    }
    for (std::size_t k = 0; k < spec.axes.size(); ++k) {
      const double v = spec.axes[k].value(idx[k]);
      const std::string& key = params.at(spec.axes[k].name);
      const auto dot = key.find('.');
      c.set(key.substr(0, dot), key.substr(dot + 1), format_double(v));
      row.emplace_back(spec.axes[k].name, v);
    }
    Rng rng(point_seed(spec.seed, index));
    try {
      const auto cells = an.run(c, rng);
      row.emplace_back("status", std::string("ok"));
      row.insert(row.end(), cells.begin(), cells.end());
    } catch (const Error& e) {
      row.emplace_back("status", std::string("error(") + to_string(e.kind()) + ")");
      row.emplace_back("message", std::string(e.what()));
    } catch (const std::exception& e) {
      row.emplace_back("status", std::string("error(internal)"));
      row.emplace_back("message", std::string(e.what()));
    }
    rows[index] = std::move(row);
  };

  std::size_t workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < total;) evaluate(i);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ScanResult out;
  out.spec = spec;
  out.table = Table(cols);
  for (const auto& r : rows) {
    out.table.add(r);
    if (std::get<std::string>(r[spec.axes.size() + 1].second) != "ok") ++out.errors;
  }
  if (spec.analysis == "rotation-number") flag_mode_locking(out);
  return out;
}

}  // namespace funnel::experiments

#endif  // FUNNEL_EXPERIMENTS_SCAN_HPP
