#ifndef FUNNEL_EXPERIMENTS_COMMANDS_HPP
#define FUNNEL_EXPERIMENTS_COMMANDS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "funnel/analysis/circle_dynamics.hpp"
#include "funnel/analysis/fixed_points.hpp"
#include "funnel/analysis/horseshoe.hpp"
#include "funnel/analysis/invariant_curve.hpp"
#include "funnel/analysis/map_lyapunov.hpp"
#include "funnel/burster/classify.hpp"
#include "funnel/burster/continuation.hpp"
#include "funnel/burster/section.hpp"
#include "funnel/burster/simulate.hpp"
#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"
#include "funnel/experiments/builders.hpp"
#include "funnel/experiments/config.hpp"
#include "funnel/experiments/output.hpp"
#include "funnel/experiments/scan.hpp"
#include "funnel/experiments/table.hpp"
#include "funnel/maps/model_map_1d.hpp"

namespace funnel::experiments {

struct Command {
  std::string name;
  std::string help;
  std::vector<std::string> defaults;  // config texts merged in order; file and flags go on top
  std::function<RunOutput(const Config&)> run;
};

namespace defaults {

inline const char* maps = R"([saddle]
rho = 1
nu = 1.5
omega_over_rho = 1

[profile]
kind = sine
a = 0.3

[global]
mu = 0.001
phi_star = 0
n = 1
eps_r = 0.1
eps_phi = 0

[map]
omega_tilde = 0
)";

inline const char* burster = R"([burster]
delta = 0.08
mu_slow = 0.002
c = -1.0
I = 0.8
)";

inline const char* classify = R"([classify]
transient = 5000
t_max = 100000
spike_threshold = 0
prominence = 0.5
gap_factor = 5
cv_tol = 0.05
min_spikes = 20
analyze_attractor = true
lyapunov_T = 10000
rtol = 1e-9
atol = 1e-11
)";

}  // namespace defaults

inline std::string sci(double x, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

namespace commands {

inline RunOutput iterate_map(const Config& c) {
  const std::string kind = c.get_string("iterate-map", "map", "rescaled");
  const std::size_t n = c.get_count("iterate-map", "iterations", 100);
  double z = c.get_double("iterate-map", "z0", 0.5);
  double lift = c.get_double("iterate-map", "phi0", 0.0);
  RunOutput out;
  out.records = Table({"k", "z", "phi", "lift"});
  auto row = [&](std::size_t k, bool has_z, bool has_phi) {
    Table::Row r{{"k", static_cast<std::int64_t>(k)}};
    if (has_z) r.emplace_back("z", z);
    if (has_phi) {
      r.emplace_back("phi", wrap_angle(lift));
      r.emplace_back("lift", lift);
    }
    out.records.add(r);
  };
  if (kind == "model1d") {
    const auto m = model_from(c);
    for (std::size_t k = 0;; ++k) {
      row(k, true, false);
      if (k == n) break;
      z = m(z);
    }
  } else if (kind == "circle" || kind == "sine") {
    Config cc = c;
    cc.set("circle-map", "kind", kind == "circle" ? "profile" : "sine");
    with_circle_map(cc, [&](const auto& f) {
      for (std::size_t k = 0;; ++k) {
        row(k, false, true);
        if (k == n) break;
        lift = f.lift(lift);
      }
      return 0;
    });
  } else {
    with_annulus_map(kind, c, [&](const auto& m) {
      auto pt = AnnulusPoint::from_lift(z, lift);
      for (std::size_t k = 0;; ++k) {
        if (!m.in_domain(pt)) {
          fail(ErrorKind::escape, "orbit left the domain at iterate " + std::to_string(k),
               static_cast<double>(k));
        }
        z = pt.z;
        lift = pt.lift;
        row(k, true, true);
        if (k == n) break;
        pt = m(pt);
      }
      return 0;
    });
  }
  out.summary = {{"map", kind}, {"iterations", n}, {"final_z", z}, {"final_lift", lift}};
  out.message = std::to_string(n) + " iterates of the " + kind + " map, final z = " + sci(z, 6) +
                ", phi = " + sci(wrap_angle(lift), 6);
  return out;
}

inline RunOutput circle_sweep(const Config& c) {
  ScanSpec s;
  s.target = "circle-map";
  s.analysis = "rotation-number";
  Axis a;
  a.name = "omega_tilde";
  a.min = c.get_double("circle-sweep", "omega_tilde_min", 0.0);
  a.max = c.get_double("circle-sweep", "omega_tilde_max", two_pi);
  a.count = c.get_count("circle-sweep", "count", 256);
  s.axes = {a};
  s.workers = c.get_count("circle-sweep", "workers", 0);
  s.base = c;
  const auto r = run_scan(s);
  std::size_t locked = 0;
  for (std::size_t i = 0; i < r.table.size(); ++i) locked += r.table.number(i, "locked") == 1.0;
  std::vector<double> rho(r.table.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = r.table.number(i, "rotation_number");
  const auto plateaus = find_plateaus(rho);
  RunOutput out;
  out.records = r.table;
  out.summary = {{"points", r.table.size()},
                 {"locked_points", locked},
                 {"plateaus", plateaus.size()},
                 {"errors", r.errors}};
  out.message = std::to_string(r.table.size()) + " omega_tilde values, " +
                std::to_string(plateaus.size()) + " mode-locked plateaus covering " +
                std::to_string(locked) + " points";
  out.exit_code = r.errors ? 1 : 0;
  return out;
}

inline InvariantCurveOptions curve_options(const Config& c, const std::string& section) {
  InvariantCurveOptions o;
  o.grid = c.get_count(section, "grid", o.grid);
  o.tol = c.get_double(section, "tol", o.tol);
  o.max_iterations = c.get_count(section, "max_iterations", o.max_iterations);
  return o;
}

inline Table curve_table(const CircleCurve& curve) {
  Table t({"j", "phi", "h"});
  for (std::size_t j = 0; j < curve.size(); ++j) {
    t.add({{"j", static_cast<std::int64_t>(j)}, {"phi", curve.phase(j)}, {"h", curve.heights()[j]}});
  }
  return t;
}

inline RunOutput invariant_curve(const Config& c) {
  const std::string kind = c.get_string("invariant-curve", "map", "rescaled");
  const auto diffeo = check_diffeo_condition(saddle_from(c), profile_from(c));
  return with_annulus_map(kind, c, [&](const auto& m) {
    const auto r = find_invariant_curve(m, curve_options(c, "invariant-curve"));
    RunOutput out;
    out.records = curve_table(r.curve);
    out.summary = {{"map", kind},
                   {"residual", r.residual},
                   {"iterations", r.iterations},
                   {"last_change", r.last_change},
                   {"diffeo_sup", diffeo.sup_value},
                   {"diffeo_satisfied", diffeo.satisfied}};
    out.message = "invariant curve of the " + kind + " map, residual " + sci(r.residual) +
                  " after " + std::to_string(r.iterations) + " iterations";
    return out;
  });
}

inline RunOutput check_prop1(const Config& c) {
  const auto diffeo = check_diffeo_condition(saddle_from(c), profile_from(c));
  const std::string kind = c.get_string("check-prop1", "map", "rescaled");
  return with_annulus_map(kind, c, [&](const auto& m) {
    const auto r = find_invariant_curve(m, curve_options(c, "check-prop1"));
    const std::size_t seeds = c.get_count("check-prop1", "seeds", 50);
    const std::size_t iters = c.get_count("check-prop1", "iterations", 200);
    const double seed_tol = c.get_double("check-prop1", "seed_tol", 1e-6);
    Rng rng(static_cast<std::uint64_t>(c.get_int("check-prop1", "seed", 1)));
    std::uniform_real_distribution<double> uz(0.0, m.z_max()), up(0.0, two_pi);
    std::size_t within = 0;
    double worst = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      auto pt = AnnulusPoint::from_lift(uz(rng), up(rng));
      for (std::size_t k = 0; k < iters; ++k) pt = m(pt);
      const double d = distance_to_curve(r.curve, pt);
      worst = std::max(worst, d);
      within += d < seed_tol;
    }
    RunOutput out;
    out.records = curve_table(r.curve);
    out.summary = {{"condition_sup", diffeo.sup_value},
                   {"condition_satisfied", diffeo.satisfied},
                   {"argmax_phi", diffeo.argmax_phi},
                   {"residual", r.residual},
                   {"iterations", r.iterations},
                   {"seeds", seeds},
                   {"seeds_within_tol", within},
                   {"max_seed_distance", worst}};
    out.message = std::string(diffeo.satisfied ? "condition holds" : "condition fails") +
                  " (sup " + sci(diffeo.sup_value, 4) + "), invariant curve residual " +
                  sci(r.residual) + ", " + std::to_string(within) + "/" + std::to_string(seeds) +
                  " seeds within " + sci(seed_tol) + " after " + std::to_string(iters) +
                  " iterations";
    return out;
  });
}

inline RunOutput check_prop2(const Config& c) {
  const auto iv = c.get_doubles("check-prop2", "interval");
  if (iv.size() != 2) fail(ErrorKind::config, "check-prop2.interval needs two numbers");
  const int m = static_cast<int>(c.get_int("check-prop2", "m", 2));
  const auto r = check_prop2_conditions(saddle_from(c), profile_from(c), iv[0], iv[1], m,
                                        c.get_count("check-prop2", "grid", 4096));
  RunOutput out;
  out.records = Table({"phi1", "phi2", "m", "alternative", "margin", "margin_decreasing",
                       "margin_steep", "pointwise_decreasing", "pointwise_steep"});
  out.records.add({{"phi1", iv[0]},
                   {"phi2", iv[1]},
                   {"m", static_cast<std::int64_t>(m)},
                   {"alternative", std::string(to_string(r.branch))},
                   {"margin", r.margin},
                   {"margin_decreasing", r.margin_decreasing},
                   {"margin_steep", r.margin_steep},
                   {"pointwise_decreasing", static_cast<std::int64_t>(r.pointwise_decreasing)},
                   {"pointwise_steep", static_cast<std::int64_t>(r.pointwise_steep)}});
  out.summary = {{"alternative", to_string(r.branch)}, {"margin", r.margin}};
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  if (r.branch == Prop2Branch::none) {
    os << "no alternative holds, best margin " << r.margin;
  } else {
    os << "alternative " << to_string(r.branch) << ", margin " << r.margin;
  }
  out.message = os.str();
  return out;
}

inline RunOutput check_prop3(const Config& c) {
  const auto p = saddle_from(c);
  const auto prof = profile_from(c);
  const double target = c.get_double("check-prop3", "phi_target", 1.0);
  const auto mus = c.get_doubles("check-prop3", "mus", {1e-2, 1e-3, 1e-4});
  const std::size_t iters = c.get_count("check-prop3", "iterations", 200);
  const double w = omega_tilde_for_fixed_point(p, prof, target);
  const SingularLimitMap limit(p, prof, w, 0);
  const auto fps = find_fixed_points_n0(limit);
  if (fps.empty()) fail(ErrorKind::convergence, "no fixed point of the limit map");
  // The fixed point nearest the target.
  auto seed = *std::min_element(fps.begin(), fps.end(), [&](const auto& a, const auto& b) {
    return std::abs(angle_difference(a.phi_fp, target)) < std::abs(angle_difference(b.phi_fp, target));
  });
  const double predicted = seed.predicted_eigenvalue;
  auto leading = [](const FixedPointReport& f) {
    return std::abs(f.eigenvalues[0]) >= std::abs(f.eigenvalues[1]) ? f.eigenvalues[0]
                                                                     : f.eigenvalues[1];
  };

  RunOutput out;
  out.records = Table({"mu", "phi_fp", "z_fp", "leading_re", "leading_im", "predicted",
                       "eigenvalue_error", "stable", "iterate_distance"});
  auto add = [&](double mu, const FixedPointReport& f, double dist) {
    const auto e = leading(f);
    out.records.add({{"mu", mu},
                     {"phi_fp", f.phi_fp},
                     {"z_fp", f.z_fp},
                     {"leading_re", e.real()},
                     {"leading_im", e.imag()},
                     {"predicted", predicted},
                     {"eigenvalue_error", std::abs(e - std::complex<double>(predicted, 0.0))},
                     {"stable", static_cast<std::int64_t>(f.stable)},
                     {"iterate_distance", dist}});
  };
  // Orbits from a nearby point approach the fixed point.
  auto approach = [&](const auto& m, const FixedPointReport& f) {
    auto pt = AnnulusPoint::from_lift(f.z_fp * 1.05, f.phi_fp + 0.05);
    for (std::size_t k = 0; k < iters; ++k) pt = m(pt);
    return std::hypot(pt.z - f.z_fp, angle_difference(pt.phi, f.phi_fp));
  };
  add(0.0, seed, approach(limit, seed));
  bool decreasing = true;
  double previous = std::numeric_limits<double>::infinity();
  double last_error = 0.0, last_mu = 0.0;
  for (double mu : mus) {
    GlobalMapConfig g = global_from(c);
    g.n = 0;
    g.mu = mu;
    g.phi_star = wrap_angle(w + p.omega_over_rho() * std::log(mu));
    const RescaledMap m(p, prof, g);
    const auto f = refine_fixed_point(m, seed.z_fp, seed.phi_fp, seed.winding, predicted);
    add(mu, f, approach(m, f));
    last_error = std::abs(leading(f) - predicted);
    last_mu = mu;
    decreasing = decreasing && last_error < previous;
    previous = last_error;
  }
  out.summary = {{"phi_target", target},
                 {"omega_tilde", w},
                 {"phi_fp", seed.phi_fp},
                 {"recovery_error", std::abs(angle_difference(seed.phi_fp, target))},
                 {"predicted_eigenvalue", predicted},
                 {"error_decreasing", decreasing},
                 {"stable", seed.stable}};
  out.message = "fixed point recovered within " +
                sci(std::abs(angle_difference(seed.phi_fp, target))) + " of phi = " + sci(target, 6) +
                ", eigenvalue error " + sci(last_error) + " at mu = " + sci(last_mu) +
                (decreasing ? ", decreasing in mu" : ", not monotone in mu") +
                (seed.stable ? ", stable" : ", unstable");
  return out;
}

inline RunOutput horseshoe(const Config& c) {
  const int m = static_cast<int>(c.get_int("horseshoe", "m", 2));
  const std::size_t sequences = c.get_count("horseshoe", "sequences", 100);
  const std::size_t length = c.get_count("horseshoe", "length", 12);
  Rng rng(static_cast<std::uint64_t>(c.get_int("horseshoe", "seed", 1)));
  return with_circle_map(c, [&](const auto& f) {
    const auto r = horseshoe_certify(f, m);
    RunOutput out;
    out.records = Table({"strip", "lo", "hi", "translate"});
    if (!r.certificate) {
      out.summary = {{"certified", false}, {"symbols", r.best_symbols}, {"reason", r.reason}};
      out.message = "no certificate for m = " + std::to_string(m) + ": " + r.reason;
      out.exit_code = 1;
      return out;
    }
    const auto& cert = *r.certificate;
    for (int i = 0; i < cert.m; ++i) {
      out.records.add({{"strip", static_cast<std::int64_t>(i)},
                       {"lo", cert.strips[i].lo},
                       {"hi", cert.strips[i].hi},
                       {"translate", static_cast<std::int64_t>(cert.strips[i].translate)}});
    }
    std::uniform_int_distribution<int> sym(0, m - 1);
    std::size_t shadowed = 0;
    for (std::size_t s = 0; s < sequences; ++s) {
      std::vector<int> seq(length);
      for (int& x : seq) x = sym(rng);
      shadowed += shadow_symbols(f, cert, seq).has_value();
    }
    out.summary = {{"certified", true},
                   {"m", cert.m},
                   {"expansion_lower_bound", cert.expansion_lower_bound},
                   {"entropy_lower_bound", cert.entropy_lower_bound},
                   {"base_lo", cert.base_lo},
                   {"base_hi", cert.base_hi},
                   {"sequences", sequences},
                   {"shadowed", shadowed}};
    out.message = "horseshoe on " + std::to_string(m) + " symbols, expansion >= " +
                  sci(cert.expansion_lower_bound, 4) + ", " + std::to_string(shadowed) + "/" +
                  std::to_string(sequences) + " length-" + std::to_string(length) +
                  " sequences shadowed";
    out.exit_code = shadowed == sequences ? 0 : 1;
    return out;
  });
}

inline RunOutput sine_branches(const Config& c) {
  SineCircleMap f = sine_from(c);
  f.omega_tilde = omega_tilde_from(c);
  const auto b = sine_branch_count(f.amplitude, f.omega_tilde);
  std::int64_t certified = 0;
  double expansion = 0.0;
  if (c.get_bool("sine-branches", "certify", true) && b.full_covers_per_branch >= 2) {
    const auto r = horseshoe_certify(f, b.full_covers_per_branch);
    if (r.certificate) certified = r.certificate->m;
    expansion = r.best_expansion;
  }
  RunOutput out;
  out.records = Table({"amplitude", "omega_tilde", "branches", "full_covers_per_branch",
                       "certified_symbols", "expansion_lower_bound"});
  out.records.add({{"amplitude", f.amplitude},
                   {"omega_tilde", f.omega_tilde},
                   {"branches", static_cast<std::int64_t>(b.branches)},
                   {"full_covers_per_branch", static_cast<std::int64_t>(b.full_covers_per_branch)},
                   {"certified_symbols", certified},
                   {"expansion_lower_bound", expansion}});
  out.summary = {{"branches", b.branches},
                 {"full_covers_per_branch", b.full_covers_per_branch},
                 {"certified_symbols", certified}};
  out.message = std::to_string(b.branches) + " monotone branches, " +
                std::to_string(b.full_covers_per_branch) + " full covers per branch" +
                (certified ? ", horseshoe on " + std::to_string(certified) + " symbols certified"
                           : "");
  return out;
}

inline RunOutput map_lyapunov(const Config& c) {
  const std::string kind = c.get_string("map-lyapunov", "map", "rescaled");
  MapLyapunovOptions o;
  o.iterations = c.get_count("map-lyapunov", "iterations", o.iterations);
  o.transient = c.get_count("map-lyapunov", "transient", o.transient);
  return with_annulus_map(kind, c, [&](const auto& m) {
    const auto seed = AnnulusPoint::from_lift(c.get_double("map-lyapunov", "z0", 0.5),
                                              c.get_double("map-lyapunov", "phi0", 0.0));
    const auto r = lyapunov_exponents_map(m, seed, o);
    RunOutput out;
    out.records = Table({"map", "lambda1", "lambda2", "iterations"});
    out.records.add({{"map", kind},
                     {"lambda1", r.lambda1},
                     {"lambda2", r.lambda2},
                     {"iterations", static_cast<std::int64_t>(r.iterations)}});
    out.summary = {{"lambda1", r.lambda1}, {"lambda2", r.lambda2}};
    out.message = "exponents of the " + kind + " map: " + sci(r.lambda1, 6) + ", " +
                  sci(r.lambda2, 6);
    return out;
  });
}

inline burster::BursterState start_from(const Config& c, const std::string& section,
                                        const burster::BursterParams& p) {
  const std::string s = c.get_string(section, "start", "seed");
  if (s == "seed") return burster::standard_seed(p);
  const auto v = c.get_doubles(section, "start");
  if (v.size() != 3) fail(ErrorKind::config, section + ".start must be 'seed' or three numbers");
  return {v[0], v[1], v[2]};
}

inline burster::SimulationOptions sim_from(const Config& c, const std::string& section) {
  burster::SimulationOptions o;
  o.rtol = c.get_double(section, "rtol", o.rtol);
  o.atol = c.get_double(section, "atol", o.atol);
  return o;
}

inline RunOutput burster_run(const Config& c) {
  const auto p = burster_from(c);
  auto opt = sim_from(c, "burster-run");
  opt.sample_dt = c.get_double("burster-run", "sample_dt", 0.5);
  const double t_end = c.get_double("burster-run", "t_end", 1000.0);
  const auto tr = burster::simulate(start_from(c, "burster-run", p), p, t_end, opt);
  RunOutput out;
  out.records = Table({"t", "v", "w", "y"});
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    out.records.add({{"t", tr.t[i]}, {"v", tr.x[i].v}, {"w", tr.x[i].w}, {"y", tr.x[i].y}});
  }
  const auto& e = tr.back();
  out.summary = {{"samples", tr.t.size()},
                 {"accepted_steps", tr.accepted},
                 {"rejected_steps", tr.rejected},
                 {"final", {e.v, e.w, e.y}}};
  out.message = std::to_string(tr.t.size()) + " samples to t = " + sci(tr.t.back(), 6) +
                ", final (v, w, y) = (" + sci(e.v, 6) + ", " + sci(e.w, 6) + ", " +
                sci(e.y, 6) + ")";
  return out;
}

inline RunOutput burster_section(const Config& c) {
  const auto p = burster_from(c);
  burster::SectionOptions o;
  o.sim = sim_from(c, "burster-section");
  o.t_max = c.get_double("burster-section", "t_max", o.t_max);
  o.discard = c.get_count("burster-section", "discard", o.discard);
  o.max_crossings = c.get_count("burster-section", "max_crossings", o.max_crossings);
  o.min_crossings = c.get_count("burster-section", "min_crossings", o.min_crossings);
  auto plane = burster::default_section(p);
  plane.offset = c.get_double("burster-section", "offset", plane.offset);
  plane.direction = static_cast<int>(c.get_int("burster-section", "direction", plane.direction));
  const auto x0 = burster::advance(start_from(c, "burster-section", p), p,
                                   c.get_double("burster-section", "transient", 5000.0), o.sim);
  const auto r = burster::poincare_section(x0, p, plane, o);
  const auto topo = burster::section_topology(r.crossings, plane.normal, {});
  RunOutput out;
  out.records = Table({"t", "v", "w", "y", "direction"});
  for (const auto& x : r.crossings) {
    out.records.add({{"t", x.t},
                     {"v", x.x(0)},
                     {"w", x.x(1)},
                     {"y", x.x(2)},
                     {"direction", static_cast<std::int64_t>(x.direction)}});
  }
  out.summary = {{"plane_w", plane.offset},
                 {"crossings", r.crossings.size()},
                 {"discarded", r.discarded},
                 {"clusters", topo.clusters},
                 {"closed_curves", topo.closed_curves}};
  out.message = std::to_string(r.crossings.size()) + " crossings of w = " + sci(plane.offset, 6) +
                ", " +
                (topo.clusters ? std::to_string(topo.clusters) + " point clusters"
                               : std::string(topo.closed_curves ? "closed curves" : "no clusters"));
  return out;
}

inline RunOutput burster_classify(const Config& c) {
  const auto p = burster_from(c);
  const auto r = burster::classify_regime(p, regime_options_from(c));
  const auto s = burster::slow_nullcline_position(p);
  RunOutput out;
  auto cols = regime_columns();
  cols.insert(cols.begin(), "c");
  cols.insert(cols.end(), {"equilibrium_structure", "c_tip"});
  out.records = Table(cols);
  auto row = regime_row(r);
  row.insert(row.begin(), {"c", p.c});
  row.emplace_back("equilibrium_structure", s.structure);
  row.emplace_back("c_tip", s.c_tip);
  out.records.add(row);
  out.summary = {{"label", burster::to_string(r.label)}, {"reason", r.reason}};
  out.message = std::string(burster::to_string(r.label)) + " at c = " + sci(p.c, 6) + " (" +
                r.reason + ")";
  return out;
}

inline RunOutput fast_branch(const Config& c) {
  const auto p = burster_from(c);
  const double y0 = c.get_double("fast-branch", "y_min", -0.49);
  const double y1 = c.get_double("fast-branch", "y_max", -0.45);
  burster::ContinuationOptions o;
  o.ds = c.get_double("fast-branch", "ds", o.ds);
  o.max_points = c.get_count("fast-branch", "max_points", o.max_points);
  o.segments = c.get_count("fast-branch", "segments", o.segments);
  const auto eq = burster::fast_equilibrium_branch(
      y0, y1, c.get_count("fast-branch", "equilibrium_steps", 81), p);
  const auto cyc = burster::fast_limit_cycle_continuation(y0, y1, p, o);
  const auto hopf = burster::fast_ah_point(p);
  RunOutput out;
  out.records = Table({"kind", "y", "v", "w", "v_min", "v_max", "period", "amplitude",
                       "multiplier", "stable"});
  for (const auto& [y, e] : eq.equilibria) {
    out.records.add({{"kind", std::string("equilibrium")},
                     {"y", y},
                     {"v", e.v},
                     {"w", e.w},
                     {"stable", static_cast<std::int64_t>(e.stable)}});
  }
  for (const auto& l : cyc.cycles) {
    out.records.add({{"kind", std::string("cycle")},
                     {"y", l.y},
                     {"v_min", l.v_min},
                     {"v_max", l.v_max},
                     {"period", l.period},
                     {"amplitude", l.amplitude},
                     {"multiplier", l.multiplier},
                     {"stable", static_cast<std::int64_t>(std::abs(l.multiplier) < 1.0)}});
  }
  for (const auto& s : cyc.special_points) {
    out.records.add({{"kind", std::string(burster::to_string(s.kind))},
                     {"y", s.y},
                     {"v", s.v},
                     {"amplitude", s.amplitude},
                     {"multiplier", s.multiplier}});
  }
  Json summary = {{"cycles", cyc.cycles.size()},
                  {"hopf_y", hopf.y},
                  {"hopf_v", hopf.v},
                  {"criticality", burster::to_string(hopf.criticality)}};
  std::string msg = std::to_string(cyc.cycles.size()) + " cycles, Hopf at y = " + sci(hopf.y, 8) +
                    " (" + burster::to_string(hopf.criticality) + ")";
  if (const auto f = cyc.fold()) {
    summary["fold_y"] = f->y;
    summary["fold_multiplier"] = f->multiplier;
    msg += ", fold at y = " + sci(f->y, 8) + " with multiplier " + sci(f->multiplier, 10);
  } else {
    msg += ", no fold in range";
  }
  out.summary = summary;
  out.message = msg;
  return out;
}

inline RunOutput scan(const Config& c) {
  const auto r = run_scan(scan_spec_from(c));
  RunOutput out;
  out.records = r.table;
  out.summary = {{"target", r.spec.target},
                 {"analysis", r.spec.analysis},
                 {"points", r.table.size()},
                 {"errors", r.errors}};
  if (r.spec.analysis == "classify-regime") {
    Json counts = Json::object();
    for (std::size_t i = 0; i < r.table.size(); ++i) {
      const std::string l = r.table.text(i, "label");
      if (!l.empty()) counts[l] = counts.value(l, 0) + 1;
    }
    out.summary["labels"] = counts;
  }
  out.message = std::to_string(r.table.size()) + " points of " + r.spec.analysis + " on " +
                r.spec.target + ", " + std::to_string(r.errors) + " errors";
  return out;
}

struct SelfCheck {
  std::string name;
  double expected;
  std::function<double()> actual;
  double tol;
};

inline std::vector<SelfCheck> self_checks() {
  const SaddleFocusParams unit(1.0, 1.5, 1.0);
  const auto flat = ModulationProfile::constant();
  const auto sine03 = ModulationProfile::sine(0.3);
  return {
      {"transition_time(r0=1)", 0.0, [] { return transition_time(1.0, SaddleFocusParams(1, 2, 1)); }, 0.0},
      {"transition_time(r0=1/e)", 1.0,
       [] { return transition_time(std::exp(-1.0), SaddleFocusParams(1, 2, 1)); }, 1e-15},
      {"transition_time(r0=0.5, rho=2)", std::log(2.0) / 2,
       [] { return transition_time(0.5, SaddleFocusParams(2, 3, 1)); }, 1e-15},
      {"local_map z at r0=1/e", std::exp(-2.0),
       [] { return local_map_t0(DiskPoint::from_lift(std::exp(-1.0), 0.0), SaddleFocusParams(1, 2, 3)).z; },
       1e-15},
      {"local_map phi at r0=1/e", 3.0,
       [] { return local_map_t0(DiskPoint::from_lift(std::exp(-1.0), 0.0), SaddleFocusParams(1, 2, 3)).phi; },
       1e-14},
      {"global_map r0, sine profile", 0.02,
       [] {
         GlobalMapConfig g;
         g.mu = 0.01;
         g.eps_r = 0.05;
         return global_map_t1(AnnulusPoint::from_lift(0.2, 0.0), ModulationProfile::sine(0.3), g).r;
       },
       1e-15},
      {"full map z, flat profile", 1e-4,
       [] {
         GlobalMapConfig g;
         g.mu = 0.01;
         g.eps_r = 0.0;
         return FullMap(SaddleFocusParams(1, 2, 1), ModulationProfile::constant(), g)(
                    AnnulusPoint::from_lift(0.0, 0.0)).z;
       },
       1e-17},
      {"full map phi, flat profile", std::log(100.0),
       [] {
         GlobalMapConfig g;
         g.mu = 0.01;
         g.eps_r = 0.0;
         return FullMap(SaddleFocusParams(1, 2, 1), ModulationProfile::constant(), g)(
                    AnnulusPoint::from_lift(0.0, 0.0)).phi;
       },
       1e-13},
      {"singular limit z at phi=pi/2, n=0", std::pow(1.3, 1.5),
       [=] { return SingularLimitMap(unit, sine03, 2.0, 0)(AnnulusPoint::from_lift(0.7, pi / 2)).z; }, 1e-14},
      {"singular limit phi at phi=pi/2, n=0", std::log(1.0 / 1.3) + 2.0,
       [=] { return SingularLimitMap(unit, sine03, 2.0, 0)(AnnulusPoint::from_lift(0.7, pi / 2)).phi; }, 1e-14},
      {"rotation number, rigid quarter turn", 0.25,
       [=] { return rotation_number(CircleMap(unit, flat, two_pi * 0.25), 0.0, 4000).value; }, 1e-12},
      {"diffeo sup, flat profile", 0.0, [=] { return check_diffeo_condition(unit, flat).sup_value; }, 0.0},
      {"stability value a=0.3 phi=0", 0.3, [=] { return check_stability_condition(unit, sine03, 0.0).value; },
       1e-15},
      {"sine covers, A=1", 0.0, [] { return double(sine_branch_count(1.0).full_covers_per_branch); }, 0.0},
      {"sine covers, A=pi", 1.0, [] { return double(sine_branch_count(pi).full_covers_per_branch); }, 0.0},
      {"sine covers, A=10", 3.0, [] { return double(sine_branch_count(10.0).full_covers_per_branch); }, 0.0},
      {"model map fixed point mu=0", 0.0,
       [] { return *model_map_fixed_points({1.0, 2.0, 1.0, 0.0}).stable; }, 0.0},
      {"model map, no fixed point at mu=0.3", 0.0,
       [] { return double(model_map_fixed_points({1.0, 2.0, 1.0, 0.3}).stable.has_value()); }, 0.0},
      {"burster rhs v'", 0.5,
       [] {
         burster::BursterParams p;
         p.c = 0.3;
         p.I = 0.5;
         return burster::rhs({0, 0, 0}, p)(0);
       },
       1e-15},
      {"burster rhs w'", 0.056,
       [] {
         burster::BursterParams p;
         p.c = 0.3;
         p.I = 0.5;
         return burster::rhs({0, 0, 0}, p)(1);
       },
       1e-15},
      {"burster rhs y'", 0.0006,
       [] {
         burster::BursterParams p;
         p.c = 0.3;
         p.I = 0.5;
         return burster::rhs({0, 0, 0}, p)(2);
       },
       1e-15},
      {"fast Hopf v", -std::sqrt(1.0 - 0.8 * 0.08),
       [] { return burster::fast_ah_point(burster::BursterParams{}).v; }, 1e-12},
      {"csv round trip of 0.1", 0.1, [] { return std::stod(format_double(0.1)); }, 0.0},
  };
}

inline RunOutput selftest(const Config&) {
  RunOutput out;
  out.records = Table({"check", "expected", "actual", "tolerance", "pass"});
  std::size_t failed = 0;
  for (const auto& s : self_checks()) {
    double actual = std::nan("");
    try {
      actual = s.actual();
    } catch (const Error&) {
    }
    const bool pass = std::abs(actual - s.expected) <= s.tol;
    failed += !pass;
    out.records.add({{"check", s.name},
                     {"expected", s.expected},
                     {"actual", actual},
                     {"tolerance", s.tol},
                     {"pass", static_cast<std::int64_t>(pass)}});
  }
  out.summary = {{"checks", out.records.size()}, {"failed", failed}};
  out.message = std::to_string(out.records.size() - failed) + "/" +
                std::to_string(out.records.size()) + " example checks pass";
  out.exit_code = failed ? 1 : 0;
  return out;
}

}  // namespace commands

inline const std::vector<Command>& command_table() {
  using namespace commands;
  static const std::vector<Command> table{
      {"iterate-map", "Iterate one of the return maps from a point",
       {defaults::maps, R"([sine]
amplitude = 10

[model1d]
a = 1
nu = 2
alpha = 1
mu = 0.01

[iterate-map]
map = rescaled
z0 = 0.5
phi0 = 0
iterations = 100
)"},
       iterate_map},
      {"circle-sweep", "Rotation number of the circle map over omega_tilde, with mode locking",
       {defaults::maps, R"([sine]
amplitude = 10

[circle-map]
kind = profile
iterations = 5040
transient = 1000
phi0 = 0

[circle-sweep]
omega_tilde_min = 0
omega_tilde_max = 6.283185307179586
count = 256
workers = 0
)"},
       circle_sweep},
      {"invariant-curve", "Invariant curve of a degree-one annulus map by graph transform",
       {defaults::maps, R"([invariant-curve]
map = rescaled
grid = 4096
tol = 1e-10
max_iterations = 10000
)"},
       invariant_curve},
      {"check-prop1", "Diffeomorphism condition, invariant curve and its attraction",
       {defaults::maps, R"([check-prop1]
map = rescaled
grid = 4096
tol = 1e-10
max_iterations = 10000
seeds = 50
iterations = 200
seed_tol = 1e-6
seed = 1
)"},
       check_prop1},
      {"check-prop2", "The two horseshoe hypotheses on an interval",
       {defaults::maps, R"([profile]
a = 0.96

[saddle]
omega_over_rho = 5
)", R"([check-prop2]
interval = 1.5707963267948966 4.71238898038469
m = 2
grid = 4096
)"},
       check_prop2},
      {"check-prop3", "Stable fixed point of the degree-zero map and its eigenvalue",
       {defaults::maps, R"([saddle]
nu = 2
)", R"([check-prop3]
phi_target = 1
mus = 1e-2 1e-3 1e-4
iterations = 200
)"},
       check_prop3},
      {"horseshoe", "Certify a horseshoe for a circle map and shadow random symbol sequences",
       {defaults::maps, R"([profile]
a = 0.96

[saddle]
omega_over_rho = 5
)", R"([sine]
amplitude = 10

[circle-map]
kind = profile

[horseshoe]
m = 2
sequences = 100
length = 12
seed = 1
)"},
       horseshoe},
      {"sine-branches", "Monotone branches and covers of phi -> A sin(phi) + omega_tilde",
       {R"([sine]
amplitude = 10

[map]
omega_tilde = 0

[sine-branches]
certify = true
)"},
       sine_branches},
      {"map-lyapunov", "Lyapunov exponents of an annulus map",
       {defaults::maps, R"([map-lyapunov]
map = rescaled
z0 = 0.5
phi0 = 0
iterations = 10000
transient = 1000
)"},
       map_lyapunov},
      {"burster-run", "Integrate the burster and dump the trajectory",
       {defaults::burster, R"([burster-run]
t_end = 1000
sample_dt = 0.5
start = seed
rtol = 1e-9
atol = 1e-11
)"},
       burster_run},
      {"burster-section", "Poincare section crossings of the burster",
       {defaults::burster, R"([burster-section]
transient = 100000
t_max = 200000
discard = 200
max_crossings = 4000
min_crossings = 10
direction = 0
start = seed
rtol = 1e-9
atol = 1e-11
)"},
       burster_section},
      {"burster-classify", "Regime of the burster at one parameter point",
       {defaults::burster, defaults::classify}, burster_classify},
      {"fast-branch", "Fast-subsystem equilibria and limit-cycle branch",
       {defaults::burster, R"([fast-branch]
y_min = -0.49
y_max = -0.45
equilibrium_steps = 81
ds = 0.02
max_points = 20000
segments = 16
)"},
       fast_branch},
      {"scan", "Parameter scan described by the [scan] section", {"[scan]\nseed = 0\nworkers = 0\n"},
       scan},
      {"selftest", "Run the embedded example table", {}, selftest},
  };
  return table;
}

inline const Command& find_command(const std::string& name) {
  for (const auto& c : command_table())
    if (c.name == name) return c;
  fail(ErrorKind::config, "unknown subcommand '" + name + "'");
}

/// Defaults, then the config file, then flag overrides.
inline Config default_config(const Command& cmd) {
  Config c;
  for (const auto& layer : cmd.defaults) c.merge(Config::parse(layer, cmd.name + " defaults"));
  return c;
}

inline Config resolve_config(const Command& cmd, const Config& file, const Config& flags) {
  Config c = default_config(cmd);
  c.merge(file);
  c.merge(flags);
  return c;
}

/// Runs a subcommand on a resolved config and fills in name and config.
inline RunOutput run_command(const Command& cmd, const Config& resolved) {
  RunOutput out = cmd.run(resolved);
  out.subcommand = cmd.name;
  out.config = resolved;
  return out;
}

}  // namespace funnel::experiments

#endif  // FUNNEL_EXPERIMENTS_COMMANDS_HPP
