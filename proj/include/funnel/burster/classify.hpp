#ifndef FUNNEL_BURSTER_CLASSIFY_HPP
#define FUNNEL_BURSTER_CLASSIFY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "funnel/burster/fast_subsystem.hpp"
#include "funnel/burster/flow_lyapunov.hpp"
#include "funnel/burster/model.hpp"
#include "funnel/burster/section.hpp"
#include "funnel/burster/simulate.hpp"
#include "funnel/core/error.hpp"
#include "funnel/core/linalg.hpp"

namespace funnel::burster {

enum class Regime {
  quiescent,
  tonic_spiking,
  bursting,
  periodic_orbit,  // subthreshold stable cycle, two point clusters on the section
  quasiperiodic_torus,
  chaotic,
  unclassified,
};

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::quiescent: return "quiescent";
    case Regime::tonic_spiking: return "tonic_spiking";
    case Regime::bursting: return "bursting";
    case Regime::periodic_orbit: return "periodic_orbit";
    case Regime::quasiperiodic_torus: return "quasiperiodic_torus";
    case Regime::chaotic: return "chaotic";
    case Regime::unclassified: return "unclassified";
  }
  return "?";
}

struct SectionTopology {
  std::size_t points = 0;
  std::size_t clusters = 0;  // 0 when the points do not form few tight clusters
  double max_cluster_radius = 0.0;
  std::size_t curves = 0;    // groups tested for a closed curve
  bool closed_curves = false;
  double max_gap_ratio = 0.0;  // largest neighbour gap / curve length
  double roughness = 0.0;      // largest radial second difference / mean radius
};

struct RegimeLabel {
  Regime label = Regime::unclassified;
  std::string reason;
  std::size_t spikes = 0;
  std::size_t bursts = 0;
  double median_isi = 0.0;
  double isi_cv = 0.0;
  double max_isi = 0.0;
  double v_range = 0.0;
  std::optional<FlowLyapunov> lyapunov;
  std::optional<SectionTopology> topology;
};

struct AttractorOptions {
  double cluster_tol = 1e-5;
  std::size_t max_clusters = 32;
  std::size_t min_curve_points = 500;
  double gap_tol = 0.05;
  double roughness_tol = 0.05;
  double zero_tol = 0.01;
};

namespace detail {

// Greedy clustering; returns false once more than max_clusters appear.
inline bool cluster_points(const std::vector<Vec3>& pts, double tol, std::size_t max_clusters,
                           std::size_t& count, double& radius) {
  std::vector<Vec3> seeds;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool placed = false;
    for (std::size_t c = 0; c < seeds.size(); ++c) {
      if ((pts[i] - seeds[c]).norm() < 2.0 * tol) {
        members[c].push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) {
      if (seeds.size() == max_clusters) return false;
      seeds.push_back(pts[i]);
      members.push_back({i});
    }
  }
  radius = 0.0;
  for (const auto& m : members) {
    Vec3 mean = Vec3::Zero();
    for (auto i : m) mean += pts[i];
    mean /= static_cast<double>(m.size());
    for (auto i : m) radius = std::max(radius, (pts[i] - mean).norm());
  }
  count = seeds.size();
  return true;
}

struct CurveStats {
  bool closed = false;
  double gap_ratio = 0.0;
  double roughness = 0.0;
};

// Orders planar points by angle around their centroid (axes scaled to unit
// spread) and tests whether that ordering traces one smooth closed curve.
inline CurveStats closed_curve_test(const std::vector<Vec2>& pts, double gap_tol,
                                    double roughness_tol) {
  CurveStats s;
  const std::size_t n = pts.size();
  if (n < 8) return s;
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(n);
  Vec2 sd = Vec2::Zero();
  for (const auto& p : pts) sd += (p - mean).cwiseAbs2();
  sd = (sd / static_cast<double>(n)).cwiseSqrt();
  if (!(sd(0) > 0.0) || !(sd(1) > 0.0)) return s;
  std::vector<std::pair<double, Vec2>> polar;
  polar.reserve(n);
  for (const auto& p : pts) {
    const Vec2 q = (p - mean).cwiseQuotient(sd);
    polar.emplace_back(std::atan2(q(1), q(0)), q);
  }
  std::sort(polar.begin(), polar.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double length = 0.0, gap = 0.0, rmean = 0.0, rmin = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (polar[(i + 1) % n].second - polar[i].second).norm();
    length += d;
    gap = std::max(gap, d);
    const double r = polar[i].second.norm();
    rmean += r;
    rmin = std::min(rmin, r);
  }
  rmean /= static_cast<double>(n);
  double rough = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r0 = polar[(i + n - 1) % n].second.norm();
    const double r1 = polar[i].second.norm();
    const double r2 = polar[(i + 1) % n].second.norm();
    rough = std::max(rough, std::abs(r1 - 0.5 * (r0 + r2)));
  }
  s.gap_ratio = length > 0.0 ? gap / length : 1.0;
  s.roughness = rmean > 0.0 ? rough / rmean : 1.0;
  s.closed = s.gap_ratio < gap_tol && s.roughness < roughness_tol && rmin > 0.1 * rmean;
  return s;
}

// Orthonormal in-plane basis for a section normal.
inline std::pair<Vec3, Vec3> plane_basis(const Vec3& normal) {
  const Vec3 n = normal.normalized();
  const Vec3 helper = std::abs(n(0)) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = (helper - helper.dot(n) * n).normalized();
  return {e1, n.cross(e1)};
}

}  // namespace detail

/// Section topology for crossings of a plane with the given normal. Crossings
/// are split by crossing direction; each group is tested for a closed curve.
inline SectionTopology section_topology(const std::vector<Crossing>& crossings,
                                        const Vec3& normal, const AttractorOptions& opt = {}) {
  SectionTopology topo;
  topo.points = crossings.size();
  if (crossings.empty()) return topo;
  std::vector<Vec3> pts;
  for (const auto& c : crossings) pts.push_back(c.x);
  std::size_t k = 0;
  double radius = 0.0;
  if (detail::cluster_points(pts, opt.cluster_tol, opt.max_clusters, k, radius) &&
      radius < opt.cluster_tol) {
    topo.clusters = k;
    topo.max_cluster_radius = radius;
    return topo;
  }
  if (crossings.size() < opt.min_curve_points) return topo;
  const auto [e1, e2] = detail::plane_basis(normal);
  bool all_closed = true;
  for (int dir : {1, -1, 0}) {
    std::vector<Vec2> group;
    for (const auto& c : crossings)
      if (c.direction == dir) group.emplace_back(c.x.dot(e1), c.x.dot(e2));
    if (group.empty()) continue;
    ++topo.curves;
    const auto s = detail::closed_curve_test(group, opt.gap_tol, opt.roughness_tol);
    topo.max_gap_ratio = std::max(topo.max_gap_ratio, s.gap_ratio);
    topo.roughness = std::max(topo.roughness, s.roughness);
    all_closed = all_closed && s.closed;
  }
  topo.closed_curves = topo.curves > 0 && all_closed;
  return topo;
}

/// Labels an attractor from its section crossings and, when available, its
/// flow exponents. A periodic label needs tight clusters and exponents
/// (0, -, -); a torus needs closed curves and (0, 0, -). When both sources
/// are present and disagree the result is unclassified.
inline RegimeLabel classify_attractor(const std::vector<Crossing>& crossings,
                                      const std::optional<FlowLyapunov>& lyap,
                                      const Vec3& normal = Vec3::UnitY(),
                                      const AttractorOptions& opt = {}) {
  RegimeLabel out;
  out.lyapunov = lyap;
  if (crossings.empty()) {
    out.label = Regime::quiescent;
    out.reason = "no section crossings after the transient";
    return out;
  }
  const auto topo = section_topology(crossings, normal, opt);
  out.topology = topo;
  const double z = opt.zero_tol;
  std::ostringstream why;
  if (topo.clusters > 0) {
    const bool ok = !lyap || (std::abs(lyap->exponents[0]) < z && lyap->exponents[1] < 0.0 &&
                              lyap->exponents[2] < 0.0);
    out.label = ok ? Regime::periodic_orbit : Regime::unclassified;
    why << topo.clusters << " point clusters, radius " << topo.max_cluster_radius;
    if (!ok) why << "; exponents disagree with a periodic orbit";
  } else if (topo.closed_curves) {
    const bool ok = !lyap || (std::abs(lyap->exponents[0]) < z &&
                              std::abs(lyap->exponents[1]) < z && lyap->exponents[2] < -z);
    out.label = ok ? Regime::quasiperiodic_torus : Regime::unclassified;
    why << topo.curves << " closed curves, max gap ratio " << topo.max_gap_ratio;
    if (!ok) why << "; exponents disagree with a torus";
  } else if (lyap && lyap->exponents[0] > z) {
    out.label = Regime::chaotic;
    why << "leading exponent " << lyap->exponents[0];
  } else {
    out.label = Regime::unclassified;
    why << "neither clusters nor closed curves";
  }
  out.reason = why.str();
  return out;
}

struct RegimeOptions {
  double transient = 5e3;
  double t_max = 1e5;  // observation window after the transient
  double spike_threshold = 0.0;
  double prominence = 0.5;
  double gap_factor = 5.0;
  double cv_tol = 0.05;
  std::size_t min_spikes = 20;
  double rest_tol = 1e-6;  // v range below which the run is at rest
  bool analyze_attractor = true;
  SectionOptions section{};
  FlowLyapunovOptions lyapunov{};
  AttractorOptions attractor{};
  SimulationOptions sim{};
};

struct SpikeTrain {
  std::vector<double> times;
  double v_min = 0.0, v_max = 0.0;
  BursterState final_state;
};

/// Upward crossings of the threshold that are preceded, since the previous
/// spike, by a dip of at least `prominence` below it.
inline SpikeTrain detect_spikes(const BursterState& start, const BursterParams& p, double t,
                                const RegimeOptions& opt) {
  SpikeTrain st;
  st.v_min = st.v_max = start.v;
  double dip = start.v;
  auto g = [&](const ode::State<3>& x) { return x[0] - opt.spike_threshold; };
  const auto res = ode::integrate<3>(
      BursterField{p}, 0.0, start.array(), t, opt.sim.integrator(),
      [&](const ode::DenseStep<3>& s) {
        st.v_min = std::min(st.v_min, s.y1[0]);
        st.v_max = std::max(st.v_max, s.y1[0]);
        if (const auto tc = ode::locate_crossing(s, g, +1)) {
          if (dip <= opt.spike_threshold - opt.prominence) {
            st.times.push_back(*tc);
            dip = opt.spike_threshold;
          }
        }
        dip = std::min({dip, s.y0[0], s.y1[0]});
        return true;
      });
  st.final_state = BursterState::from(res.y);
  return st;
}

namespace detail {

inline RegimeLabel attractor_from(const BursterState& x, const BursterParams& p,
                                  const RegimeOptions& opt) {
  const auto plane = default_section(p);
  auto sec = section_crossings(BursterField{p}, x.array(), plane, opt.section);
  FlowLyapunovOptions lo = opt.lyapunov;
  lo.transient = 0.0;
  const auto lyap = flow_lyapunov(BursterState::from(sec.final_state), p, lo);
  return classify_attractor(sec.crossings, lyap, plane.normal, opt.attractor);
}

}  // namespace detail

/// Regime of the burster at parameters p, from the standard seed.
inline RegimeLabel classify_regime(const BursterParams& p, const RegimeOptions& opt = {}) {
  p.validate();
  const BursterState x0 = advance(standard_seed(p), p, opt.transient, opt.sim);
  const auto train = detect_spikes(x0, p, opt.t_max, opt);
  RegimeLabel out;
  out.spikes = train.times.size();
  out.v_range = train.v_max - train.v_min;

  if (train.times.empty()) {
    if (out.v_range < opt.rest_tol) {
      out.label = Regime::quiescent;
      out.reason = "no spikes, v at rest";
      return out;
    }
    if (!opt.analyze_attractor) {
      out.label = Regime::unclassified;
      out.reason = "subthreshold oscillation, attractor analysis disabled";
      return out;
    }
    auto a = detail::attractor_from(train.final_state, p, opt);
    // A slowly damped focus is quiescent: every exponent clearly negative.
    if (a.lyapunov && a.lyapunov->exponents[0] < -1e-3) {
      a.label = Regime::quiescent;
      a.reason = "no spikes, all flow exponents negative";
    }
    a.spikes = 0;
    a.v_range = out.v_range;
    return a;
  }
  if (train.times.size() < opt.min_spikes) {
    std::ostringstream os;
    os << "only " << train.times.size() << " spikes in t_max = " << opt.t_max
       << " (need " << opt.min_spikes << ")";
    fail(ErrorKind::insufficient_data, os.str(), static_cast<double>(train.times.size()));
  }

  std::vector<double> isi;
  for (std::size_t i = 1; i < train.times.size(); ++i)
    isi.push_back(train.times[i] - train.times[i - 1]);
  std::vector<double> sorted = isi;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  out.median_isi = sorted[sorted.size() / 2];
  const double mean = std::accumulate(isi.begin(), isi.end(), 0.0) / isi.size();
  double var = 0.0;
  for (double d : isi) var += (d - mean) * (d - mean);
  out.isi_cv = std::sqrt(var / isi.size()) / mean;
  out.max_isi = *std::max_element(isi.begin(), isi.end());
  const double gap = opt.gap_factor * out.median_isi;
  out.bursts = 1;
  for (double d : isi)
    if (d > gap) ++out.bursts;

  std::ostringstream why;
  if (out.max_isi > gap) {
    out.label = Regime::bursting;
    why << out.bursts << " spike clusters separated by gaps > " << opt.gap_factor
        << " x median ISI";
  } else if (out.isi_cv < opt.cv_tol) {
    out.label = Regime::tonic_spiking;
    why << "ISI coefficient of variation " << out.isi_cv;
  } else if (opt.analyze_attractor) {
    // Irregular spiking without gaps: let the section and exponents decide.
    const auto a = detail::attractor_from(train.final_state, p, opt);
    out.lyapunov = a.lyapunov;
    out.topology = a.topology;
    // A periodic multi-spike pattern fits neither the tonic nor the burst rule.
    out.label = a.label == Regime::periodic_orbit ? Regime::unclassified : a.label;
    why << "irregular spiking (ISI CV " << out.isi_cv << "); " << a.reason;
  } else {
    out.label = Regime::unclassified;
    why << "irregular spiking, attractor analysis disabled";
  }
  out.reason = why.str();
  return out;
}

/// Where the slow nullcline v = c - y meets the fast equilibrium surface,
/// relative to the fast Hopf tip.
struct SlowNullclineReport {
  BursterState equilibrium;
  double residual = 0.0;
  std::array<std::complex<double>, 3> eigenvalues{};
  double c_tip = 0.0;  // c at which the equilibrium sits at the fast Hopf point
  double v_tip = 0.0;
  bool right_of_tip = false;     // c > c_tip
  bool predicted_stable = false;  // fast part stable when c < c_tip
  bool stable = false;
  std::size_t unstable_dims = 0;
  std::string structure;  // stable_focus | stable_node | saddle_focus | saddle | other
};

/// The c at which the full equilibrium coincides with the fast Hopf point.
inline double c_at_fast_hopf(const BursterParams& p) {
  const double v = -fast_trace_zero_v(p.delta);
  // Full equilibrium: y + I = drive(v) and y = c - v.
  return drive_at_equilibrium(v) + v - p.I;
}

inline SlowNullclineReport slow_nullcline_position(const BursterParams& p) {
  p.validate();
  SlowNullclineReport r;
  r.equilibrium = full_equilibrium(p);
  r.residual = rhs(r.equilibrium, p).cwiseAbs().maxCoeff();
  r.eigenvalues = eigenvalues(jacobian(r.equilibrium, p));
  r.v_tip = -fast_trace_zero_v(p.delta);
  r.c_tip = c_at_fast_hopf(p);
  r.right_of_tip = p.c > r.c_tip;
  r.predicted_stable = !r.right_of_tip;
  std::size_t complex_unstable = 0;
  for (const auto& e : r.eigenvalues) {
    if (e.real() > 0.0) {
      ++r.unstable_dims;
      if (e.imag() != 0.0) ++complex_unstable;
    }
  }
  r.stable = r.unstable_dims == 0;
  const bool has_complex = std::any_of(r.eigenvalues.begin(), r.eigenvalues.end(),
                                       [](const auto& e) { return e.imag() != 0.0; });
  if (r.stable) {
    r.structure = has_complex ? "stable_focus" : "stable_node";
  } else if (r.unstable_dims == 2) {
    r.structure = complex_unstable == 2 ? "saddle_focus" : "saddle";
  } else {
    r.structure = "other";
  }
  return r;
}

}  // namespace funnel::burster

#endif  // FUNNEL_BURSTER_CLASSIFY_HPP
