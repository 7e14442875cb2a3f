#ifndef FUNNEL_ANALYSIS_HORSESHOE_HPP
#define FUNNEL_ANALYSIS_HORSESHOE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"
#include "funnel/maps/annulus_maps.hpp"

namespace funnel {

enum class Prop2Branch { none = 0, decreasing = 1, steep = 2 };

inline const char* to_string(Prop2Branch b) {
  switch (b) {
    case Prop2Branch::decreasing: return "1";
    case Prop2Branch::steep: return "2";
    case Prop2Branch::none: break;
  }
  return "none";
}

struct Prop2Result {
  Prop2Branch branch = Prop2Branch::none;
  double margin = 0.0;             // of the alternative that holds, else the best one
  double margin_decreasing = 0.0;  // (w/r) ln(a1/a2) - 2 pi (m+1)
  double margin_steep = 0.0;       // (w/r) ln(a2/a1) - 2(phi2-phi1) - 2 pi (m+1)
  bool pointwise_decreasing = false;  // alpha' < -eps on the open interval
  bool pointwise_steep = false;       // (w/r) alpha'/alpha > 2 + eps on it
};

/// The two alternative hypotheses for a horseshoe on [phi1, phi2]. Pointwise
/// conditions are checked on `grid` interior points with margin `eps`.
inline Prop2Result check_prop2_conditions(const SaddleFocusParams& p,
                                          const ModulationProfile& profile, double phi1,
                                          double phi2, int m, std::size_t grid = 4096,
                                          double eps = 1e-9) {
  require(phi1 < phi2, ErrorKind::domain, "prop2: need phi1 < phi2");
  require(m >= 2, ErrorKind::domain, "prop2: need m >= 2");
  const double kappa = p.omega_over_rho();
  Prop2Result out;
  out.pointwise_decreasing = true;
  out.pointwise_steep = true;
  for (std::size_t j = 1; j < grid; ++j) {
    const double phi = phi1 + (phi2 - phi1) * static_cast<double>(j) / static_cast<double>(grid);
    if (!(profile.alpha_prime(phi) < -eps)) out.pointwise_decreasing = false;
    if (!(kappa * profile.log_slope(phi) > 2.0 + eps)) out.pointwise_steep = false;
  }
  const double log_ratio = std::log(profile.alpha(phi1) / profile.alpha(phi2));
  const double target = two_pi * (m + 1);
  out.margin_decreasing = kappa * log_ratio - target;
  out.margin_steep = -kappa * log_ratio - 2.0 * (phi2 - phi1) - target;
  if (out.pointwise_decreasing && out.margin_decreasing > 0.0) {
    out.branch = Prop2Branch::decreasing;
    out.margin = out.margin_decreasing;
  } else if (out.pointwise_steep && out.margin_steep > 0.0) {
    out.branch = Prop2Branch::steep;
    out.margin = out.margin_steep;
  } else {
    out.margin = std::max(out.margin_decreasing, out.margin_steep);
  }
  return out;
}

struct Strip {
  double lo = 0.0;  // lifted phases, lo < hi
  double hi = 0.0;
  int translate = 0;  // F(strip) = base + 2 pi translate
};

struct HorseshoeCertificate {
  int m = 0;
  double base_lo = 0.0;  // base interval B; every strip lies in B
  double base_hi = 0.0;
  std::vector<Strip> strips;
  double expansion_lower_bound = 0.0;  // min |F'| on B minus the Lipschitz slack
  double lipschitz_slack = 0.0;
  std::vector<std::vector<bool>> covering;  // covering[i][j]: F(S_i) covers S_j
  double entropy_lower_bound = 0.0;         // ln m
  bool ok() const {
    if (m < 2 || expansion_lower_bound <= 1.0) return false;
    for (const auto& row : covering) {
      for (bool c : row) {
        if (!c) return false;
      }
    }
    return true;
  }
};

struct HorseshoeOptions {
  std::size_t grid = 4096;        // derivative sampling on one period
  std::size_t search_grid = 256;  // candidate endpoints per expanding run
  double min_margin = 0.0;        // required expansion_lower_bound - 1
  double slack_safety = 1.25;     // inflation of the grid second-derivative bound
};

struct HorseshoeSearch {
  std::optional<HorseshoeCertificate> certificate;
  int best_symbols = 0;
  double best_expansion = 0.0;
  std::string reason;
};

namespace detail {

template <LiftedCircleMap M>
double invert_monotone(const M& f, double lo, double hi, double target) {
  double flo = f.lift(lo) - target;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f.lift(mid) - target;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Searches for m disjoint strips on which the circle map is monotone and
/// uniformly expanding, each mapped onto a translate of a common base interval
/// that contains all of them. That gives an all-ones covering matrix.
template <LiftedCircleMap M>
HorseshoeSearch horseshoe_certify(const M& f, int m, const HorseshoeOptions& opt = {}) {
  require(m >= 2, ErrorKind::domain, "horseshoe needs m >= 2");
  const std::size_t g = opt.grid;
  const double h = two_pi / static_cast<double>(g);
  std::vector<double> d(g);
  for (std::size_t j = 0; j < g; ++j) d[j] = f.derivative(h * static_cast<double>(j));
  double second = 0.0;
  for (std::size_t j = 0; j < g; ++j) {
    second = std::max(second, std::abs(d[(j + 1) % g] - d[j]) / h);
  }
  const double slack = 0.5 * h * opt.slack_safety * second;

  // Grid points whose derivative clears 1 + margin after the slack, split into
  // cyclic runs of one sign.
  auto good = [&](std::size_t j, int sign) {
    return sign * d[j] - slack > 1.0 + opt.min_margin;
  };
  struct Run {
    std::size_t start;
    std::size_t length;  // number of grid points
    int sign;
  };
  std::vector<Run> runs;
  std::vector<bool> used(g, false);
  for (int sign : {+1, -1}) {
    std::fill(used.begin(), used.end(), false);
    for (std::size_t j = 0; j < g; ++j) {
      if (used[j] || !good(j, sign)) continue;
      std::size_t a = j;
      std::size_t len = 1;
      used[j] = true;
      while (len < g && good((a + g - 1) % g, sign) && !used[(a + g - 1) % g]) {
        a = (a + g - 1) % g;
        used[a] = true;
        ++len;
      }
      while (len < g && good((j + 1) % g, sign) && !used[(j + 1) % g]) {
        j = (j + 1) % g;
        used[j] = true;
        ++len;
        if (j == 0) break;
      }
      if (len >= 2) runs.push_back({a, len, sign});
    }
  }

  HorseshoeSearch out;
  if (runs.empty()) {
    out.reason = "no interval with |F'| > 1 + margin";
    return out;
  }
  struct Best {
    int count = 0;
    double lo = 0.0, hi = 0.0, expansion = 0.0;
    int k0 = 0;
  } best;
  for (const Run& run : runs) {
    const double run_lo = h * static_cast<double>(run.start);
    const double run_len = h * static_cast<double>(run.length - 1);
    // Base intervals shorter than a full turn keep the translates disjoint.
    const std::size_t s = std::max<std::size_t>(2, std::min(opt.search_grid, run.length));
    std::vector<double> xs(s), fs(s);
    for (std::size_t i = 0; i < s; ++i) {
      xs[i] = run_lo + run_len * static_cast<double>(i) / static_cast<double>(s - 1);
      fs[i] = f.lift(xs[i]);
    }
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t k = i + 1; k < s; ++k) {
        const double lo = xs[i], hi = xs[k];
        if (hi - lo >= two_pi) break;
        const double flo = std::min(fs[i], fs[k]);
        const double fhi = std::max(fs[i], fs[k]);
        // Integers t with [lo, hi] + 2 pi t inside [flo, fhi].
        const double t_min = std::ceil((flo - lo) / two_pi);
        const double t_max = std::floor((fhi - hi) / two_pi);
        const int count = static_cast<int>(std::max(0.0, t_max - t_min + 1.0));
        if (count > best.count || (count == best.count && count > 0 && hi - lo > best.hi - best.lo)) {
          best.count = count;
          best.lo = lo;
          best.hi = hi;
          best.k0 = static_cast<int>(t_min);
        }
      }
    }
  }
  out.best_symbols = best.count;
  if (best.count < m) {
    std::ostringstream os;
    os << "only " << best.count << " symbols fit (requested " << m << ")";
    out.reason = os.str();
    return out;
  }

  HorseshoeCertificate cert;
  cert.m = m;
  cert.base_lo = best.lo;
  cert.base_hi = best.hi;
  cert.lipschitz_slack = slack;
  double min_abs = std::numeric_limits<double>::infinity();
  const auto j0 = static_cast<long>(std::floor(best.lo / h));
  const auto j1 = static_cast<long>(std::ceil(best.hi / h));
  for (long j = j0; j <= j1; ++j) {
    min_abs = std::min(min_abs, std::abs(d[static_cast<std::size_t>(((j % static_cast<long>(g)) + static_cast<long>(g)) % static_cast<long>(g))]));
  }
  cert.expansion_lower_bound = min_abs - slack;
  out.best_expansion = cert.expansion_lower_bound;
  for (int i = 0; i < m; ++i) {
    const int t = best.k0 + i;
    const double a = detail::invert_monotone(f, best.lo, best.hi, best.lo + two_pi * t);
    const double b = detail::invert_monotone(f, best.lo, best.hi, best.hi + two_pi * t);
    cert.strips.push_back({std::min(a, b), std::max(a, b), t});
  }
  std::sort(cert.strips.begin(), cert.strips.end(),
            [](const Strip& x, const Strip& y) { return x.lo < y.lo; });
  cert.covering.assign(m, std::vector<bool>(m, false));
  const double tol = 1e-9;
  for (int i = 0; i < m; ++i) {
    const double ya = f.lift(cert.strips[i].lo);
    const double yb = f.lift(cert.strips[i].hi);
    const double lo = std::min(ya, yb), hi = std::max(ya, yb);
    for (int j = 0; j < m; ++j) {
      const double shift = two_pi * cert.strips[i].translate;
      cert.covering[i][j] = lo <= cert.strips[j].lo + shift + tol &&
                            hi >= cert.strips[j].hi + shift - tol;
    }
  }
  cert.entropy_lower_bound = std::log(static_cast<double>(m));
  if (!cert.ok()) {
    out.reason = cert.expansion_lower_bound <= 1.0 ? "expansion bound not above 1"
                                                   : "covering relation failed";
    return out;
  }
  out.certificate = std::move(cert);
  return out;
}

/// A point in strips[symbols[0]] whose orbit visits the prescribed strips in
/// order (modulo 2 pi), by nested preimages. Returns the final interval.
template <LiftedCircleMap M>
std::optional<std::pair<double, double>> shadow_symbols(const M& f,
                                                        const HorseshoeCertificate& cert,
                                                        const std::vector<int>& symbols) {
  if (symbols.empty()) return std::nullopt;
  for (int s : symbols) {
    require(s >= 0 && s < cert.m, ErrorKind::domain, "symbol out of range");
  }
  double lo = cert.strips[symbols.back()].lo;
  double hi = cert.strips[symbols.back()].hi;
  for (std::size_t k = symbols.size() - 1; k-- > 0;) {
    const Strip& s = cert.strips[symbols[k]];
    const double shift = two_pi * s.translate;
    const double a = detail::invert_monotone(f, s.lo, s.hi, lo + shift);
    const double b = detail::invert_monotone(f, s.lo, s.hi, hi + shift);
    lo = std::min(a, b);
    hi = std::max(a, b);
  }
  // Forward check: the midpoint orbit must sit inside every strip, the
  // endpoint orbits up to rounding amplified by the accumulated expansion.
  double xm = 0.5 * (lo + hi), x0 = lo, x1 = hi;
  double grow0 = 1.0, grow1 = 1.0;
  const double eps = 64.0 * std::numeric_limits<double>::epsilon();
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    const Strip& s = cert.strips[symbols[k]];
    auto inside = [&](double x, double tol) {
      const double r = s.lo + wrap_angle(x - s.lo);
      return r <= s.hi + tol || r >= s.lo + two_pi - tol;
    };
    const double scale = eps * std::max(1.0, std::abs(s.hi));
    if (!inside(xm, 0.0) || !inside(x0, scale * grow0) || !inside(x1, scale * grow1)) {
      return std::nullopt;
    }
    grow0 *= std::max(1.0, std::abs(f.derivative(x0)));
    grow1 *= std::max(1.0, std::abs(f.derivative(x1)));
    xm = f.lift(xm);
    x0 = f.lift(x0);
    x1 = f.lift(x1);
  }
  return std::make_pair(lo, hi);
}

}  // namespace funnel

#endif  // FUNNEL_ANALYSIS_HORSESHOE_HPP
