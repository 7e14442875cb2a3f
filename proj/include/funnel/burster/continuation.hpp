#ifndef FUNNEL_BURSTER_CONTINUATION_HPP
#define FUNNEL_BURSTER_CONTINUATION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "funnel/burster/fast_subsystem.hpp"
#include "funnel/burster/model.hpp"
#include "funnel/core/error.hpp"
#include "funnel/core/linalg.hpp"
#include "funnel/ode/dopri5.hpp"

namespace funnel::burster {

/// The unique fast equilibrium for drive J (the drive is monotone in v).
inline double fast_equilibrium_v(double drive) {
  const auto r = depressed_cubic_roots(3.0 / recovery_gain - 3.0,
                                       3.0 * recovery_offset / recovery_gain - 3.0 * drive);
  return r.front();
}

struct LimitCycle {
  double y = 0.0;          // frozen slow variable
  double period = 0.0;
  double amplitude = 0.0;  // v0 - v_eq on the anchor ray w = w_eq, v > v_eq
  // Nontrivial Floquet multiplier (det of the monodromy matrix; the trivial
  // one is 1) and the same number from the integrated divergence.
  double multiplier = 0.0;
  double multiplier_from_divergence = 0.0;
  double closure = 0.0;
  double v_min = 0.0, v_max = 0.0;
  std::vector<std::array<double, 2>> samples;  // (v, w) uniformly in phase
};

enum class SpecialPointKind { hopf, fold };

inline const char* to_string(SpecialPointKind k) {
  return k == SpecialPointKind::hopf ? "hopf" : "fold";
}

struct SpecialPoint {
  SpecialPointKind kind = SpecialPointKind::fold;
  double y = 0.0;
  double v = 0.0;  // equilibrium voltage at that y
  double multiplier = 0.0;
  double amplitude = 0.0;
  std::size_t index = 0;  // sample index after which the point lies
};

enum class FastBranchKind { equilibrium_branch, limit_cycle_branch };

/// One branch of fast-subsystem objects over the frozen slow variable.
/// Equilibrium branches are ordered in y. A cycle branch is ordered along
/// arclength, so y is monotone between consecutive special points.
struct FastBranch {
  FastBranchKind kind = FastBranchKind::limit_cycle_branch;
  std::vector<std::pair<double, FastEquilibrium>> equilibria;
  std::vector<LimitCycle> cycles;
  std::vector<SpecialPoint> special_points;

  std::optional<SpecialPoint> fold() const {
    for (const auto& s : special_points)
      if (s.kind == SpecialPointKind::fold) return s;
    return std::nullopt;
  }
  std::optional<SpecialPoint> hopf() const {
    for (const auto& s : special_points)
      if (s.kind == SpecialPointKind::hopf) return s;
    return std::nullopt;
  }
};

inline FastBranch fast_equilibrium_branch(double y_min, double y_max, std::size_t steps,
                                          const BursterParams& p) {
  require(steps >= 2 && y_max > y_min, ErrorKind::domain, "need y_max > y_min, steps >= 2");
  FastBranch b;
  b.kind = FastBranchKind::equilibrium_branch;
  for (std::size_t k = 0; k < steps; ++k) {
    const double y = y_min + (y_max - y_min) * k / (steps - 1);
    for (const auto& e : fast_equilibria(y, p)) b.equilibria.emplace_back(y, e);
  }
  return b;
}

struct ContinuationOptions {
  double initial_amplitude = 1e-3;
  double ds = 0.02;
  double ds_max = 0.1;
  int max_halvings = 10;
  std::size_t max_points = 20000;
  std::size_t segments = 16;  // multiple shooting; canard cycles are too
                              // sensitive for a single segment
  double newton_tol = 1e-10;
  int newton_max_iter = 10;
  double fold_tol = 1e-8;  // arclength bracket
  double max_multiplier_jump = 0.1;  // between adjacent samples
  double period_scale = 10.0;  // weight of T in the arclength metric
  std::size_t samples_per_cycle = 64;
  double rtol = 1e-11;
  double atol = 1e-13;
};

namespace detail {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Flow plus monodromy, drive sensitivity and the divergence integral.
struct FastVariational {
  double delta;
  double drive;
  void operator()(double, const ode::State<9>& x, ode::State<9>& dx) const {
    const double v = x[0];
    dx[0] = v - v * v * v / 3.0 - x[1] + drive;
    dx[1] = delta * (recovery_offset + v - recovery_gain * x[1]);
    const double a00 = 1.0 - v * v, a10 = delta, a11 = -recovery_gain * delta;
    for (int c = 0; c < 2; ++c) {
      const double m0 = x[2 + c], m1 = x[4 + c];
      dx[2 + c] = a00 * m0 - m1;
      dx[4 + c] = a10 * m0 + a11 * m1;
    }
    dx[6] = a00 * x[6] - x[7] + 1.0;
    dx[7] = a10 * x[6] + a11 * x[7];
    dx[8] = a00 + a11;
  }
};

inline ode::IntegratorOptions shoot_options(const ContinuationOptions& o) {
  ode::IntegratorOptions opt;
  opt.rtol = o.rtol;
  opt.atol = o.atol;
  opt.blowup = 50.0;
  opt.guard_dims = 2;
  return opt;
}

// Unknowns u = (a, x_1, ..., x_{K-1}, T, J); x_0 sits on the anchor ray.
struct Layout {
  std::size_t K;
  std::size_t size() const { return 2 * K + 1; }
  std::size_t x(std::size_t k) const { return 1 + 2 * (k - 1); }
  std::size_t T() const { return 2 * K - 1; }
  std::size_t J() const { return 2 * K; }
};

inline Vec2 anchor(double a, double drive) {
  const double ve = fast_equilibrium_v(drive);
  return {ve + a, (recovery_offset + ve) / recovery_gain};
}

inline Vec2 anchor_dj(double drive) {
  const double ve = fast_equilibrium_v(drive);
  const double d = 1.0 / (ve * ve + 0.25);
  return {d, d / recovery_gain};
}

struct ShootResult {
  VecX residual;
  MatX jac;
  double multiplier = 1.0;  // product of segment determinants
  double divergence_integral = 0.0;
  double v_min = 0.0, v_max = 0.0;
};

inline Vec2 segment_start(const VecX& u, const Layout& L, std::size_t k) {
  if (k == 0) return anchor(u(0), u(L.J()));
  return {u(L.x(k)), u(L.x(k) + 1)};
}

inline ShootResult shoot(const VecX& u, const BursterParams& p, const ContinuationOptions& o) {
  const Layout L{o.segments};
  const std::size_t K = L.K;
  const double T = u(L.T()), drive = u(L.J());
  const Vec2 dx0 = anchor_dj(drive);
  ShootResult r;
  r.residual = VecX::Zero(2 * K);
  r.jac = MatX::Zero(2 * K, L.size());
  r.v_min = r.v_max = segment_start(u, L, 0)(0);
  const auto opt = shoot_options(o);
  for (std::size_t k = 0; k < K; ++k) {
    const Vec2 xk = segment_start(u, L, k);
    ode::State<9> s{xk(0), xk(1), 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
    const auto res = ode::integrate<9>(FastVariational{p.delta, drive}, 0.0, s, T / K, opt,
                                       [&](const ode::DenseStep<9>& st) {
                                         r.v_min = std::min(r.v_min, st.y1[0]);
                                         r.v_max = std::max(r.v_max, st.y1[0]);
                                         return true;
                                       });
    const auto& y = res.y;
    Mat2 m;
    m << y[2], y[3], y[4], y[5];
    const Vec2 sens(y[6], y[7]);
    r.multiplier *= m.determinant();
    r.divergence_integral += y[8];
    const Vec2 end = k + 1 < K ? segment_start(u, L, k + 1) : segment_start(u, L, 0);
    const std::size_t row = 2 * k;
    r.residual.segment<2>(row) = Vec2(y[0], y[1]) - end;
    if (k == 0) {
      r.jac.block<2, 1>(row, 0) += m.col(0);
      r.jac.block<2, 1>(row, L.J()) += m * dx0;
    } else {
      r.jac.block<2, 2>(row, L.x(k)) += m;
    }
    if (k + 1 < K) {
      r.jac.block<2, 2>(row, L.x(k + 1)) -= Mat2::Identity();
    } else {
      r.jac(row, 0) -= 1.0;
      r.jac.block<2, 1>(row, L.J()) -= dx0;
    }
    ode::State<2> f;
    FastField{p.delta, drive}(0.0, {y[0], y[1]}, f);
    r.jac.block<2, 1>(row, L.T()) += Vec2(f[0], f[1]) / static_cast<double>(K);
    r.jac.block<2, 1>(row, L.J()) += sens;
  }
  return r;
}

// Unknown vector for a cycle guess, interior points by plain integration.
inline VecX initial_unknowns(double a, double T, double drive, const BursterParams& p,
                             const ContinuationOptions& o) {
  const Layout L{o.segments};
  VecX u = VecX::Zero(L.size());
  u(0) = a;
  u(L.T()) = T;
  u(L.J()) = drive;
  const Vec2 x0 = anchor(a, drive);
  ode::State<2> x{x0(0), x0(1)};
  for (std::size_t k = 1; k < L.K; ++k) {
    x = ode::integrate<2>(FastField{p.delta, drive}, 0.0, x, T / L.K, shoot_options(o)).y;
    u(L.x(k)) = x[0];
    u(L.x(k) + 1) = x[1];
  }
  return u;
}

struct BranchPoint {
  VecX u;
  ShootResult shot;
};

}  // namespace detail

/// Continues fast-subsystem limit cycles in the frozen slow variable, starting
/// at the lower Andronov-Hopf point and following the branch by
/// pseudo-arclength through its fold(s). Cycles are found by multiple
/// shooting with the period as unknown, anchored on the ray w = w_eq, v > v_eq.
/// Stops when y leaves [y_min, y_max], the amplitude shrinks back below the
/// starting amplitude (the upper Hopf point), or max_points is reached.
inline FastBranch fast_limit_cycle_continuation(double y_min, double y_max,
                                                const BursterParams& p,
                                                const ContinuationOptions& o = {}) {
  using detail::MatX;
  using detail::VecX;
  p.validate();
  require(y_max > y_min, ErrorKind::domain, "need y_max > y_min");
  require(o.segments >= 1, ErrorKind::domain, "need at least one shooting segment");
  const HopfPoint h = fast_ah_point(p, HopfProbeOptions{{1e-3}, 1e-3, 2e3, 0.5});
  require(h.y > y_min && h.y < y_max, ErrorKind::domain,
          "y range does not contain the fast Hopf point");
  const detail::Layout L{o.segments};
  const std::size_t n_u = L.size();
  VecX wgt = VecX::Constant(n_u, 1.0 / static_cast<double>(L.K));
  wgt(0) = 1.0;
  wgt(L.T()) = 1.0 / (o.period_scale * o.period_scale);
  wgt(L.J()) = 1.0;
  auto wdot = [&](const VecX& x, const VecX& y) {
    return (wgt.array() * x.array() * y.array()).sum();
  };

  // Newton with the amplitude held fixed, used next to the Hopf point.
  auto solve_fixed_a = [&](VecX u) -> std::optional<detail::BranchPoint> {
    for (int it = 0; it < 30; ++it) {
      const auto sh = detail::shoot(u, p, o);
      const MatX m = sh.jac.rightCols(n_u - 1);
      const VecX d = m.fullPivLu().solve(-sh.residual);
      if (!d.allFinite()) return std::nullopt;
      if (sh.residual.lpNorm<Eigen::Infinity>() < o.newton_tol &&
          d.lpNorm<Eigen::Infinity>() < 1e-11) {
        return detail::BranchPoint{u, sh};
      }
      u.tail(n_u - 1) += d;
    }
    return std::nullopt;
  };

  auto to_cycle = [&](const detail::BranchPoint& bp) {
    LimitCycle c;
    c.amplitude = bp.u(0);
    c.period = bp.u(L.T());
    c.y = bp.u(L.J()) - p.I;
    c.multiplier = bp.shot.multiplier;
    c.multiplier_from_divergence = std::exp(bp.shot.divergence_integral);
    c.closure = bp.shot.residual.lpNorm<Eigen::Infinity>();
    c.v_min = bp.shot.v_min;
    c.v_max = bp.shot.v_max;
    const std::size_t per = std::max<std::size_t>(1, o.samples_per_cycle / L.K);
    const double dt = c.period / static_cast<double>(L.K * per);
    for (std::size_t k = 0; k < L.K; ++k) {
      const Vec2 xk = detail::segment_start(bp.u, L, k);
      ode::State<2> x{xk(0), xk(1)};
      c.samples.push_back({x[0], x[1]});
      for (std::size_t j = 1; j < per; ++j) {
        x = ode::integrate<2>(FastField{p.delta, bp.u(L.J())}, 0.0, x, dt,
                              detail::shoot_options(o)).y;
        c.samples.push_back({x[0], x[1]});
      }
    }
    return c;
  };

  // Start on the small cycle next to the Hopf point.
  const double a0 = o.initial_amplitude;
  const double j_ah = h.y + p.I;
  auto start = solve_fixed_a(detail::initial_unknowns(a0, two_pi / h.frequency, j_ah, p, o));
  if (!start) fail(ErrorKind::convergence, "no small cycle found next to the Hopf point");

  FastBranch branch;
  branch.kind = FastBranchKind::limit_cycle_branch;

  // Terminal Hopf point: J(a) = J0 + c a^2 near a = 0, extrapolated from two
  // smaller fixed-amplitude cycles.
  {
    auto shrink = [&](const detail::BranchPoint& from, double a) {
      return solve_fixed_a(
          detail::initial_unknowns(a, from.u(L.T()), from.u(L.J()), p, o));
    };
    auto half = shrink(*start, 0.5 * a0);
    auto quarter = half ? shrink(*half, 0.25 * a0) : std::nullopt;
    if (half && quarter) {
      const double j0 = (4.0 * quarter->u(L.J()) - half->u(L.J())) / 3.0;
      SpecialPoint sp;
      sp.kind = SpecialPointKind::hopf;
      sp.y = j0 - p.I;
      sp.v = fast_equilibrium_v(j0);
      sp.multiplier = quarter->shot.multiplier;
      sp.amplitude = 0.0;
      sp.index = 0;
      branch.special_points.push_back(sp);
      branch.cycles.push_back(to_cycle(*quarter));
      branch.cycles.push_back(to_cycle(*half));
    }
  }

  // Tangent: null vector of the shooting Jacobian, oriented along `prev`.
  auto tangent_at = [&](const detail::ShootResult& sh, const VecX& prev) {
    MatX m(n_u, n_u);
    m.topRows(n_u - 1) = sh.jac;
    m.row(n_u - 1) = prev.cwiseProduct(wgt).transpose();
    VecX rhs = VecX::Zero(n_u);
    rhs(n_u - 1) = 1.0;
    VecX t = m.fullPivLu().solve(rhs);
    return VecX(t / std::sqrt(wdot(t, t)));
  };

  auto correct = [&](const VecX& base, const VecX& tangent,
                     double ds) -> std::optional<detail::BranchPoint> {
    VecX u = base + ds * tangent;
    for (int it = 0; it < o.newton_max_iter; ++it) {
      detail::ShootResult sh;
      try {
        sh = detail::shoot(u, p, o);
      } catch (const Error&) {
        return std::nullopt;
      }
      const double arc = wdot(u - base, tangent) - ds;
      if (sh.residual.lpNorm<Eigen::Infinity>() < o.newton_tol && std::abs(arc) < 1e-12) {
        // a = 0 solves the shooting problem for every (T, J); never accept it.
        if (u(0) < 0.25 * o.initial_amplitude) return std::nullopt;
        return detail::BranchPoint{u, sh};
      }
      MatX m(n_u, n_u);
      m.topRows(n_u - 1) = sh.jac;
      m.row(n_u - 1) = tangent.cwiseProduct(wgt).transpose();
      VecX rhs(n_u);
      rhs.head(n_u - 1) = -sh.residual;
      rhs(n_u - 1) = -arc;
      const VecX d = m.fullPivLu().solve(rhs);
      if (!d.allFinite() || u(L.T()) + d(L.T()) <= 0.0) return std::nullopt;
      u += d;
    }
    return std::nullopt;
  };

  detail::BranchPoint cur = *start;
  branch.cycles.push_back(to_cycle(cur));
  VecX grow = VecX::Zero(n_u);
  grow(0) = 1.0;
  VecX tangent = tangent_at(cur.shot, grow);
  double ds = o.ds;

  for (std::size_t n = 0; n < o.max_points;) {
    std::optional<detail::BranchPoint> next;
    int halvings = 0;
    while (!(next = correct(cur.u, tangent, ds))) {
      if (++halvings > o.max_halvings) {
        std::ostringstream os;
        os << "continuation stalled at y = " << cur.u(L.J()) - p.I << " after "
           << o.max_halvings << " step halvings";
        fail(ErrorKind::convergence, os.str(), cur.u(L.J()) - p.I);
      }
      ds *= 0.5;
    }
    const double jump = std::abs(next->shot.multiplier - cur.shot.multiplier);
    if (jump > o.max_multiplier_jump) {
      // Canard cycles: the multiplier changes fast at almost fixed y.
      ds *= std::max(0.05, 0.8 * o.max_multiplier_jump / jump);
      continue;
    }

    const double m_prev = cur.shot.multiplier - 1.0;
    const double m_next = next->shot.multiplier - 1.0;
    if (m_prev * m_next < 0.0) {
      // Fold of cycles: bisect the arclength step for multiplier = 1.
      double lo = 0.0, hi = ds;
      detail::BranchPoint best = *next;
      while (hi - lo > o.fold_tol) {
        const double mid = 0.5 * (lo + hi);
        auto q = correct(cur.u, tangent, mid);
        if (!q) break;
        best = *q;
        const double mm = q->shot.multiplier - 1.0;
        if (std::abs(mm) < 1e-12) break;
        ((mm < 0.0) == (m_prev < 0.0) ? lo : hi) = mid;
      }
      SpecialPoint sp;
      sp.kind = SpecialPointKind::fold;
      sp.y = best.u(L.J()) - p.I;
      sp.v = fast_equilibrium_v(best.u(L.J()));
      sp.multiplier = best.shot.multiplier;
      sp.amplitude = best.u(0);
      sp.index = branch.cycles.size() - 1;
      branch.special_points.push_back(sp);
    }

    tangent = tangent_at(next->shot, tangent);
    cur = *next;
    ++n;
    branch.cycles.push_back(to_cycle(cur));

    const double y = cur.u(L.J()) - p.I;
    if (y < y_min || y > y_max) break;
    if (cur.u(0) < a0 && n > 2) {
      // Back at a Hopf point (the upper knee).
      SpecialPoint sp;
      sp.kind = SpecialPointKind::hopf;
      sp.y = y;
      sp.v = fast_equilibrium_v(cur.u(L.J()));
      sp.multiplier = cur.shot.multiplier;
      sp.amplitude = cur.u(0);
      sp.index = branch.cycles.size() - 1;
      branch.special_points.push_back(sp);
      break;
    }
    if (halvings == 0) ds = std::min(1.5 * ds, o.ds_max);
  }
  return branch;
}

}  // namespace funnel::burster

#endif  // FUNNEL_BURSTER_CONTINUATION_HPP
