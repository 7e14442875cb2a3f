#ifndef FUNNEL_BURSTER_SECTION_HPP
#define FUNNEL_BURSTER_SECTION_HPP

#include <cmath>
#include <sstream>
#include <vector>

#include "funnel/burster/model.hpp"
#include "funnel/burster/simulate.hpp"
#include "funnel/core/error.hpp"
#include "funnel/core/linalg.hpp"
#include "funnel/ode/dopri5.hpp"

namespace funnel::burster {

/// Affine section g(x) = normal . x - offset = 0 in (v, w, y). direction +1
/// keeps crossings with g increasing, -1 decreasing, 0 both.
struct SectionPlane {
  Vec3 normal{0.0, 1.0, 0.0};
  double offset = 0.0;
  int direction = 0;

  double operator()(const ode::State<3>& x) const {
    return normal(0) * x[0] + normal(1) * x[1] + normal(2) * x[2] - offset;
  }
};

/// The plane w = w_eq through the full-system equilibrium, both directions.
/// It cuts the cone of small cycles around the fast Hopf tip, so an orbit in
/// the cone crosses it twice per fast rotation.
inline SectionPlane default_section(const BursterParams& p) {
  return {Vec3(0.0, 1.0, 0.0), full_equilibrium(p).w, 0};
}

struct Crossing {
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  int direction = 0;  // sign of dg/dt at the crossing
};

struct SectionOptions {
  double t_max = 2e5;
  std::size_t discard = 200;
  std::size_t max_crossings = 4000;  // kept after the discard
  std::size_t min_crossings = 10;
  double event_tol = 1e-12;
  SimulationOptions sim{};
};

struct SectionResult {
  std::vector<Crossing> crossings;
  std::size_t discarded = 0;
  double t_end = 0.0;
  ode::State<3> final_state{};
};

/// Crossings of an arbitrary three-dimensional flow with a plane.
template <typename Field>
SectionResult section_crossings(Field&& field, const ode::State<3>& start,
                                const SectionPlane& plane, const SectionOptions& opt) {
  SectionResult out;
  std::size_t seen = 0;
  const auto res = ode::integrate<3>(
      field, 0.0, start, opt.t_max, opt.sim.integrator(), [&](const ode::DenseStep<3>& s) {
        const auto tc = ode::locate_crossing(s, plane, plane.direction, opt.event_tol);
        if (!tc) return true;
        if (seen++ < opt.discard) {
          ++out.discarded;
          return true;
        }
        const auto x = s.at(*tc);
        out.crossings.push_back({*tc, Vec3(x[0], x[1], x[2]), plane(s.y0) < 0.0 ? 1 : -1});
        return out.crossings.size() < opt.max_crossings;
      });
  out.t_end = res.t;
  out.final_state = res.y;
  return out;
}

/// Poincare section of the burster from `start`. Fails with insufficient_data
/// when fewer than min_crossings survive the transient discard.
inline SectionResult poincare_section(const BursterState& start, const BursterParams& p,
                                      const SectionPlane& plane,
                                      const SectionOptions& opt = {}) {
  p.validate();
  auto out = section_crossings(BursterField{p}, start.array(), plane, opt);
  if (out.crossings.size() < opt.min_crossings) {
    std::ostringstream os;
    os << "only " << out.crossings.size() << " section crossings after discarding "
       << out.discarded << " (need " << opt.min_crossings << ")";
    fail(ErrorKind::insufficient_data, os.str(), static_cast<double>(out.crossings.size()));
  }
  return out;
}

inline SectionResult poincare_section(const BursterState& start, const BursterParams& p,
                                      const SectionOptions& opt = {}) {
  return poincare_section(start, p, default_section(p), opt);
}

}  // namespace funnel::burster

#endif  // FUNNEL_BURSTER_SECTION_HPP
