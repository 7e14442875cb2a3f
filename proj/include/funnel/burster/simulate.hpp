#ifndef FUNNEL_BURSTER_SIMULATE_HPP
#define FUNNEL_BURSTER_SIMULATE_HPP

#include <cmath>
#include <vector>

#include "funnel/burster/fast_subsystem.hpp"
#include "funnel/burster/model.hpp"
#include "funnel/core/error.hpp"
#include "funnel/ode/dopri5.hpp"

namespace funnel::burster {

struct SimulationOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  double sample_dt = 0.0;  // 0: one sample per accepted step
  double blowup = 1e3;

  ode::IntegratorOptions integrator() const {
    ode::IntegratorOptions o;
    o.rtol = rtol;
    o.atol = atol;
    o.blowup = blowup;
    return o;
  }
};

struct Trajectory {
  std::vector<double> t;
  std::vector<BursterState> x;
  std::size_t accepted = 0;
  std::size_t rejected = 0;

  const BursterState& back() const { return x.back(); }
};

/// Integrates the burster over [0, t_end], sampling either at every accepted
/// step or on a uniform grid through the dense output.
inline Trajectory simulate(const BursterState& start, const BursterParams& p, double t_end,
                           const SimulationOptions& opt = {}) {
  p.validate();
  require(t_end > 0.0, ErrorKind::domain, "t_span must be > 0");
  require(std::isfinite(start.v) && std::isfinite(start.w) && std::isfinite(start.y),
          ErrorKind::domain, "start state must be finite");
  Trajectory tr;
  tr.t.push_back(0.0);
  tr.x.push_back(start);
  double next_sample = opt.sample_dt;
  const auto res = ode::integrate<3>(
      BursterField{p}, 0.0, start.array(), t_end, opt.integrator(),
      [&](const ode::DenseStep<3>& s) {
        if (opt.sample_dt <= 0.0) {
          tr.t.push_back(s.t1);
          tr.x.push_back(BursterState::from(s.y1));
          return true;
        }
        while (next_sample <= s.t1) {
          tr.t.push_back(next_sample);
          tr.x.push_back(BursterState::from(s.at(next_sample)));
          next_sample = opt.sample_dt * static_cast<double>(tr.t.size());
        }
        return true;
      });
  tr.accepted = res.accepted;
  tr.rejected = res.rejected;
  if (opt.sample_dt > 0.0 && tr.t.back() < t_end) {
    tr.t.push_back(res.t);
    tr.x.push_back(BursterState::from(res.y));
  }
  return tr;
}

/// Runs the flow forward and returns only the end state.
inline BursterState advance(const BursterState& start, const BursterParams& p, double t,
                            const SimulationOptions& opt = {}) {
  if (t <= 0.0) return start;
  return BursterState::from(
      ode::integrate<3>(BursterField{p}, 0.0, start.array(), t, opt.integrator()).y);
}

/// Reproducible starting point: the fast equilibrium at y = c, shifted by
/// +0.1 in v.
inline BursterState standard_seed(const BursterParams& p) {
  const auto eqs = fast_equilibria(p.c, p);
  const auto& e = eqs.front();
  return {e.v + 0.1, e.w, p.c};
}

}  // namespace funnel::burster

#endif  // FUNNEL_BURSTER_SIMULATE_HPP
