#ifndef FUNNEL_BURSTER_FLOW_LYAPUNOV_HPP
#define FUNNEL_BURSTER_FLOW_LYAPUNOV_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "funnel/burster/model.hpp"
#include "funnel/burster/simulate.hpp"
#include "funnel/core/error.hpp"
#include "funnel/core/linalg.hpp"
#include "funnel/ode/dopri5.hpp"

namespace funnel::burster {

struct FlowLyapunovOptions {
  double transient = 1e3;
  double T = 1e4;
  double renorm_interval = 1.0;
  double rtol = 1e-9;
  double atol = 1e-11;
};

struct FlowLyapunov {
  std::array<double, 3> exponents{};  // descending
  double mean_divergence = 0.0;      // time average of the Jacobian trace
  double T = 0.0;
  BursterState final_state;

  double sum() const { return exponents[0] + exponents[1] + exponents[2]; }
};

namespace detail {

// Variational field plus the running divergence integral in slot 12.
struct BursterTangentField {
  BursterParams p;
  void operator()(double t, const ode::State<13>& x, ode::State<13>& dx) const {
    ode::State<12> s, ds;
    std::copy_n(x.begin(), 12, s.begin());
    BursterVariationalField{p}(t, s, ds);
    std::copy_n(ds.begin(), 12, dx.begin());
    dx[12] = (1.0 - x[0] * x[0]) - recovery_gain * p.delta - p.mu_slow;
  }
};

}  // namespace detail

/// Benettin estimate of the three flow exponents: the variational equations
/// are integrated with the state and re-orthonormalized by QR every
/// renorm_interval time units.
inline FlowLyapunov flow_lyapunov(const BursterState& start, const BursterParams& p,
                                  const FlowLyapunovOptions& opt = {}) {
  p.validate();
  require(opt.T >= 1e4, ErrorKind::domain, "flow_lyapunov needs T >= 1e4");
  require(opt.renorm_interval > 0.0, ErrorKind::domain, "renorm_interval must be > 0");
  SimulationOptions sim;
  sim.rtol = opt.rtol;
  sim.atol = opt.atol;
  BursterState x = advance(start, p, opt.transient, sim);

  ode::IntegratorOptions io = sim.integrator();
  io.guard_dims = 3;
  Mat3 q = Mat3::Identity();
  std::array<double, 3> sums{};
  double div = 0.0;
  const auto chunks = static_cast<std::size_t>(std::ceil(opt.T / opt.renorm_interval));
  const double dt = opt.T / static_cast<double>(chunks);
  for (std::size_t k = 0; k < chunks; ++k) {
    ode::State<13> s{};
    s[0] = x.v;
    s[1] = x.w;
    s[2] = x.y;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s[3 + 3 * i + j] = q(i, j);
    const auto r = ode::integrate<13>(detail::BursterTangentField{p}, 0.0, s, dt, io).y;
    x = {r[0], r[1], r[2]};
    div += r[12];
    Mat3 a;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = r[3 + 3 * i + j];
    Eigen::HouseholderQR<Mat3> qr(a);
    const Mat3 rr = qr.matrixQR().triangularView<Eigen::Upper>();
    Mat3 qq = qr.householderQ();
    for (int j = 0; j < 3; ++j) {
      sums[j] += std::log(std::abs(rr(j, j)));
      if (rr(j, j) < 0.0) qq.col(j) = -qq.col(j);
    }
    q = qq;
  }
  FlowLyapunov out;
  for (int j = 0; j < 3; ++j) out.exponents[j] = sums[j] / opt.T;
  std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
  out.mean_divergence = div / opt.T;
  out.T = opt.T;
  out.final_state = x;
  return out;
}

}  // namespace funnel::burster

#endif  // FUNNEL_BURSTER_FLOW_LYAPUNOV_HPP
