#ifndef FUNNEL_ANALYSIS_MAP_LYAPUNOV_HPP
#define FUNNEL_ANALYSIS_MAP_LYAPUNOV_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>

#include "funnel/core/error.hpp"
#include "funnel/core/linalg.hpp"
#include "funnel/maps/annulus_maps.hpp"

namespace funnel {

/// Per-iterate exponents, descending. Logs of vanishing stretch factors are
/// clipped at `floor` (the singular-limit map collapses z entirely).
struct MapLyapunov {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::size_t iterations = 0;
};

struct MapLyapunovOptions {
  std::size_t iterations = 10000;
  std::size_t transient = 1000;
  double floor = -50.0;
};

template <AnnulusMap M>
MapLyapunov lyapunov_exponents_map(const M& map, AnnulusPoint seed,
                                   const MapLyapunovOptions& opt = {}) {
  require(opt.iterations >= 1, ErrorKind::domain, "need at least one iterate");
  auto step = [&](std::size_t k) {
    if (!map.in_domain(seed)) {
      std::ostringstream os;
      os << "orbit left the domain at iterate " << k << " (z = " << seed.z << ")";
      fail(ErrorKind::escape, os.str(), static_cast<double>(k));
    }
  };
  for (std::size_t k = 0; k < opt.transient; ++k) {
    step(k);
    seed = map(seed);
  }
  Mat2 q = Mat2::Identity();
  double s1 = 0.0, s2 = 0.0;
  const double tiny = std::exp(opt.floor);
  for (std::size_t k = 0; k < opt.iterations; ++k) {
    step(opt.transient + k);
    const Mat2 a = map.jacobian(seed) * q;
    // Gram-Schmidt on the two columns.
    Vec2 c0 = a.col(0);
    const double r00 = c0.norm();
    Vec2 e0 = r00 > 0.0 ? Vec2(c0 / r00) : Vec2(q.col(0));
    Vec2 c1 = a.col(1) - e0.dot(a.col(1)) * e0;
    const double r11 = c1.norm();
    Vec2 e1 = r11 > tiny ? Vec2(c1 / r11) : Vec2(-e0(1), e0(0));
    s1 += std::log(std::max(r00, tiny));
    s2 += std::log(std::max(r11, tiny));
    q.col(0) = e0;
    q.col(1) = e1;
    seed = map(seed);
  }
  MapLyapunov out;
  out.iterations = opt.iterations;
  out.lambda1 = s1 / static_cast<double>(opt.iterations);
  out.lambda2 = s2 / static_cast<double>(opt.iterations);
  if (out.lambda2 > out.lambda1) std::swap(out.lambda1, out.lambda2);
  return out;
}

}  // namespace funnel

#endif  // FUNNEL_ANALYSIS_MAP_LYAPUNOV_HPP
