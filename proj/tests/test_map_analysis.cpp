#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "funnel/analysis/circle_dynamics.hpp"
#include "funnel/analysis/fixed_points.hpp"
#include "funnel/analysis/horseshoe.hpp"
#include "funnel/analysis/invariant_curve.hpp"
#include "funnel/analysis/map_lyapunov.hpp"

using namespace funnel;

namespace {

const SaddleFocusParams kUnit(1.0, 1.5, 1.0);  // nu = 1.5, omega/rho = 1

SaddleFocusParams with_kappa(double kappa, double nu = 1.5) {
  return SaddleFocusParams(1.0, nu, kappa);
}

GlobalMapConfig config(double mu, int n, double phi_star = 0.0, double eps_r = 0.1) {
  GlobalMapConfig c;
  c.mu = mu;
  c.n = n;
  c.phi_star = phi_star;
  c.eps_r = eps_r;
  return c;
}

// Golden-section maximization, independent of the grid search under test.
template <typename F>
double golden_max(F f, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  for (int k = 0; k < 200; ++k) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    if (f(c) > f(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  return f(0.5 * (a + b));
}

}  // namespace

TEST(RotationNumber, RigidRotation) {
  const CircleMap quarter(kUnit, ModulationProfile::constant(), two_pi * 0.25);
  EXPECT_NEAR(rotation_number(quarter, 0.3, 4096).value, 0.25, 1e-12);
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  const CircleMap g(kUnit, ModulationProfile::constant(), two_pi * golden);
  const auto r = rotation_number(g, 0.0, 10000);
  EXPECT_NEAR(r.value, 0.61803, 1e-5);
  EXPECT_LT(r.convergence_estimate, 1e-12);
  EXPECT_EQ(r.iterations, 10000u);
}

TEST(RotationNumber, RequiresLongOrbit) {
  const CircleMap m(kUnit, ModulationProfile::constant(), 1.0);
  EXPECT_THROW(rotation_number(m, 0.0, 999), Error);
}

TEST(RotationNumberProperty, RigidRotationMatchesOmegaTilde) {
  for (int k = 0; k < 32; ++k) {
    const double w = -3.0 + 0.37 * k;
    const CircleMap m(kUnit, ModulationProfile::constant(), w);
    const double expected = w / two_pi - std::floor(w / two_pi);
    EXPECT_NEAR(rotation_number(m, 1.0, 2000).value, expected, 1e-9) << "omega_tilde " << w;
  }
}

TEST(RotationNumberProperty, MonotoneInOmegaTildeWithPlateau) {
  const auto prof = ModulationProfile::sine(0.3);
  std::vector<double> turns;
  for (int k = 0; k < 512; ++k) {
    const CircleMap m(kUnit, prof, two_pi * k / 512.0);
    turns.push_back(rotation_number(m, 0.0, 4000).turns);
  }
  for (std::size_t k = 1; k < turns.size(); ++k) {
    EXPECT_GE(turns[k], turns[k - 1] - 1e-9) << "k = " << k;
  }
  // Locked at 0 turns near omega_tilde = 0.
  const auto plateaus = find_plateaus(turns, 1e-3);
  ASSERT_FALSE(plateaus.empty());
  bool rational = false;
  for (const auto& pl : plateaus) {
    for (int q = 1; q <= 4; ++q) {
      const double pq = pl.value * q;
      if (std::abs(pq - std::round(pq)) < 1e-3) rational = true;
    }
  }
  EXPECT_TRUE(rational);
}

TEST(Plateaus, Detection) {
  const std::vector<double> v{0.1, 0.2, 0.2, 0.2, 0.3, 0.4, 0.4, 0.5, 0.5, 0.5, 0.5};
  const auto p = find_plateaus(v);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].first, 1u);
  EXPECT_EQ(p[0].last, 3u);
  EXPECT_EQ(p[1].first, 7u);
  EXPECT_EQ(p[1].last, 10u);
}

TEST(DiffeoCondition, Examples) {
  const auto flat = check_diffeo_condition(kUnit, ModulationProfile::constant());
  EXPECT_TRUE(flat.satisfied);
  EXPECT_EQ(flat.sup_value, 0.0);

  const auto a6 = check_diffeo_condition(kUnit, ModulationProfile::sine(0.6));
  EXPECT_TRUE(a6.satisfied);
  EXPECT_NEAR(a6.sup_value, 0.75, 1e-9);

  const auto a8 = check_diffeo_condition(kUnit, ModulationProfile::sine(0.8));
  EXPECT_FALSE(a8.satisfied);
  EXPECT_NEAR(a8.sup_value, 0.8 / 0.6, 1e-9);
}

TEST(DiffeoConditionProperty, MatchesIndependentMaximizer) {
  for (double a : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (double kappa : {0.5, 1.0, 3.0}) {
      const auto prof = ModulationProfile::sine(a);
      const auto check = check_diffeo_condition(with_kappa(kappa), prof);
      const double oracle =
          golden_max([&](double x) { return kappa * a * std::cos(x) / (1 + a * std::sin(x)); },
                     -funnel::pi, funnel::pi);
      EXPECT_NEAR(check.sup_value, oracle, 1e-9);
      EXPECT_NEAR(check.sup_value, kappa * a / std::sqrt(1 - a * a), 1e-9);
      EXPECT_EQ(check.satisfied, oracle < 1.0);
    }
  }
}

TEST(StabilityCondition, Examples) {
  EXPECT_EQ(check_stability_condition(kUnit, ModulationProfile::constant(), 1.0).value, 0.0);
  const auto s1 = check_stability_condition(kUnit, ModulationProfile::sine(0.3), 0.0);
  EXPECT_NEAR(s1.value, 0.3, 1e-15);
  EXPECT_TRUE(s1.stable_if_fixed);
  const auto s4 = check_stability_condition(with_kappa(4.0), ModulationProfile::sine(0.3), 0.0);
  EXPECT_NEAR(s4.value, 1.2, 1e-15);
  EXPECT_FALSE(s4.stable_if_fixed);
  // Absolute value: the same magnitude on the decreasing side.
  EXPECT_NEAR(check_stability_condition(kUnit, ModulationProfile::sine(0.3), funnel::pi).value,
              0.3, 1e-15);
}

TEST(SineBranches, Examples) {
  EXPECT_EQ(sine_branch_count(1.0).full_covers_per_branch, 0);
  EXPECT_EQ(sine_branch_count(10.0).full_covers_per_branch, 3);
  EXPECT_EQ(sine_branch_count(10.0).branches, 2);
  EXPECT_EQ(sine_branch_count(funnel::pi).full_covers_per_branch, 1);
  EXPECT_THROW(sine_branch_count(0.0), Error);
}

TEST(InvariantCurve, FlatProfileGivesUnitHeight) {
  const SingularLimitMap m(kUnit, ModulationProfile::constant(), 0.7, 1);
  const auto r = find_invariant_curve(m);
  for (double h : r.curve.heights()) EXPECT_NEAR(h, 1.0, 1e-15);
  EXPECT_LE(r.iterations, 2u);
  EXPECT_LT(r.residual, 1e-15);
}

TEST(InvariantCurve, SingularLimitIsThePulledBackProfile) {
  const auto prof = ModulationProfile::sine(0.3);
  for (double w : {0.0, 1.3, 4.0}) {
    const SingularLimitMap m(kUnit, prof, w, 1);
    const auto r = find_invariant_curve(m);
    EXPECT_LT(r.residual, 1e-10);
    // h(phi_bar(phi)) = alpha(phi)^nu
    for (double phi = 0.05; phi < two_pi; phi += 0.3) {
      const double image = m.circle_component()(phi);
      EXPECT_NEAR(r.curve(image), std::pow(prof.alpha(phi), 1.5), 1e-10);
    }
  }
}

TEST(InvariantCurve, RescaledMapConvergesAndAttracts) {
  const auto prof = ModulationProfile::sine(0.3);
  const RescaledMap m(kUnit, prof, config(1e-3, 1));
  const auto r = find_invariant_curve(m);
  EXPECT_LT(r.residual, 1e-8);
  EXPECT_LT(r.residual, 10.0 * 1e-10 + 1e-8);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uz(0.0, m.z_max()), up(0.0, two_pi);
  for (int s = 0; s < 50; ++s) {
    auto pt = AnnulusPoint::from_lift(uz(rng), up(rng));
    double previous = distance_to_curve(r.curve, pt);
    for (int k = 0; k < 200; ++k) {
      pt = m(pt);
      const double d = distance_to_curve(r.curve, pt);
      // Monotone until the interpolation floor of the curve.
      if (k >= 3 && previous > 1e-9) {
        EXPECT_LE(d, previous);
      }
      previous = d;
    }
    EXPECT_LT(previous, 1e-6);
  }
}

TEST(InvariantCurve, NonInvertibleCircleComponentIsReported) {
  const SingularLimitMap m(kUnit, ModulationProfile::sine(0.8), 0.0, 1);
  try {
    find_invariant_curve(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::non_invertible);
  }
}

TEST(InvariantCurve, RejectsDegreeZero) {
  const SingularLimitMap m(kUnit, ModulationProfile::sine(0.3), 0.0, 0);
  EXPECT_THROW(find_invariant_curve(m), Error);
}

TEST(InvariantCurve, IterationCapCarriesResidual) {
  const RescaledMap m(kUnit, ModulationProfile::sine(0.3), config(1e-2, 1));
  InvariantCurveOptions opt;
  opt.max_iterations = 3;
  opt.tol = 1e-15;
  try {
    find_invariant_curve(m, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::convergence);
    EXPECT_TRUE(std::isfinite(e.value()));
  }
}

TEST(Prop2, Examples) {
  const auto flat = check_prop2_conditions(kUnit, ModulationProfile::constant(), funnel::pi / 2,
                                           3 * funnel::pi / 2, 2);
  EXPECT_EQ(flat.branch, Prop2Branch::none);

  const auto p5 = with_kappa(5.0);
  const auto yes = check_prop2_conditions(p5, ModulationProfile::sine(0.96), funnel::pi / 2,
                                          3 * funnel::pi / 2, 2);
  EXPECT_EQ(yes.branch, Prop2Branch::decreasing);
  const double oracle = 5.0 * std::log(1.96 / 0.04) - two_pi * 3;
  EXPECT_NEAR(yes.margin, oracle, 1e-12);
  EXPECT_NEAR(yes.margin, 0.609, 0.01);

  const auto no = check_prop2_conditions(p5, ModulationProfile::sine(0.90), funnel::pi / 2,
                                         3 * funnel::pi / 2, 2);
  EXPECT_EQ(no.branch, Prop2Branch::none);
  EXPECT_TRUE(no.pointwise_decreasing);
  EXPECT_NEAR(no.margin_decreasing, 5.0 * std::log(19.0) - two_pi * 3, 1e-12);
}

TEST(Prop2, SteepAlternative) {
  // alpha increasing steeply on [-pi/2, pi/2] for large omega/rho.
  const auto r = check_prop2_conditions(with_kappa(40.0), ModulationProfile::sine(0.96),
                                        -1.2, 1.2, 2);
  EXPECT_TRUE(r.pointwise_steep);
  EXPECT_EQ(r.branch, Prop2Branch::steep);
  const double lr = std::log((1 + 0.96 * std::sin(1.2)) / (1 - 0.96 * std::sin(1.2)));
  EXPECT_NEAR(r.margin, 40.0 * lr - 2 * 2.4 - two_pi * 3, 1e-9);
}

TEST(Prop2, RejectsBadArguments) {
  EXPECT_THROW(check_prop2_conditions(kUnit, ModulationProfile::constant(), 2.0, 1.0, 2), Error);
  EXPECT_THROW(check_prop2_conditions(kUnit, ModulationProfile::constant(), 1.0, 2.0, 1), Error);
}

TEST(Horseshoe, FlatProfileFails) {
  const CircleMap m(kUnit, ModulationProfile::constant(), 0.4);
  const auto r = horseshoe_certify(m, 2);
  EXPECT_FALSE(r.certificate.has_value());
  EXPECT_FALSE(r.reason.empty());
}

void expect_valid_certificate(const HorseshoeCertificate& c, int m) {
  EXPECT_EQ(c.m, m);
  ASSERT_EQ(static_cast<int>(c.strips.size()), m);
  EXPECT_GT(c.expansion_lower_bound, 1.0);
  for (int i = 0; i < m; ++i) {
    EXPECT_LT(c.strips[i].lo, c.strips[i].hi);
    EXPECT_GE(c.strips[i].lo, c.base_lo - 1e-12);
    EXPECT_LE(c.strips[i].hi, c.base_hi + 1e-12);
    if (i > 0) {
      EXPECT_LT(c.strips[i - 1].hi, c.strips[i].lo);
    }
    for (int j = 0; j < m; ++j) EXPECT_TRUE(c.covering[i][j]);
  }
  EXPECT_LT(c.base_hi - c.base_lo, two_pi);
  EXPECT_NEAR(c.entropy_lower_bound, std::log(m), 1e-15);
}

TEST(Horseshoe, SineModelCertifiesThreeSymbols) {
  for (double w : {0.0, 0.7, 2.0, 4.5}) {
    const SineCircleMap f{10.0, w};
    const auto r = horseshoe_certify(f, 3);
    ASSERT_TRUE(r.certificate.has_value()) << r.reason << " at omega_tilde " << w;
    expect_valid_certificate(*r.certificate, 3);
  }
}

TEST(Horseshoe, SmallAmplitudeFails) {
  const auto r = horseshoe_certify(SineCircleMap{1.0, 0.0}, 2);
  EXPECT_FALSE(r.certificate.has_value());
}

TEST(Horseshoe, ProfileCaseAgreesWithProp2) {
  const auto p5 = with_kappa(5.0);
  const auto prof = ModulationProfile::sine(0.96);
  ASSERT_EQ(check_prop2_conditions(p5, prof, funnel::pi / 2, 3 * funnel::pi / 2, 2).branch,
            Prop2Branch::decreasing);
  for (double w : {0.0, 1.0, 3.0}) {
    const SingularLimitMap m(p5, prof, w, 1);
    const auto r = horseshoe_certify(m.circle_component(), 2);
    ASSERT_TRUE(r.certificate.has_value()) << r.reason;
    expect_valid_certificate(*r.certificate, 2);
  }
}

TEST(HorseshoeProperty, RandomSymbolSequencesAreShadowed) {
  const SingularLimitMap m(with_kappa(5.0), ModulationProfile::sine(0.96), 0.0, 1);
  const auto& f = m.circle_component();
  const auto r = horseshoe_certify(f, 2);
  ASSERT_TRUE(r.certificate.has_value());
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> sym(0, 1);
  for (int s = 0; s < 100; ++s) {
    std::vector<int> seq(12);
    for (int& x : seq) x = sym(rng);
    const auto iv = shadow_symbols(f, *r.certificate, seq);
    ASSERT_TRUE(iv.has_value()) << "sequence " << s;
    // Independent forward replay of the midpoint.
    double x = 0.5 * (iv->first + iv->second);
    for (int k : seq) {
      const auto& st = r.certificate->strips[k];
      const double red = st.lo + wrap_angle(x - st.lo);
      EXPECT_TRUE(red <= st.hi) << "left strip " << k;
      x = f.lift(x);
    }
  }
}

TEST(HorseshoeProperty, SineSequencesAreShadowed) {
  const SineCircleMap f{10.0, 1.1};
  const auto r = horseshoe_certify(f, 3);
  ASSERT_TRUE(r.certificate.has_value());
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> sym(0, 2);
  for (int s = 0; s < 100; ++s) {
    std::vector<int> seq(12);
    for (int& x : seq) x = sym(rng);
    EXPECT_TRUE(shadow_symbols(f, *r.certificate, seq).has_value());
  }
}

TEST(FixedPoints, FlatProfile) {
  const SingularLimitMap m(kUnit, ModulationProfile::constant(), 2.5, 0);
  const auto fps = find_fixed_points_n0(m);
  ASSERT_EQ(fps.size(), 1u);
  EXPECT_NEAR(fps[0].phi_fp, 2.5, 1e-12);
  EXPECT_EQ(fps[0].z_fp, 1.0);
  EXPECT_EQ(std::abs(fps[0].eigenvalues[0]), 0.0);
  EXPECT_EQ(std::abs(fps[0].eigenvalues[1]), 0.0);
  EXPECT_TRUE(fps[0].stable);
}

TEST(FixedPoints, ConstructedTargetIsRecovered) {
  const auto prof = ModulationProfile::sine(0.3);
  const double w = omega_tilde_for_fixed_point(kUnit, prof, 1.0);
  EXPECT_NEAR(w, 1.0 + std::log(1.0 + 0.3 * std::sin(1.0)), 1e-15);
  const SingularLimitMap m(kUnit, prof, w, 0);
  const auto fps = find_fixed_points_n0(m);
  ASSERT_EQ(fps.size(), 1u);
  const auto& fp = fps[0];
  EXPECT_NEAR(fp.phi_fp, 1.0, 1e-10);
  EXPECT_NEAR(fp.z_fp, std::pow(prof.alpha(1.0), 1.5), 1e-14);
  const double predicted = -0.3 * std::cos(1.0) / (1 + 0.3 * std::sin(1.0));
  EXPECT_NEAR(fp.predicted_eigenvalue, predicted, 1e-13);
  EXPECT_TRUE(fp.stable);
  // Finite-difference Jacobian oracle.
  const double h = 1e-6;
  const double fd = (m.circle_component().lift(1.0 + h) - m.circle_component().lift(1.0 - h)) / (2 * h);
  double numeric = std::abs(fp.eigenvalues[0]) > std::abs(fp.eigenvalues[1])
                       ? fp.eigenvalues[0].real()
                       : fp.eigenvalues[1].real();
  EXPECT_NEAR(numeric, fd, 1e-8);
  EXPECT_NEAR(numeric, predicted, 1e-8);
}

TEST(FixedPointsProperty, EigenvaluesSolveCharacteristicEquation) {
  for (double kappa : {0.5, 1.0, 2.0, 6.0}) {
    for (double w : {0.0, 1.0, 3.0, 5.5}) {
      const SingularLimitMap m(with_kappa(kappa), ModulationProfile::sine(0.6), w, 0);
      for (const auto& fp : find_fixed_points_n0(m)) {
        const auto pt = AnnulusPoint::from_lift(fp.z_fp, fp.phi_fp);
        // Root check on the circle equation.
        const double g = m.circle_component().lift(fp.phi_fp) - fp.phi_fp - two_pi * fp.winding;
        EXPECT_LT(std::abs(g), 1e-10);
        const Mat2 j = m.jacobian(pt);
        for (const auto& e : fp.eigenvalues) {
          const std::complex<double> det = (j(0, 0) - e) * (j(1, 1) - e) - j(0, 1) * j(1, 0);
          EXPECT_LT(std::abs(det), 1e-8);
        }
        EXPECT_EQ(fp.stable, std::abs(fp.eigenvalues[0]) < 1.0);
        EXPECT_EQ(check_stability_condition(with_kappa(kappa), m.profile(), fp.phi_fp).stable_if_fixed,
                  fp.stable);
      }
    }
  }
}

TEST(FixedPointsProperty, RescaledEigenvalueApproachesPrediction) {
  const auto prof = ModulationProfile::sine(0.3);
  const double target = omega_tilde_for_fixed_point(kUnit, prof, 1.0);
  const double predicted = -0.3 * std::cos(1.0) / (1 + 0.3 * std::sin(1.0));
  double previous = 1e9;
  for (double mu : {1e-2, 1e-3, 1e-4}) {
    const double phi_star = wrap_angle(target - std::log(1.0 / mu));
    const RescaledMap m(kUnit, prof, config(mu, 0, phi_star));
    const SingularLimitMap limit(kUnit, prof, target, 0);
    const auto seed = find_fixed_points_n0(limit).at(0);
    const auto fp = refine_fixed_point(m, seed.z_fp, seed.phi_fp, seed.winding, predicted);
    const auto img = m(AnnulusPoint::from_lift(fp.z_fp, fp.phi_fp));
    EXPECT_NEAR(img.z, fp.z_fp, 1e-12);
    EXPECT_NEAR(angle_difference(img.phi, fp.phi_fp), 0.0, 1e-12);
    const double lead = std::abs(fp.eigenvalues[0].real()) > std::abs(fp.eigenvalues[1].real())
                            ? fp.eigenvalues[0].real()
                            : fp.eigenvalues[1].real();
    const double err = std::abs(lead - predicted);
    EXPECT_LT(err, previous) << "mu = " << mu;
    previous = err;
    EXPECT_TRUE(fp.stable);
  }
}

TEST(MapLyapunov, RigidSkewProduct) {
  const SingularLimitMap m(kUnit, ModulationProfile::constant(), 1.0, 1);
  const auto l = lyapunov_exponents_map(m, AnnulusPoint::from_lift(0.5, 0.2));
  EXPECT_NEAR(l.lambda1, 0.0, 1e-3);
  EXPECT_EQ(l.lambda2, -50.0);
}

TEST(MapLyapunov, AttractingCurveHasNonPositiveExponent) {
  const auto prof = ModulationProfile::sine(0.3);
  const RescaledMap m(kUnit, prof, config(1e-3, 1, 0.4));
  MapLyapunovOptions opt;
  opt.iterations = 20000;
  const auto l = lyapunov_exponents_map(m, AnnulusPoint::from_lift(1.0, 0.0), opt);
  EXPECT_LE(l.lambda1, 1e-3);
  EXPECT_LT(l.lambda2, l.lambda1);
}

TEST(MapLyapunov, SingularLimitReducesToCircleExponent) {
  const SingularLimitMap m(with_kappa(5.0), ModulationProfile::sine(0.96), 0.3, 1);
  MapLyapunovOptions opt;
  opt.iterations = 20000;
  const auto l = lyapunov_exponents_map(m, AnnulusPoint::from_lift(0.5, 0.1), opt);
  // Chaotic orbits separate under rounding, so average along the same orbit.
  const auto circle = m.circle_component();
  AnnulusPoint x = AnnulusPoint::from_lift(0.5, 0.1);
  for (int k = 0; k < 1000; ++k) x = m(x);
  double sum = 0.0;
  for (int k = 0; k < 20000; ++k) {
    sum += std::log(std::abs(circle.derivative(x.phi)));
    x = m(x);
  }
  EXPECT_NEAR(l.lambda1, sum / 20000, 1e-9);
  EXPECT_GT(l.lambda1, 0.0);
  EXPECT_EQ(l.lambda2, -50.0);
}

TEST(MapLyapunov, SineReductionMatchesOrbitAverage) {
  const SineCircleMap f{10.0, 0.3};
  double x = 0.1;
  for (int k = 0; k < 1000; ++k) x = f(x);
  double sum = 0.0;
  for (int k = 0; k < 50000; ++k) {
    sum += std::log(std::abs(10.0 * std::cos(x)));
    x = f(x);
  }
  EXPECT_NEAR(lyapunov_exponent_1d(f, 0.1, 50000, 1000), sum / 50000, 1e-12);
  EXPECT_GT(sum / 50000, 1.0);
}

namespace {
struct Runaway {
  AnnulusPoint operator()(const AnnulusPoint& p) const {
    return AnnulusPoint::from_lift(2.0 * p.z + 0.1, p.lift);
  }
  Mat2 jacobian(const AnnulusPoint&) const { return Mat2{{2.0, 0.0}, {0.0, 1.0}}; }
  int degree() const { return 1; }
  double z_max() const { return 10.0; }
  bool in_domain(const AnnulusPoint& p) const { return p.z <= 10.0; }
};
}  // namespace

TEST(MapLyapunov, EscapeIsReportedWithIterate) {
  try {
    lyapunov_exponents_map(Runaway{}, AnnulusPoint::from_lift(0.0, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::escape);
    EXPECT_EQ(e.value(), 7.0);
  }
}
