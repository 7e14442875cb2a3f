#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "funnel/maps/annulus_maps.hpp"

using namespace funnel;

namespace {

GlobalMapConfig config(double mu, int n, double phi_star = 0.0, double eps_r = 0.0,
                       double eps_phi = 0.0) {
  GlobalMapConfig c;
  c.mu = mu;
  c.n = n;
  c.phi_star = phi_star;
  c.eps_r = eps_r;
  c.eps_phi = eps_phi;
  return c;
}

// Central-difference Jacobian of any annulus map, on lifts.
template <typename M>
Mat2 fd_jacobian(const M& map, const AnnulusPoint& pt, double h, bool one_sided_z) {
  Mat2 j;
  auto eval = [&](double z, double lift) { return map(AnnulusPoint::from_lift(z, lift)); };
  const auto zp = eval(pt.z + h, pt.lift);
  const auto zm = one_sided_z ? eval(pt.z, pt.lift) : eval(pt.z - h, pt.lift);
  const double hz = one_sided_z ? h : 2.0 * h;
  j(0, 0) = (zp.z - zm.z) / hz;
  j(1, 0) = (zp.lift - zm.lift) / hz;
  const auto pp = eval(pt.z, pt.lift + h);
  const auto pm = eval(pt.z, pt.lift - h);
  j(0, 1) = (pp.z - pm.z) / (2.0 * h);
  j(1, 1) = (pp.lift - pm.lift) / (2.0 * h);
  return j;
}

void expect_matrix_near(const Mat2& a, const Mat2& b, double rtol, double atol) {
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      EXPECT_NEAR(a(r, c), b(r, c), atol + rtol * std::abs(b(r, c)))
          << "entry (" << r << "," << c << ")";
    }
  }
}

}  // namespace

TEST(ModulationProfile, PeriodicEvaluation) {
  const auto prof = ModulationProfile::sine(0.3);
  EXPECT_NEAR(prof.alpha(0.4 + two_pi), prof.alpha(0.4), 1e-15);
  EXPECT_NEAR(prof.alpha_prime(0.4 - 3 * two_pi), prof.alpha_prime(0.4), 1e-14);
  EXPECT_NEAR(prof.min_alpha(), 0.7, 1e-6);
  EXPECT_NEAR(prof.max_alpha(), 1.3, 1e-6);
}

TEST(ModulationProfile, RejectsNonPositiveAlpha) {
  EXPECT_THROW(ModulationProfile::sine(1.2), Error);
  EXPECT_THROW(ModulationProfile::sine(1.0), Error);
}

TEST(ModulationProfile, RejectsWrongDerivative) {
  auto bad = [] {
    return ModulationProfile([](double p) { return 2.0 + std::sin(p); },
                             [](double p) { return 1.01 * std::cos(p); },
                             [](double) { return 0.0; }, [](double) { return 0.0; });
  };
  EXPECT_THROW(bad(), Error);
  EXPECT_NO_THROW(ModulationProfile([](double p) { return 2.0 + std::sin(p); },
                                    [](double p) { return std::cos(p); },
                                    [](double p) { return std::cos(2 * p); },
                                    [](double p) { return -2.0 * std::sin(2 * p); }));
}

TEST(GlobalMapConfig, Validation) {
  EXPECT_THROW(config(0.01, 2).validate(), Error);
  EXPECT_THROW(config(-0.01, 1).validate(), Error);
  EXPECT_THROW(config(0.01, 1, 0.0, -0.1).validate(), Error);
  EXPECT_NO_THROW(config(0.0, 0).validate());
  EXPECT_DOUBLE_EQ(config(0.01, 1, two_pi + 0.5).normalized().phi_star, 0.5);
}

TEST(GlobalMapConfig, LandingMustStayInsideTheDisk) {
  const SaddleFocusParams p(1.0, 2.0, 1.0);
  // 0.5 * 1.3 + 0.4 * 1 = 1.05 >= 1
  EXPECT_THROW(FullMap(p, ModulationProfile::sine(0.3), config(0.5, 1, 0.0, 0.4)), Error);
  EXPECT_NO_THROW(FullMap(p, ModulationProfile::sine(0.3), config(0.5, 1, 0.0, 0.3)));
}

TEST(GlobalMap, ConstantProfileKeepsAngle) {
  const auto prof = ModulationProfile::constant();
  for (double theta : {0.0, 1.0, 4.0}) {
    const auto out = global_map_t1(AnnulusPoint::from_lift(0.0, theta), prof, config(0.01, 1));
    EXPECT_NEAR(out.r, 0.01, 1e-17);
    EXPECT_NEAR(out.phi, theta, 1e-15);
  }
}

TEST(GlobalMap, DegreeZeroCollapsesAngle) {
  const auto prof = ModulationProfile::constant();
  for (double theta : {0.0, 1.0, 4.0, 6.2}) {
    const auto out =
        global_map_t1(AnnulusPoint::from_lift(0.0, theta), prof, config(0.01, 0, 1.3));
    EXPECT_NEAR(out.r, 0.01, 1e-17);
    EXPECT_NEAR(out.phi, 1.3, 1e-15);
  }
}

TEST(GlobalMap, RadialCouplingDirectEvaluation) {
  const auto out = global_map_t1(AnnulusPoint::from_lift(0.2, 0.0),
                                 ModulationProfile::sine(0.3), config(0.01, 1, 0.0, 0.05));
  EXPECT_NEAR(out.r, 0.02, 1e-16);
  EXPECT_NEAR(out.phi, 0.0, 1e-16);
}

TEST(GlobalMap, HomoclinicExclusionOnGrid) {
  const auto prof = ModulationProfile::sine(0.8);
  const auto cfg = config(1e-3, 1, 0.4, 0.1, 0.2);
  for (int i = 0; i <= 50; ++i) {
    for (int j = 0; j < 64; ++j) {
      const auto out =
          global_map_t1(AnnulusPoint::from_lift(i / 50.0, two_pi * j / 64), prof, cfg);
      EXPECT_GE(out.r, cfg.mu * prof.min_alpha());
      EXPECT_GT(out.r, 0.0);
    }
  }
}

TEST(FullMap, ClosedFormChain) {
  const FullMap t(SaddleFocusParams(1.0, 2.0, 1.0), ModulationProfile::constant(),
                  config(0.01, 1));
  const auto out = t(AnnulusPoint::from_lift(0.0, 0.0));
  EXPECT_NEAR(out.z, 1e-4, 1e-18);
  EXPECT_NEAR(out.lift, std::log(100.0), 1e-14);
  EXPECT_NEAR(out.phi, 4.60517, 1e-5);
}

TEST(FullMap, MatchesHandComposition) {
  const SaddleFocusParams p(1.0, 1.5, 1.0);
  const auto prof = ModulationProfile::sine(0.3);
  const auto cfg = config(1e-3, 1, 0.0, 0.1);
  const FullMap t(p, prof, cfg);
  const double z = 0.5, phi = pi / 2;
  // r0 = mu alpha + eps_r z; z_bar = r0^nu; phi_bar = phi + (omega/rho) ln(1/r0).
  const double r0 = 1e-3 * 1.3 + 0.1 * 0.5;
  const auto out = t(AnnulusPoint::from_lift(z, phi));
  EXPECT_NEAR(out.z, std::pow(r0, 1.5), 1e-15);
  EXPECT_NEAR(out.lift, phi - std::log(r0), 1e-14);
  // The same value through the public component operations.
  const auto via = local_map_t0(global_map_t1(AnnulusPoint::from_lift(z, phi), prof, cfg), p);
  EXPECT_EQ(out.z, via.z);
  EXPECT_EQ(out.lift, via.lift);
}

TEST(FullMap, DegreeOfLift) {
  const SaddleFocusParams p(1.0, 1.7, 2.0);
  for (int n : {0, 1}) {
    const FullMap t(p, ModulationProfile::sine(0.5), config(1e-2, n, 0.3, 0.1, 0.05));
    for (double phi : {0.1, 1.7, 3.3, 5.9}) {
      const auto a = t(AnnulusPoint::from_lift(0.3, phi));
      const auto b = t(AnnulusPoint::from_lift(0.3, phi + two_pi));
      EXPECT_NEAR(b.lift - a.lift, two_pi * n, 1e-12);
      EXPECT_NEAR(b.z, a.z, 1e-15);
    }
  }
}

TEST(RescaledMap, ConstantProfileIsRigid) {
  const SaddleFocusParams p(1.0, 1.5, 1.0);
  for (int n : {0, 1}) {
    const RescaledMap t(p, ModulationProfile::constant(), config(1e-3, n, 0.2));
    for (double phi : {0.0, 2.0, 5.0}) {
      const auto out = t(AnnulusPoint::from_lift(0.7, phi));
      EXPECT_NEAR(out.z, 1.0, 1e-12);
      EXPECT_NEAR(out.lift, n * phi + t.omega_tilde(), 1e-12);
    }
    EXPECT_NEAR(t.omega_tilde(), std::log(1e3) + 0.2, 1e-12);
  }
}

TEST(RescaledMap, RequiresPositiveMu) {
  try {
    RescaledMap(SaddleFocusParams(1.0, 1.5, 1.0), ModulationProfile::constant(),
                config(0.0, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(RescaledMap, ExactConjugationOfFullMap) {
  const SaddleFocusParams p(1.0, 1.5, 1.0);
  const auto prof = ModulationProfile::sine(0.3);
  for (double mu : {1e-2, 1e-3, 1e-4}) {
    const auto cfg = config(mu, 1, 0.7, 0.1, 0.05);
    const RescaledMap t(p, prof, cfg);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      const double z = 2.0 * u(rng), phi = two_pi * u(rng);
      const auto got = t(AnnulusPoint::from_lift(z, phi));
      // Closed form of the conjugated map written out independently.
      const double eps = 0.1 * std::pow(mu, 0.5);
      const double q = prof.alpha(phi) + eps * z;
      const double z_bar = std::pow(q, 1.5);
      const double phi_bar = phi + std::log(1.0 / mu) + std::log(1.0 / q) + 0.7 +
                             0.05 * std::pow(mu, 1.5) * z;
      EXPECT_NEAR(got.z, z_bar, 1e-12 * z_bar);
      EXPECT_NEAR(got.lift, phi_bar, 1e-12 * std::abs(phi_bar));
    }
  }
}

TEST(RescaledMap, FixedPointsCorrespondUnderScaling) {
  // n = 0 with constant alpha: the full map has the fixed point
  // (mu^nu, phi*) up to the rotation, and rescaling sends it to z = 1.
  const SaddleFocusParams p(1.0, 2.0, 1.0);
  const double mu = 1e-2;
  GlobalMapConfig cfg = config(mu, 0, 0.0);
  cfg.phi_star = wrap_angle(1.0 - std::log(1.0 / mu));  // omega_tilde = 1
  const FullMap full(p, ModulationProfile::constant(), cfg);
  const RescaledMap resc(p, ModulationProfile::constant(), cfg);
  const auto fp_full = AnnulusPoint::from_lift(mu * mu, 1.0);
  const auto img = full(fp_full);
  EXPECT_NEAR(img.z, fp_full.z, 1e-15);
  EXPECT_NEAR(angle_difference(img.phi, fp_full.phi), 0.0, 1e-12);
  const auto fp_resc = resc.rescale(fp_full);
  const auto img2 = resc(fp_resc);
  EXPECT_NEAR(img2.z, fp_resc.z, 1e-12);
  EXPECT_NEAR(angle_difference(img2.phi, fp_resc.phi), 0.0, 1e-12);
}

TEST(SingularLimitMap, Examples) {
  const SaddleFocusParams p(1.0, 1.5, 1.0);
  {
    const SingularLimitMap m(p, ModulationProfile::constant(), 0.5, 1);
    for (double z : {0.0, 0.3, 7.0}) {
      const auto out = m(AnnulusPoint::from_lift(z, 1.1));
      EXPECT_DOUBLE_EQ(out.z, 1.0);
      EXPECT_NEAR(out.lift, 1.6, 1e-15);
    }
  }
  {
    const SingularLimitMap m(p, ModulationProfile::sine(0.3), 0.0, 1);
    const auto out = m(AnnulusPoint::from_lift(0.42, 0.0));
    EXPECT_DOUBLE_EQ(out.z, 1.0);
    EXPECT_NEAR(out.lift, 0.0, 1e-15);
  }
  {
    const SingularLimitMap m(p, ModulationProfile::sine(0.3), 2.0, 0);
    const auto out = m(AnnulusPoint::from_lift(5.0, pi / 2));
    EXPECT_NEAR(out.z, std::pow(1.3, 1.5), 1e-14);
    EXPECT_NEAR(out.z, 1.482228, 1e-6);
    EXPECT_NEAR(out.lift, std::log(1.0 / 1.3) + 2.0, 1e-14);
    EXPECT_NEAR(out.lift, 1.73764, 1e-5);
  }
}

TEST(SingularLimitMap, DegreeOfLift) {
  const SaddleFocusParams p(1.0, 2.5, 3.0);
  for (int n : {0, 1}) {
    const SingularLimitMap m(p, ModulationProfile::sine(0.7), 1.3, n);
    for (double phi : {0.2, 2.2, 4.4}) {
      const auto a = m(AnnulusPoint::from_lift(1.0, phi));
      const auto b = m(AnnulusPoint::from_lift(1.0, phi + two_pi));
      EXPECT_NEAR(b.lift - a.lift, two_pi * n, 1e-12);
    }
  }
}

TEST(CircleMap, RigidRotationAndDerivative) {
  const SaddleFocusParams p(1.0, 2.0, 1.0);
  const CircleMap rigid(p, ModulationProfile::constant(), 0.9);
  EXPECT_NEAR(rigid.lift(1.0), 1.9, 1e-15);
  EXPECT_DOUBLE_EQ(rigid.derivative(2.0), 1.0);

  const double a = 0.4;
  const SaddleFocusParams p2(1.0, 2.0, 1.7);
  const CircleMap m(p2, ModulationProfile::sine(a), 0.3);
  for (double phi : {0.0, 1.0, 2.5, 4.0}) {
    EXPECT_NEAR(m.derivative(phi), 1.0 - 1.7 * a * std::cos(phi) / (1.0 + a * std::sin(phi)),
                1e-15);
    EXPECT_NEAR(m.lift(phi + two_pi) - m.lift(phi), two_pi, 1e-12);
  }
}

TEST(Jacobian, SingularLimitWithConstantProfile) {
  const SaddleFocusParams p(1.0, 1.5, 1.0);
  for (int n : {0, 1}) {
    const SingularLimitMap m(p, ModulationProfile::constant(), 0.4, n);
    const Mat2 j = m.jacobian(AnnulusPoint::from_lift(0.5, 2.0));
    EXPECT_EQ(j(0, 0), 0.0);
    EXPECT_EQ(j(0, 1), 0.0);
    EXPECT_EQ(j(1, 0), 0.0);
    EXPECT_EQ(j(1, 1), static_cast<double>(n));
  }
}

TEST(Jacobian, MatchesFiniteDifferencesAtRandomPoints) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const SaddleFocusParams p(1.0, 1.5, 1.3);
  const auto prof = ModulationProfile::sine(0.3);
  const auto cfg = config(1e-2, 1, 0.5, 0.1, 0.05);
  const FullMap full(p, prof, cfg);
  const RescaledMap resc(p, prof, cfg);
  const SingularLimitMap sing(p, prof, 0.8, 1);
  const SingularLimitMap sing0(p, prof, 0.8, 0);
  for (int k = 0; k < 100; ++k) {
    const double phi = two_pi * u(rng);
    const auto pf = AnnulusPoint::from_lift(0.05 + 0.9 * u(rng), phi);
    expect_matrix_near(full.jacobian(pf), fd_jacobian(full, pf, 1e-6, false), 1e-5, 1e-9);
    const auto pr = AnnulusPoint::from_lift(0.1 + 1.5 * u(rng), phi);
    expect_matrix_near(resc.jacobian(pr), fd_jacobian(resc, pr, 1e-6, false), 1e-5, 1e-9);
    expect_matrix_near(sing.jacobian(pr), fd_jacobian(sing, pr, 1e-6, false), 1e-5, 1e-9);
    expect_matrix_near(sing0.jacobian(pr), fd_jacobian(sing0, pr, 1e-6, false), 1e-5, 1e-9);
  }
}

TEST(Jacobian, OneSidedAtTheBottomOfTheStrip) {
  const SaddleFocusParams p(1.0, 1.5, 1.3);
  const FullMap full(p, ModulationProfile::sine(0.3), config(1e-2, 1, 0.5, 0.1, 0.05));
  for (double phi : {0.3, 2.0, 4.0}) {
    const auto pt = AnnulusPoint::from_lift(0.0, phi);
    expect_matrix_near(full.jacobian(pt), fd_jacobian(full, pt, 1e-9, true), 1e-5, 1e-9);
  }
}

TEST(Jacobian, DegreeZeroAngularEntryApproachesPrediction) {
  const SaddleFocusParams p(1.0, 1.5, 1.0);
  const RescaledMap m(p, ModulationProfile::sine(0.3), config(1e-4, 0, 0.0, 0.1));
  const Mat2 j = m.jacobian(AnnulusPoint::from_lift(1.0, 0.0));
  EXPECT_NEAR(j(1, 1), -0.3, 3.0 * std::pow(1e-4, 0.5));
  // The z-column is o(1).
  EXPECT_LT(std::abs(j(0, 0)), 3.0 * std::pow(1e-4, 0.5));
  EXPECT_LT(std::abs(j(1, 0)), 3.0 * std::pow(1e-4, 0.5));
}

TEST(LimitConsistency, RescaledApproachesSingularLimit) {
  const SaddleFocusParams p(1.0, 1.5, 1.0);
  const auto prof = ModulationProfile::sine(0.3);
  double previous = std::numeric_limits<double>::infinity();
  for (double mu : {1e-2, 1e-3, 1e-4}) {
    const auto cfg = config(mu, 1, 0.0, 0.1);
    const RescaledMap resc(p, prof, cfg);
    const SingularLimitMap sing(p, prof, resc.omega_tilde(), 1);
    double sup = 0.0;
    for (int i = 0; i <= 9; ++i) {
      for (int j = 0; j < 100; ++j) {
        const auto pt = AnnulusPoint::from_lift(2.0 * i / 9.0, two_pi * j / 100.0);
        const auto a = resc(pt);
        const auto b = sing(pt);
        sup = std::max({sup, std::abs(a.z - b.z), std::abs(a.lift - b.lift)});
      }
    }
    const double rate = std::pow(mu, std::min(1.0, 1.5 - 1.0));
    EXPECT_LT(sup, previous);
    // Frozen regression bound: sup / mu^(nu-1) measured at 0.394 for these
    // parameters.
    EXPECT_LE(sup / rate, 0.40) << "mu = " << mu;
    previous = sup;
  }
}
