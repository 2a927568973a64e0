#include <gtest/gtest.h>

#include <cmath>

#include "magflow/anosov.hpp"
#include "magflow/errors.hpp"
#include "profiles.hpp"

using namespace magflow;
using magflow::testing::half_sine_profile;

TEST(Conjugate, ConstantProfiles) {
  EXPECT_NEAR(*first_conjugate_time(CurvatureProfile::constant(1.0), 10.0), kPi, 1e-9);
  EXPECT_NEAR(*first_conjugate_time(CurvatureProfile::constant(4.0), 10.0), kPi / 2, 1e-9);
  EXPECT_NEAR(*first_conjugate_time(CurvatureProfile::constant(4.0), -10.0), -kPi / 2, 1e-9);
  EXPECT_FALSE(first_conjugate_time(CurvatureProfile::constant(-1.0), 50.0));
  EXPECT_FALSE(first_conjugate_time(CurvatureProfile::constant(1.0), 3.0));
  EXPECT_THROW(first_conjugate_time(CurvatureProfile::constant(1.0), 0.0), DomainError);
}

TEST(Conjugate, SturmComparison) {
  // Larger curvature gives earlier conjugate points.
  double prev = 1e300;
  for (double k : {0.5, 1.0, 2.0, 3.0}) {
    const auto p = CurvatureProfile::from_function([k](double t) { return k + 0.2 * std::cos(t); }, 0.0);
    const auto c = first_conjugate_time(p, 20.0);
    ASSERT_TRUE(c);
    EXPECT_LT(*c, prev);
    EXPECT_LE(*c, kPi / std::sqrt(k - 0.2) + 1e-9);
    EXPECT_GE(*c, kPi / std::sqrt(k + 0.2) - 1e-9);
    prev = *c;
  }
}

TEST(Gap, Examples) {
  const auto hyp = transversality_gap(CurvatureProfile::constant(-1.0));
  EXPECT_NEAR(hyp.gap, 2.0, 1e-8);
  EXPECT_TRUE(hyp.converged);
  EXPECT_NEAR(transversality_gap(CurvatureProfile::constant(0.0)).gap, 0.0, 1e-8);
  const auto hs = transversality_gap(half_sine_profile());
  EXPECT_TRUE(hs.converged);
  EXPECT_GT(hs.gap, 1e-3);
}

TEST(Witness, Examples) {
  const auto flat = CurvatureProfile::constant(0.0);
  const auto w = bounded_jacobi_witness(flat, 0.0, 0.0, 1e-4);
  ASSERT_TRUE(w);
  EXPECT_TRUE(w->bounded);
  EXPECT_NEAR(w->sup_norm, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(w->t.front(), -50.0);
  EXPECT_DOUBLE_EQ(w->t.back(), 50.0);
  for (double j : w->j) EXPECT_NEAR(j, 1.0, 1e-12);
  EXPECT_FALSE(bounded_jacobi_witness(CurvatureProfile::constant(-1.0), -1.0, 2.0, 1e-4));
  // A positive-curvature "witness" is not produced when the gap is large.
  const auto big = bounded_jacobi_witness(CurvatureProfile::constant(-1e-6), 0.0, 1e-3, 1e-4);
  EXPECT_FALSE(big);
}

TEST(Contraction, Examples) {
  const auto one = contraction_fit(CurvatureProfile::constant(-1.0));
  ASSERT_FALSE(one.failed) << one.failure;
  EXPECT_NEAR(one.c, 1.0, 0.05);
  EXPECT_NEAR(one.d, std::sqrt(2.0), 0.05 * std::sqrt(2.0));
  const auto two = contraction_fit(CurvatureProfile::constant(-4.0));
  ASSERT_FALSE(two.failed);
  EXPECT_NEAR(two.c, 2.0, 0.1);
  const auto flat = contraction_fit(CurvatureProfile::constant(0.0));
  EXPECT_TRUE(flat.failed);
  EXPECT_LT(std::abs(flat.c), 1e-3);
}

TEST(Contraction, NormAtTen) {
  const auto f = contraction_fit(CurvatureProfile::constant(-1.0));
  const std::size_t i = static_cast<std::size_t>(std::lround(10.0 / (f.t[1] - f.t[0])));
  ASSERT_NEAR(f.t[i], 10.0, 1e-9);
  EXPECT_NEAR(std::exp(f.log_norm[i]), std::sqrt(2.0) * std::exp(-10.0),
              0.05 * std::sqrt(2.0) * std::exp(-10.0));
}

TEST(Negativity, Examples) {
  const auto neg = negativity_criterion({CurvatureProfile::constant(-1.0)}, 1e-8, 50.0);
  EXPECT_TRUE(neg.applicable);
  EXPECT_TRUE(neg.passes);
  const auto flat = negativity_criterion({CurvatureProfile::constant(0.0)}, 1e-8, 50.0);
  EXPECT_TRUE(flat.applicable);
  EXPECT_FALSE(flat.passes);
  const auto hs = negativity_criterion({half_sine_profile(), half_sine_profile().shifted(1.0)}, 1e-8, 50.0);
  EXPECT_TRUE(hs.applicable);
  EXPECT_TRUE(hs.passes);
  const auto pos = negativity_criterion({CurvatureProfile::constant(0.1)}, 1e-8, 50.0);
  EXPECT_FALSE(pos.applicable);
}

TEST(Growth, Constants) {
  EXPECT_NEAR(growth_constant(CurvatureProfile::constant(-1.0)), 1.0, 1e-12);
  EXPECT_NEAR(growth_constant(CurvatureProfile::constant(0.0)), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(growth_constant(CurvatureProfile::constant(1.0), 5.0), 0.0);
}

TEST(Profile, Verdicts) {
  ClassifyOptions o;
  const auto hs = analyze_profile(half_sine_profile(), o);
  EXPECT_EQ(hs.verdict, Verdict::NumericallyAnosov) << hs.reason << " " << hs.error;
  const auto flat = analyze_profile(CurvatureProfile::constant(0.0), o);
  EXPECT_EQ(flat.verdict, Verdict::NotAnosov) << flat.reason;
  ASSERT_TRUE(flat.witness);
  EXPECT_TRUE(flat.witness->bounded);
  const auto sph = analyze_profile(CurvatureProfile::constant(1.0), o);
  EXPECT_EQ(sph.verdict, Verdict::NotAnosov);
  EXPECT_NEAR(*sph.conjugate_forward, kPi, 1e-9);
}

TEST(Profile, GapImpliesContraction) {
  ClassifyOptions o;
  for (const auto& p : magflow::testing::random_negative_profiles(4, 77)) {
    const auto r = analyze_profile(p, o);
    ASSERT_EQ(r.verdict, Verdict::NumericallyAnosov) << r.reason << " " << r.error;
    EXPECT_GT(r.contraction->c, 0.0);
    EXPECT_GT(*r.growth, 0.0);
    EXPECT_TRUE(r.slope_bound_ok);
  }
}

TEST(Classify, ConstantModels) {
  const auto good = classify(SurfaceModel::constant_curvature(-1.0, 0.5, -2, 4 * kPi));
  EXPECT_EQ(good.verdict, Verdict::NumericallyAnosov) << good.reason;
  ASSERT_TRUE(good.min_gap);
  EXPECT_NEAR(*good.min_gap, 2 * std::sqrt(0.75), 1e-8);
  ASSERT_EQ(good.orbits.size(), 1u);

  const auto edge = classify(SurfaceModel::constant_curvature(-1.0, 1.0, -2, 4 * kPi));
  EXPECT_EQ(edge.verdict, Verdict::NotAnosov);
  ASSERT_TRUE(edge.inequality);
  EXPECT_FALSE(edge.inequality->passes);
  ASSERT_TRUE(edge.orbits[0].witness);
  EXPECT_TRUE(edge.orbits[0].witness->bounded);
}

TEST(Classify, TorusIsNeverAnosov) {
  const auto m = SurfaceModel::conformal_torus(FourierSeries2D(0.0, {{1, 0, 0.05, 0.0}}),
                                               FourierSeries2D(0.3, {{0, 1, 0.0, 0.1}}));
  ClassifyOptions o;
  o.ensemble_count = 2;
  o.horizon = 30.0;
  const auto rep = classify(m, o);
  EXPECT_EQ(rep.verdict, Verdict::NotAnosov);
  EXPECT_EQ(rep.reason, "euler characteristic ≥ 0");
  EXPECT_EQ(rep.orbits.size(), 2u);
  ASSERT_TRUE(rep.inequality);
  EXPECT_FALSE(rep.inequality->passes);
}

TEST(Classify, AbstractProfile) {
  const auto m = SurfaceModel::abstract_profile(
      [](double t) {
        const double s = std::max(0.0, std::sin(t));
        return -s * s;
      },
      1.0 + 1e-6, -2);
  const auto rep = classify(m);
  EXPECT_EQ(rep.verdict, Verdict::NumericallyAnosov) << rep.reason;
  EXPECT_FALSE(rep.inequality);
}

TEST(Ensemble, HaltonPoints) {
  ConformalTorus t;
  t.period_x = 2.0;
  const auto a = ensemble_initial_conditions(t, 4, 0);
  EXPECT_DOUBLE_EQ(a[0].x, 1.0);
  EXPECT_DOUBLE_EQ(a[0].y, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(a[0].theta, kTwoPi / 5.0);
  const auto b = ensemble_initial_conditions(t, 3, 1);
  EXPECT_DOUBLE_EQ(b[0].x, a[1].x);
  EXPECT_DOUBLE_EQ(b[2].theta, a[3].theta);
}

TEST(Classify, WorkersDoNotChangeResults) {
  const auto m = SurfaceModel::conformal_torus(FourierSeries2D(0.0, {{1, 1, 0.05, 0.0}}),
                                               FourierSeries2D(0.5, {}));
  ClassifyOptions o;
  o.ensemble_count = 4;
  o.horizon = 20.0;
  const auto one = classify(m, o);
  o.workers = 3;
  const auto three = classify(m, o);
  ASSERT_EQ(one.orbits.size(), three.orbits.size());
  for (std::size_t i = 0; i < one.orbits.size(); ++i) {
    EXPECT_EQ(one.orbits[i].reason, three.orbits[i].reason);
    EXPECT_EQ(one.orbits[i].kappa_min, three.orbits[i].kappa_min);
  }
}
