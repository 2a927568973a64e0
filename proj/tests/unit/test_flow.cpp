#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "magflow/errors.hpp"
#include "magflow/flow.hpp"

using namespace magflow;

namespace {

SurfaceModel bumpy_torus(double b_scale = 1.0) {
  return SurfaceModel::conformal_torus(
      FourierSeries2D(0.0, {{1, 0, 0.08, 0.0}, {0, 1, 0.0, 0.05}, {1, 1, 0.03, 0.02}}),
      FourierSeries2D(0.4 * b_scale, {{1, 0, 0.0, 0.2 * b_scale}, {0, 1, 0.1 * b_scale, 0.0}}));
}

double periodic_distance(double a, double b, double period) {
  const double d = std::fmod(std::abs(a - b), period);
  return std::min(d, period - d);
}

}  // namespace

TEST(Flow, FlatGeodesicIsStraight) {
  const auto m = SurfaceModel::conformal_torus(FourierSeries2D(), FourierSeries2D());
  const auto tr = integrate_orbit(m, {0.0, 0.25, 0.0}, 3.7);
  for (std::size_t i = 0; i < tr.size(); i += 37) {
    const double t = tr.t_samples[i];
    EXPECT_NEAR(tr.states[i].theta, 0.0, 1e-14);
    EXPECT_LT(periodic_distance(tr.states[i].x, t, 1.0), 1e-12);
    EXPECT_NEAR(tr.states[i].y, 0.25, 1e-14);
    EXPECT_GE(tr.states[i].x, 0.0);
    EXPECT_LT(tr.states[i].x, 1.0);
  }
}

TEST(Flow, FlatUnitFieldTurnsAtUnitRate) {
  const auto m = SurfaceModel::conformal_torus(FourierSeries2D(), FourierSeries2D(1.0, {}));
  const UnitTangent v0{0.3, 0.6, 0.4};
  const auto tr = integrate_orbit(m, v0, 10 * kTwoPi);
  for (std::size_t i = 0; i < tr.size(); ++i)
    ASSERT_NEAR(tr.states[i].theta, v0.theta + tr.t_samples[i], 1e-8);
  for (int k = 1; k <= 10; ++k) {
    // Orbit is a unit circle: back at the start after each period.
    const UnitTangent back = integrate_orbit(m, v0, k * kTwoPi, 1e-10, k * kTwoPi).states.back();
    EXPECT_LT(periodic_distance(back.x, v0.x, 1.0), 1e-8);
    EXPECT_LT(periodic_distance(back.y, v0.y, 1.0), 1e-8);
  }
}

TEST(Flow, ConstantModelTraceIsDegenerate) {
  const auto m = SurfaceModel::constant_curvature(-1.0, 0.5, -2, 4 * kPi);
  const auto tr = integrate_orbit(m, {}, 2.0, 1e-10, 0.5);
  ASSERT_EQ(tr.size(), 5u);
  for (double k : tr.kappa_samples) EXPECT_DOUBLE_EQ(k, -0.75);
}

TEST(Flow, UnitSpeedAndCurvatureSamples) {
  const auto m = bumpy_torus();
  const auto tr = integrate_orbit(m, {0.2, 0.7, 1.1}, 100.0);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    ASSERT_LT(unit_speed_defect(m, tr.states[i]), 1e-10);
    ASSERT_NEAR(tr.kappa_samples[i], magnetic_curvature(m, tr.states[i]), 1e-12);
  }
}

TEST(Flow, ReversedFieldRetracesOrbit) {
  const auto m = bumpy_torus();
  const UnitTangent v0{0.2, 0.7, 1.1};
  const double horizon = 20.0;
  const UnitTangent end = integrate_orbit(m, v0, horizon).states.back();
  const UnitTangent back =
      integrate_orbit(m.with_reversed_field(), {end.x, end.y, end.theta + kPi}, horizon).states.back();
  EXPECT_LT(periodic_distance(back.x, v0.x, 1.0), 1e-7);
  EXPECT_LT(periodic_distance(back.y, v0.y, 1.0), 1e-7);
  EXPECT_LT(periodic_distance(back.theta - kPi, v0.theta, kTwoPi), 1e-7);
}

TEST(Flow, TwoSidedOrbitIsOneOrbit) {
  const auto m = bumpy_torus();
  const UnitTangent v0{0.45, 0.1, 2.0};
  const auto tr = integrate_orbit_two_sided(m, v0, 5.0);
  const std::size_t mid = (tr.size() - 1) / 2;
  EXPECT_DOUBLE_EQ(tr.t_samples[mid], 0.0);
  EXPECT_DOUBLE_EQ(tr.t_samples.front(), -5.0);
  // Flowing forward from the state at t = -3 reaches v0 after time 3.
  const std::size_t i = mid - 300;
  ASSERT_NEAR(tr.t_samples[i], -3.0, 1e-12);
  const UnitTangent reached = integrate_orbit(m, tr.states[i], 3.0).states.back();
  EXPECT_LT(periodic_distance(reached.x, v0.x, 1.0), 1e-7);
  EXPECT_LT(periodic_distance(reached.y, v0.y, 1.0), 1e-7);
  EXPECT_LT(periodic_distance(reached.theta, v0.theta, kTwoPi), 1e-6);
  for (std::size_t k = 0; k < tr.size(); k += 97)
    EXPECT_NEAR(tr.kappa_samples[k], magnetic_curvature(m, tr.states[k]), 1e-12);
}

TEST(Flow, AbstractModelHasNoOrbit) {
  const auto m = SurfaceModel::abstract_profile([](double) { return -1.0; }, 1.1);
  EXPECT_THROW(integrate_orbit(m, {}, 1.0), UnsupportedQuery);
  EXPECT_THROW(integrate_orbit(bumpy_torus(), {}, -1.0), DomainError);
}

TEST(Flow, OrbitCsv) {
  const auto m = SurfaceModel::conformal_torus(FourierSeries2D(), FourierSeries2D(1.0, {}));
  std::ostringstream os;
  integrate_orbit(m, {}, 0.02).write_csv(os);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "t,x,y,theta,kappa");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
}

TEST(Profile, ConstantModel) {
  const auto m = SurfaceModel::constant_curvature(-1.0, 0.5, -2, 4 * kPi);
  const auto p = curvature_profile(m);
  EXPECT_DOUBLE_EQ(p(17.0), -0.75);
  EXPECT_NEAR(p.k_bound(), std::sqrt(0.75), 1e-5);
  EXPECT_GT(p.k_bound() * p.k_bound() - 0.75, 0.0);
}

TEST(Profile, FlatTorusUnitField) {
  const auto m = SurfaceModel::conformal_torus(FourierSeries2D(), FourierSeries2D(1.0, {}));
  const auto p = curvature_profile(m, integrate_orbit(m, {0.1, 0.2, 0.3}, 5.0));
  EXPECT_DOUBLE_EQ(p(2.345), 1.0);
  EXPECT_DOUBLE_EQ(p.t_min(), 0.0);
  EXPECT_THROW(p(6.0), DomainError);
}

TEST(Profile, AbstractPassThrough) {
  const auto m = SurfaceModel::abstract_profile([](double t) { return -1.0 + 0.3 * std::sin(t); },
                                                std::sqrt(1.3) + 1e-6);
  const auto p = curvature_profile(m);
  for (double t : {-3.0, 0.0, 1.7, 200.0}) EXPECT_DOUBLE_EQ(p(t), -1.0 + 0.3 * std::sin(t));
  EXPECT_GE(p.k_bound(), std::sqrt(1.3));
}

TEST(Profile, AbstractDeclaredBoundIsValidated) {
  const auto m = SurfaceModel::abstract_profile([](double t) { return -1.0 + 0.3 * std::sin(t); }, 1.0);
  EXPECT_THROW(curvature_profile(m), DomainError);
}

TEST(Profile, SplineReproducesSamples) {
  const auto m = bumpy_torus();
  const auto tr = integrate_orbit_two_sided(m, {0.3, 0.3, 0.3}, 4.0);
  const auto p = curvature_profile(m, tr);
  for (std::size_t i = 0; i < tr.size(); ++i) ASSERT_NEAR(p(tr.t_samples[i]), tr.kappa_samples[i], 1e-12);
  double lo = 1e300;
  for (double k : tr.kappa_samples) lo = std::min(lo, k);
  EXPECT_GT(p.k_bound() * p.k_bound() + lo, -1e-12);
  // Between samples the spline agrees with the geometry to O(h^4).
  const auto fine = integrate_orbit(m, {0.3, 0.3, 0.3}, 2.0, 1e-12, 0.005);
  for (std::size_t i = 1; i < fine.size(); i += 2)
    ASSERT_NEAR(p(fine.t_samples[i]), fine.kappa_samples[i], 1e-5);
}

TEST(Profile, TooFewSamples) {
  EXPECT_THROW(CurvatureProfile::from_samples(0.0, 0.1, {1.0, 2.0, 3.0}), InsufficientData);
  const auto m = bumpy_torus();
  EXPECT_THROW(curvature_profile(m, integrate_orbit(m, {}, 0.02)), InsufficientData);
}

TEST(Profile, FlipAndShift) {
  const auto p = CurvatureProfile::from_function([](double t) { return -1.0 + 0.3 * std::sin(t); }, 1.2);
  const auto f = p.flipped();
  const auto s = p.shifted(2.0);
  for (double t : {-1.3, 0.0, 0.4, 5.0}) {
    EXPECT_DOUBLE_EQ(f(t), -1.0 - 0.3 * std::sin(t));
    EXPECT_DOUBLE_EQ(f.flipped()(t), p(t));
    EXPECT_DOUBLE_EQ(s(t), p(t + 2.0));
    EXPECT_DOUBLE_EQ(f.shifted(1.0)(t), p(-(t + 1.0)));
    EXPECT_DOUBLE_EQ(s.flipped()(t), p(-t + 2.0));
  }
  const auto q = CurvatureProfile::from_samples(-1.0, 0.5, {1, 2, 3, 4, 5});
  EXPECT_DOUBLE_EQ(q.flipped().t_min(), -1.0);
  EXPECT_DOUBLE_EQ(q.flipped().t_max(), 1.0);
  EXPECT_DOUBLE_EQ(q.shifted(0.5).t_max(), 0.5);
}
