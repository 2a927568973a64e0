#pragma once

// Magnetic geodesic flow and the magnetic curvature seen along an orbit.
//
// In the conformal chart g = exp(2 phi)(dx^2 + dy^2) the unit-speed magnetic
// geodesic equation reduces to
//   x' = exp(-phi) cos theta,  y' = exp(-phi) sin theta,
//   theta' = b + exp(-phi) (phi_y cos theta - phi_x sin theta).

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "magflow/geometry.hpp"
#include "magflow/ode.hpp"

namespace magflow {

struct OrbitTrace {
  std::vector<double> t_samples;
  std::vector<UnitTangent> states;
  std::vector<double> kappa_samples;
  ode::Tolerances step_controls;

  std::size_t size() const { return t_samples.size(); }
  void write_csv(std::ostream& os) const;
};

// |g(v, v) - 1| for the chart representation of v.
double unit_speed_defect(const SurfaceModel& m, const UnitTangent& v);

// Forward orbit sampled at t_i = i * spacing up to the first grid point at or
// beyond `horizon`.  Torus coordinates are reported modulo the periods;
// theta is left unwrapped.
OrbitTrace integrate_orbit(const SurfaceModel& m, const UnitTangent& v0, double horizon,
                           double tol = 1e-10, double spacing = 0.01);

// Orbit on [-horizon, horizon].  The backward half is obtained by running the
// reversed system (g, -b) forward from -v0 and reversing the velocities.
OrbitTrace integrate_orbit_two_sided(const SurfaceModel& m, const UnitTangent& v0, double horizon,
                                     double tol = 1e-10, double spacing = 0.01);

// The magnetic curvature t -> K(t) along one orbit.
class CurvatureProfile {
 public:
  static CurvatureProfile constant(double kappa, std::string provenance = "constant");
  // Wraps an arbitrary evaluator.  `k_bound` must satisfy K > -k_bound^2 on the domain.
  static CurvatureProfile from_function(std::function<double(double)> kappa, double k_bound,
                                        std::string provenance = "abstract",
                                        double t_min = -std::numeric_limits<double>::infinity(),
                                        double t_max = std::numeric_limits<double>::infinity());
  // Cubic B-spline through uniformly spaced samples t_i = t0 + i h.
  static CurvatureProfile from_samples(double t0, double h, std::vector<double> samples,
                                       std::string provenance = "samples");

  double operator()(double t) const;

  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  bool contains(double t) const { return t >= t_min_ && t <= t_max_; }
  double k_bound() const { return k_bound_; }
  const std::string& provenance() const { return provenance_; }
  std::optional<double> constant_value() const { return constant_; }

  // s -> K(-s).
  CurvatureProfile flipped() const;
  // s -> K(s + offset).
  CurvatureProfile shifted(double offset) const;
  CurvatureProfile with_k_bound(double k) const;

  // Minimum of K over a uniform grid of [a, b] (clipped to the domain).
  double sampled_min(double a, double b, double step = 0.01) const;
  double sampled_max(double a, double b, double step = 0.01) const;

 private:
  CurvatureProfile() = default;

  std::shared_ptr<const std::function<double(double)>> base_;
  double sign_ = 1.0;  // K(t) = base(sign * t + offset)
  double offset_ = 0.0;
  double t_min_ = -std::numeric_limits<double>::infinity();
  double t_max_ = std::numeric_limits<double>::infinity();
  double k_bound_ = 0.0;
  std::optional<double> constant_;
  std::string provenance_;
};

// k with K > -k^2 on the sampled values: sqrt(max(0, -min K)) + margin.
double k_bound_from_samples(const std::vector<double>& kappa, double margin = 1e-6);

// Profile along a sampled orbit (uniform t grid required).  Constant models
// give the exact constant profile.
CurvatureProfile curvature_profile(const SurfaceModel& m, const OrbitTrace& orbit,
                                   std::string provenance = "orbit");

// Profile of an AbstractProfile model (or the exact constant of a
// ConstantCurvature model).  The declared k_bound is validated on a uniform
// grid of [-validation_horizon, validation_horizon].
CurvatureProfile curvature_profile(const SurfaceModel& m, double validation_horizon = 120.0,
                                   double validation_step = 0.01);

}  // namespace magflow
