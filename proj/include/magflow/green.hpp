#pragma once

// Stable and unstable Green slopes u+(0) = lim_{r->+inf} (J^r)'(0) and
// u-(0) = lim_{r->-inf} (J^r)'(0).

#include <optional>
#include <vector>

#include "magflow/flow.hpp"
#include "magflow/jacobi.hpp"
#include "magflow/riccati.hpp"

namespace magflow {

enum class Side { Stable, Unstable };

// How the unstable slope is obtained.
enum class UnstableRoute {
  Flip,       // u-(p) = -u+(flip(p)), the default
  NegativeR,  // psi_slope at r = -r0, -2 r0, ...
};

struct GreenOptions {
  double r0 = 5.0;
  double r_cap = 5.0 * 16384.0;
  double tol = 1e-9;
  double jacobi_tol = kJacobiTol;
  double consistency_tol = 1e-7;
  // Allowed decrease between successive slopes before the schedule is
  // declared inconsistent with monotonicity.
  double monotone_tol = 1e-10;
  // When the schedule is exhausted with geometrically shrinking increments,
  // add the geometric tail (flagged as extrapolated, never as converged).
  bool tail_extrapolation = true;
  UnstableRoute unstable_route = UnstableRoute::Flip;
};

// One side of the limit.
struct SlopeEstimate {
  double slope = 0.0;         // reported value (extrapolated if flagged)
  double last_iterate = 0.0;  // psi at the last r of the schedule
  bool converged = false;
  bool extrapolated = false;
  std::vector<double> r_schedule;
  std::vector<double> slopes;
  std::vector<double> residuals;  // |psi(r_{i+1}) - psi(r_i)|
  double max_cross_check = 0.0;   // worst disagreement between the two J^r routes
};

struct GreenEstimate {
  double u_plus0 = 0.0;
  double u_minus0 = 0.0;
  double gap = 0.0;  // u_minus0 - u_plus0
  bool converged = false;
  SlopeEstimate plus;
  SlopeEstimate minus;

  // c with |J'(0)| <= c |J(0)| on the stable line, taken as 1 + |u+(0)|.
  double stable_bound_constant() const;
};

// (J^r)'(0).
double psi_slope(const CurvatureProfile& p, double r, double tol = kJacobiTol);

// Doubling schedule r0, 2 r0, ... limited by r_cap and by the profile domain.
std::vector<double> r_schedule(const CurvatureProfile& p, Side side, const GreenOptions& opts = {});

SlopeEstimate green_slope(const CurvatureProfile& p, Side side, const GreenOptions& opts = {});
GreenEstimate green_estimate(const CurvatureProfile& p, const GreenOptions& opts = {});

struct InvarianceResult {
  double residual = 0.0;
  double propagated = 0.0;     // Riccati solution at t started from the slope at 0
  double shifted_slope = 0.0;  // slope of s -> K(t + s) at 0
  std::optional<double> blowup_time;
};

inline constexpr double kPreciseTol = 1e-16;

// Compares the slope at 0 carried to time t by the Riccati equation with the
// slope of the shifted profile.  Both slopes must converge.
InvarianceResult invariance_check(const CurvatureProfile& p, double t, Side side = Side::Stable,
                                  double precise_tol = kPreciseTol, GreenOptions opts = {});
// Residual of invariance_check; a Riccati blow-up raises NumericalInconsistency.
double invariance_residual(const CurvatureProfile& p, double t, double precise_tol = kPreciseTol,
                           Side side = Side::Stable);

// Green solution of the Riccati equation on [a, b].  The stable solution is
// anchored at b and integrated backward, the unstable one anchored at a and
// integrated forward; both directions are contracting for the respective line.
struct GreenSolution {
  RiccatiTrace trace;  // samples ordered in integration direction
  double anchor_time = 0.0;
  SlopeEstimate anchor;
};

GreenSolution green_riccati_solution(const CurvatureProfile& p, Side side, double a, double b,
                                     const GreenOptions& opts = {}, double sample_spacing = 0.01);

}  // namespace magflow
