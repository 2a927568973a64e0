#pragma once

// Scalar perpendicular Jacobi fields J'' + K(t) J = 0 along a curvature profile.
//
// The scalar equations are integrated in long double: the stable and unstable
// solutions separate like exp(+-2kt), so double precision loses the stable
// direction within a few tens of time units.

#include <functional>
#include <iosfwd>
#include <optional>

#include "magflow/flow.hpp"
#include "magflow/ode.hpp"

namespace magflow {

// Default relative/absolute tolerance for the scalar Jacobi and Riccati equations.
inline constexpr double kJacobiTol = 1e-14;

struct PerpJacobiState {
  double value = 0.0;
  double deriv = 0.0;
};

// Quotient-bundle vector identified with (J(0), J'(0)).
struct QuotientVector {
  double jperp0 = 0.0;
  double djperp0 = 0.0;
};

class PerpJacobiTrace {
 public:
  using Dense = ode::DenseTrace<long double, 2>;

  PerpJacobiTrace() = default;
  explicit PerpJacobiTrace(Dense dense) : dense_(std::move(dense)) {}

  PerpJacobiState operator()(double t) const;
  double t_first() const { return static_cast<double>(dense_.t_first()); }
  double t_last() const { return static_cast<double>(dense_.t_last()); }
  bool covers(double t) const { return dense_.covers(t); }
  const Dense& dense() const { return dense_; }

  // Columns t, J, dJ at every accepted step.
  void write_csv(std::ostream& os) const;

 private:
  Dense dense_;
};

PerpJacobiTrace integrate_perp(const CurvatureProfile& p, const PerpJacobiState& s0, double t0,
                               double t1, double tol = kJacobiTol);

// J(0) = 0, J'(0) = 1, evaluated at t.
PerpJacobiState solve_Jz(const CurvatureProfile& p, double t, double tol = kJacobiTol);

// First time after the trace start at which J changes sign.  J is checked on a
// grid of spacing `scan_step` from the start plus every integrator node; the
// crossing is refined by bisection on the dense output.
std::optional<double> first_sign_change(const PerpJacobiTrace& trace, double scan_step = 0.01,
                                        double bisect_tol = 1e-12);

// First zero of the J(0) = 0, J'(0) = 1 field in (0, horizon] (or [horizon, 0)
// when horizon < 0).
std::optional<double> first_zero_Jz(const CurvatureProfile& p, double horizon,
                                    double scan_step = 0.01, double bisect_tol = 1e-12,
                                    double tol = kJacobiTol);

// Initial slope (J^r)'(0) of the field with J(0) = 1, J(r) = 0, computed two ways.
struct JrSlope {
  double slope = 0.0;       // shooting value, reported as the answer
  double shooting = 0.0;    // backward integration from (0, -sign r) at r
  double formula = 0.0;     // J^z(t) * integral_t^r du / J^z(u)^2 near 0, then back to 0
  double cross_check = 0.0; // |shooting - formula|
};

// Throws ConjugatePointError if J^z vanishes in (0, r], NumericalInconsistency if
// the two routes differ by more than `consistency_tol`.
JrSlope solve_Jr_slope(const CurvatureProfile& p, double r, double tol = kJacobiTol,
                       double consistency_tol = 1e-7);

// J^r evaluated at t.
PerpJacobiState solve_Jr(const CurvatureProfile& p, double r, double t, double tol = kJacobiTol);

// a.deriv * b.value - b.deriv * a.value.
double wronskian(const PerpJacobiState& a, const PerpJacobiState& b);

// t -> JT0 + integral_0^t b(s) J(s) ds.  The returned callable keeps its own
// copy of `perp` and throws DomainError outside the trace.
std::function<double(double)> tangential_component(std::function<double(double)> b_along_orbit,
                                                   const PerpJacobiTrace& perp, double jt0);

// s -> K(-s): the curvature seen by L(t) = J(-t) along the reversed system.
CurvatureProfile flip_profile(const CurvatureProfile& p);

double sasaki_norm(const QuotientVector& xi);
inline double sasaki_norm(const PerpJacobiState& s) {
  return sasaki_norm(QuotientVector{s.value, s.deriv});
}

}  // namespace magflow
