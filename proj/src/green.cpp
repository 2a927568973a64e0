#include "magflow/green.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "magflow/errors.hpp"

namespace magflow {

namespace {

// Runs psi on r = sign * schedule.  Slopes increase along the schedule for
// sign = +1 and decrease for sign = -1.
SlopeEstimate run_schedule(const CurvatureProfile& p, double sign,
                           const std::vector<double>& schedule, const GreenOptions& opts) {
  SlopeEstimate est;
  for (const double r_abs : schedule) {
    const double r = sign * r_abs;
    const JrSlope s = solve_Jr_slope(p, r, opts.jacobi_tol, opts.consistency_tol);
    est.max_cross_check = std::max(est.max_cross_check, s.cross_check);
    if (!est.slopes.empty()) {
      const double step = s.slope - est.slopes.back();
      if (sign * step < -opts.monotone_tol) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "psi is not monotone on the schedule: psi(" << est.r_schedule.back()
            << ") = " << est.slopes.back() << ", psi(" << r << ") = " << s.slope;
        throw NumericalInconsistency(msg.str());
      }
      est.residuals.push_back(std::abs(step));
    }
    est.r_schedule.push_back(r);
    est.slopes.push_back(s.slope);
    if (!est.residuals.empty() && est.residuals.back() < opts.tol) {
      est.converged = true;
      break;
    }
  }
  est.last_iterate = est.slopes.back();
  est.slope = est.last_iterate;
  const std::size_t n = est.slopes.size();
  if (!est.converged && opts.tail_extrapolation && n >= 3) {
    const double d1 = est.slopes[n - 2] - est.slopes[n - 3];
    const double d2 = est.slopes[n - 1] - est.slopes[n - 2];
    if (d1 != 0.0) {
      const double q = d2 / d1;
      if (q > 0.0 && q < 1.0) {
        est.slope = est.last_iterate + d2 * q / (1.0 - q);
        est.extrapolated = true;
      }
    }
  }
  return est;
}

SlopeEstimate negated(SlopeEstimate e) {
  e.slope = -e.slope;
  e.last_iterate = -e.last_iterate;
  for (auto& s : e.slopes) s = -s;
  for (auto& r : e.r_schedule) r = -r;
  return e;
}

}  // namespace

double GreenEstimate::stable_bound_constant() const { return 1.0 + std::abs(u_plus0); }

double psi_slope(const CurvatureProfile& p, double r, double tol) {
  return solve_Jr_slope(p, r, tol).slope;
}

std::vector<double> r_schedule(const CurvatureProfile& p, Side side, const GreenOptions& opts) {
  if (!(opts.r0 > 0.0)) throw DomainError("r0 must be positive");
  const double reach = side == Side::Stable ? p.t_max() : -p.t_min();
  const double cap = std::min(opts.r_cap, reach);
  std::vector<double> out;
  for (double r = opts.r0; r <= cap * (1.0 + 1e-12); r *= 2.0) out.push_back(r);
  if (out.empty()) {
    std::ostringstream msg;
    msg << "profile '" << p.provenance() << "' does not reach r0 = " << opts.r0;
    throw InsufficientData(msg.str());
  }
  return out;
}

SlopeEstimate green_slope(const CurvatureProfile& p, Side side, const GreenOptions& opts) {
  if (side == Side::Stable) return run_schedule(p, 1.0, r_schedule(p, Side::Stable, opts), opts);
  if (opts.unstable_route == UnstableRoute::Flip) {
    const CurvatureProfile q = flip_profile(p);
    return negated(run_schedule(q, 1.0, r_schedule(q, Side::Stable, opts), opts));
  }
  return run_schedule(p, -1.0, r_schedule(p, Side::Unstable, opts), opts);
}

GreenEstimate green_estimate(const CurvatureProfile& p, const GreenOptions& opts) {
  GreenEstimate g;
  g.plus = green_slope(p, Side::Stable, opts);
  g.minus = green_slope(p, Side::Unstable, opts);
  g.u_plus0 = g.plus.slope;
  g.u_minus0 = g.minus.slope;
  g.gap = (g.u_minus0 - g.u_plus0) + 0.0;
  g.converged = g.plus.converged && g.minus.converged;
  return g;
}

InvarianceResult invariance_check(const CurvatureProfile& p, double t, Side side,
                                  double precise_tol, GreenOptions opts) {
  opts.jacobi_tol = precise_tol;
  const SlopeEstimate base = green_slope(p, side, opts);
  const SlopeEstimate moved = green_slope(p.shifted(t), side, opts);
  if (!base.converged || !moved.converged)
    throw NumericalInconsistency("invariance check needs converged slopes at 0 and at t");
  InvarianceResult out;
  out.shifted_slope = moved.slope;
  RiccatiOptions ro;
  ro.tol = precise_tol;
  const RiccatiTrace tr = integrate_riccati(p, base.slope, 0.0, t, ro);
  if (tr.blowup_time) {
    out.blowup_time = tr.blowup_time;
    out.propagated = std::numeric_limits<double>::quiet_NaN();
    out.residual = std::numeric_limits<double>::infinity();
    return out;
  }
  out.propagated = tr.u_samples.back();
  out.residual = std::abs(out.propagated - out.shifted_slope);
  return out;
}

double invariance_residual(const CurvatureProfile& p, double t, double precise_tol, Side side) {
  const InvarianceResult r = invariance_check(p, t, side, precise_tol);
  if (r.blowup_time) {
    std::ostringstream msg;
    msg << "Riccati solution from the Green slope blows up at t=" << *r.blowup_time;
    throw NumericalInconsistency(msg.str());
  }
  return r.residual;
}

GreenSolution green_riccati_solution(const CurvatureProfile& p, Side side, double a, double b,
                                     const GreenOptions& opts, double sample_spacing) {
  if (!(a < b)) throw DomainError("green_riccati_solution needs a < b");
  GreenSolution out;
  out.anchor_time = side == Side::Stable ? b : a;
  out.anchor = green_slope(p.shifted(out.anchor_time), side, opts);
  RiccatiOptions ro;
  ro.tol = opts.jacobi_tol;
  ro.sample_spacing = sample_spacing;
  out.trace = side == Side::Stable ? integrate_riccati(p, out.anchor.slope, b, a, ro)
                                   : integrate_riccati(p, out.anchor.slope, a, b, ro);
  return out;
}

}  // namespace magflow
