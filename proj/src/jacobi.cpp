#include "magflow/jacobi.hpp"

#include <cmath>
#include <memory>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "magflow/errors.hpp"

namespace magflow {

namespace {

using Real = long double;
using JState = ode::State<Real, 2>;
using JNode = ode::Node<Real, 2>;

ode::Tolerances tolerances(double tol) {
  ode::Tolerances t;
  t.rtol = tol;
  t.atol = tol;
  return t;
}

auto jacobi_rhs(const CurvatureProfile& p) {
  return [&p](Real t, const JState& y, JState& d) {
    d[0] = y[1];
    d[1] = -static_cast<Real>(p(static_cast<double>(t))) * y[0];
  };
}

constexpr Real kRescaleAbove = 1e200L;

// Integrates a linear solution from t0 to t1, rescaling to avoid overflow.
// Returns the final state and, when `probe` is set, the state at *probe
// expressed on the same scale as the final state.
struct ScaledResult {
  JState end{};
  std::optional<JState> at_probe;
};

ScaledResult integrate_scaled(const CurvatureProfile& p, Real t0, Real t1, const JState& y0,
                              double tol, std::optional<Real> probe = std::nullopt,
                              bool rescale = true) {
  ScaledResult out;
  Real scale_since_probe = 1;
  bool probe_done = false;
  if (probe && *probe == t0) {
    out.at_probe = y0;
    probe_done = true;
  }
  auto rhs = jacobi_rhs(p);
  JState last = y0;
  ode::integrate<Real, 2>(rhs, t0, t1, y0, tolerances(tol), [&](const JNode& prev, JNode& next) {
    if (probe && !probe_done) {
      const bool inside = (next.t - *probe) * (prev.t - *probe) <= 0;
      if (inside) {
        JState y;
        ode::hermite(prev, next, *probe, y);
        out.at_probe = y;
        probe_done = true;
      }
    }
    const Real mag = std::max(std::abs(next.y[0]), std::abs(next.y[1]));
    if (rescale && mag > kRescaleAbove) {
      const Real s = 1 / mag;
      for (int i = 0; i < 2; ++i) {
        next.y[i] *= s;
        next.dydt[i] *= s;
      }
      if (probe_done) scale_since_probe *= s;
    }
    last = next.y;
    return true;
  });
  out.end = last;
  if (out.at_probe)
    for (auto& v : *out.at_probe) v *= scale_since_probe;
  return out;
}

Real dir_of(Real v) { return v >= 0 ? Real(1) : Real(-1); }

// integral over [a, b] of 1 / J(u)^2 along the dense trace, one adaptive
// Gauss-Kronrod pass per integrator step.
Real inverse_square_integral(const PerpJacobiTrace::Dense& trace, Real a, Real b) {
  using GK = boost::math::quadrature::gauss_kronrod<Real, 15>;
  const Real sign = b >= a ? Real(1) : Real(-1);
  const Real lo = std::min(a, b), hi = std::max(a, b);
  const auto& nodes = trace.nodes();
  Real total = 0;
  for (std::size_t j = 1; j < nodes.size(); ++j) {
    const JNode* n0 = &nodes[j - 1];
    const JNode* n1 = &nodes[j];
    Real x0 = std::max(std::min(n0->t, n1->t), lo);
    Real x1 = std::min(std::max(n0->t, n1->t), hi);
    if (x1 <= x0) continue;
    auto f = [&](Real u) {
      JState y;
      ode::hermite(*n0, *n1, u, y);
      return 1 / (y[0] * y[0]);
    };
    Real err = 0;
    total += GK::integrate(f, x0, x1, 12, Real(1e-13), &err);
  }
  return sign * total;
}

}  // namespace

std::optional<double> first_sign_change(const PerpJacobiTrace& perp, double scan_step,
                                        double bisect_tol) {
  const auto& trace = perp.dense();
  const auto& nodes = trace.nodes();
  if (nodes.size() < 2) return std::nullopt;
  const Real t0 = nodes.front().t;
  const Real dir = dir_of(nodes.back().t - t0);
  Real ref = 0;
  std::optional<Real> good;
  std::size_t seg = 1;  // current node interval [nodes[seg - 1], nodes[seg]]
  auto value_at = [&](Real t) {
    JState y;
    ode::hermite(nodes[seg - 1], nodes[seg], t, y);
    return y[0];
  };
  auto check = [&](Real t) -> std::optional<double> {
    const Real v = value_at(t);
    if (ref == 0) ref = v > 0 ? Real(1) : Real(-1);
    if (ref * v > 0) {
      good = t;
      return std::nullopt;
    }
    Real a = good ? *good : t0;
    Real b = t;
    while (std::abs(b - a) > bisect_tol) {
      const Real mid = (a + b) / 2;
      if (ref * trace(mid)[0] > 0)
        a = mid;
      else
        b = mid;
    }
    return static_cast<double>((a + b) / 2);
  };
  long long k = 1;
  for (; seg < nodes.size(); ++seg) {
    const Real tj = nodes[seg].t;
    for (;; ++k) {
      const Real g = t0 + dir * Real(k) * Real(scan_step);
      if (dir * (g - tj) >= 0) break;
      if (auto z = check(g)) return z;
    }
    if (auto z = check(tj)) return z;
  }
  return std::nullopt;
}

PerpJacobiState PerpJacobiTrace::operator()(double t) const {
  const auto y = dense_(static_cast<Real>(t));
  return {static_cast<double>(y[0]), static_cast<double>(y[1])};
}

void PerpJacobiTrace::write_csv(std::ostream& os) const {
  os << "t,J,dJ\n";
  os.precision(17);
  for (const auto& n : dense_.nodes())
    os << static_cast<double>(n.t) << ',' << static_cast<double>(n.y[0]) << ','
       << static_cast<double>(n.y[1]) << '\n';
}

PerpJacobiTrace integrate_perp(const CurvatureProfile& p, const PerpJacobiState& s0, double t0,
                               double t1, double tol) {
  if (!std::isfinite(t0) || !std::isfinite(t1)) throw DomainError("time span must be finite");
  const JState y0{s0.value, s0.deriv};
  return PerpJacobiTrace(ode::integrate_dense<Real, 2>(jacobi_rhs(p), Real(t0), Real(t1), y0,
                                                       tolerances(tol)));
}

PerpJacobiState solve_Jz(const CurvatureProfile& p, double t, double tol) {
  const auto r = integrate_scaled(p, 0, t, JState{0, 1}, tol, std::nullopt, false);
  return {static_cast<double>(r.end[0]), static_cast<double>(r.end[1])};
}

std::optional<double> first_zero_Jz(const CurvatureProfile& p, double horizon, double scan_step,
                                    double bisect_tol, double tol) {
  if (horizon == 0.0) throw DomainError("horizon must be non-zero");
  return first_sign_change(integrate_perp(p, {0.0, 1.0}, 0.0, horizon, tol), scan_step,
                           bisect_tol);
}

JrSlope solve_Jr_slope(const CurvatureProfile& p, double r, double tol, double consistency_tol) {
  if (r == 0.0) throw DomainError("r must be non-zero");
  const Real rr = r;
  const Real dir = dir_of(rr);

  // The J^z field on [0, r]: conjugate-point scan and the quadrature route.
  Real reached = rr;
  PerpJacobiTrace::Dense jz;
  {
    const JState y0{0, 1};
    auto rhs = jacobi_rhs(p);
    JNode first{0, y0, {}};
    rhs(first.t, first.y, first.dydt);
    jz.push(first);
    reached = ode::integrate<Real, 2>(rhs, Real(0), rr, y0, tolerances(tol),
                                      [&](const JNode&, JNode& next) {
                                        jz.push(next);
                                        // The rest of the integral is negligible.
                                        return std::abs(next.y[0]) <= Real(1e140);
                                      });
  }
  const PerpJacobiTrace jz_trace(jz);
  if (auto z = first_sign_change(jz_trace, 0.01, 1e-12)) {
    std::ostringstream msg;
    msg << "conjugate point at t=" << *z << " inside (0, r] for r=" << r;
    throw ConjugatePointError(msg.str(), *z);
  }
  const Real t1 = dir * std::min(Real(0.1), std::abs(rr) / 10);
  const Real integral = inverse_square_integral(jz, t1, reached);
  const JState z1 = jz(t1);
  const JState at_t1{z1[0] * integral, z1[1] * integral - 1 / z1[0]};
  const auto back = integrate_scaled(p, t1, 0, at_t1, tol);
  const Real formula = back.end[1] / back.end[0];

  // Shooting from the far boundary.
  const auto shot = integrate_scaled(p, rr, 0, JState{0, -dir}, tol);
  if (!(shot.end[0] > 0)) throw ConjugatePointError("J^r vanishes before reaching 0", r);
  const Real shooting = shot.end[1] / shot.end[0];

  JrSlope out;
  out.shooting = static_cast<double>(shooting);
  out.formula = static_cast<double>(formula);
  out.slope = out.shooting;
  out.cross_check = static_cast<double>(std::abs(shooting - formula));
  if (!(out.cross_check <= consistency_tol)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "J^r slope routes disagree at r=" << r << ": shooting " << out.shooting << ", formula "
        << out.formula;
    throw NumericalInconsistency(msg.str());
  }
  return out;
}

PerpJacobiState solve_Jr(const CurvatureProfile& p, double r, double t, double tol) {
  const JrSlope s = solve_Jr_slope(p, r, tol);
  const bool inside = (r > 0 && t >= 0 && t <= r) || (r < 0 && t <= 0 && t >= r);
  if (!inside) {
    const auto y = integrate_scaled(p, 0, t, JState{1, Real(s.slope)}, tol);
    return {static_cast<double>(y.end[0]), static_cast<double>(y.end[1])};
  }
  if (t == r) {
    const auto far = integrate_scaled(p, r, 0, JState{0, -dir_of(r)}, tol);
    return {0.0, static_cast<double>(-dir_of(r) / far.end[0])};
  }
  const auto far = integrate_scaled(p, r, 0, JState{0, -dir_of(r)}, tol, Real(t));
  const Real norm = far.end[0];
  return {static_cast<double>((*far.at_probe)[0] / norm),
          static_cast<double>((*far.at_probe)[1] / norm)};
}

double wronskian(const PerpJacobiState& a, const PerpJacobiState& b) {
  return a.deriv * b.value - b.deriv * a.value;
}

std::function<double(double)> tangential_component(std::function<double(double)> b_along_orbit,
                                                   const PerpJacobiTrace& perp, double jt0) {
  auto trace = std::make_shared<const PerpJacobiTrace>(perp);
  return [b = std::move(b_along_orbit), trace, jt0](double t) {
    if (!trace->covers(0.0) || !trace->covers(t))
      throw DomainError("tangential component queried outside the perpendicular trace");
    auto f = [&](double s) { return b(s) * (*trace)(s).value; };
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    const double err_tol = 1e-12;
    double err = 0.0;
    if (t == 0.0) return jt0;
    const double lo = std::min(0.0, t), hi = std::max(0.0, t);
    const double v = GK::integrate(f, lo, hi, 15, err_tol, &err);
    return jt0 + (t >= 0 ? v : -v);
  };
}

CurvatureProfile flip_profile(const CurvatureProfile& p) { return p.flipped(); }

double sasaki_norm(const QuotientVector& xi) { return std::hypot(xi.jperp0, xi.djperp0); }

}  // namespace magflow
