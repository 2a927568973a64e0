#include "magflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "magflow/errors.hpp"

namespace magflow {

namespace {

using OrbitState = ode::State<double, 3>;

double wrap(double v, double period) {
  const double k = std::floor(v / period);
  double w = v - k * period;
  if (w >= period) w -= period;
  if (w < 0.0) w = 0.0;
  return w;
}

std::vector<double> sample_grid(double horizon, double spacing) {
  const auto n = static_cast<std::size_t>(std::ceil(horizon / spacing - 1e-9));
  std::vector<double> grid(n + 1);
  for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) * spacing;
  return grid;
}

OrbitTrace integrate_torus(const SurfaceModel& m, const ConformalTorus& tor, const UnitTangent& v0,
                           double horizon, double tol, double spacing) {
  const double lx = tor.period_x, ly = tor.period_y;
  auto rhs = [&](double, const OrbitState& s, OrbitState& d) {
    const double phi = tor.phi.value(s[0], s[1], lx, ly);
    const Gradient g = tor.phi.gradient(s[0], s[1], lx, ly);
    const double b = tor.magnetic.value(s[0], s[1], lx, ly);
    const double e = std::exp(-phi);
    const double c = std::cos(s[2]), sn = std::sin(s[2]);
    d[0] = e * c;
    d[1] = e * sn;
    d[2] = b + e * (g.dy * c - g.dx * sn);
  };

  OrbitTrace trace;
  trace.step_controls.rtol = tol;
  trace.step_controls.atol = tol;
  trace.t_samples = sample_grid(horizon, spacing);
  trace.states.reserve(trace.t_samples.size());
  trace.kappa_samples.reserve(trace.t_samples.size());

  auto record = [&](const OrbitState& s) {
    UnitTangent u{wrap(s[0], lx), wrap(s[1], ly), s[2]};
    trace.states.push_back(u);
    trace.kappa_samples.push_back(magnetic_curvature(m, u));
  };

  const OrbitState y0{v0.x, v0.y, v0.theta};
  record(y0);
  std::size_t next_sample = 1;
  ode::integrate<double, 3>(
      rhs, 0.0, trace.t_samples.back(), y0, trace.step_controls,
      [&](const ode::Node<double, 3>& prev, ode::Node<double, 3>& cur) {
        while (next_sample < trace.t_samples.size() && trace.t_samples[next_sample] <= cur.t) {
          OrbitState s;
          ode::hermite(prev, cur, trace.t_samples[next_sample], s);
          record(s);
          ++next_sample;
        }
        return true;
      });
  return trace;
}

OrbitTrace constant_trace(const ConstantCurvature& c, const UnitTangent& v0, double horizon,
                          double tol, double spacing) {
  OrbitTrace trace;
  trace.step_controls.rtol = tol;
  trace.step_controls.atol = tol;
  trace.t_samples = sample_grid(horizon, spacing);
  trace.states.assign(trace.t_samples.size(), v0);
  trace.kappa_samples.assign(trace.t_samples.size(), c.curvature + c.magnetic * c.magnetic);
  return trace;
}

}  // namespace

void OrbitTrace::write_csv(std::ostream& os) const {
  os << "t,x,y,theta,kappa\n";
  os.precision(17);
  for (std::size_t i = 0; i < t_samples.size(); ++i)
    os << t_samples[i] << ',' << states[i].x << ',' << states[i].y << ',' << states[i].theta << ','
       << kappa_samples[i] << '\n';
}

double unit_speed_defect(const SurfaceModel& m, const UnitTangent& v) {
  const Point p{v.x, v.y};
  const Point w = velocity_components(m, v);
  return std::abs(metric_inner(m, p, w, w) - 1.0);
}

OrbitTrace integrate_orbit(const SurfaceModel& m, const UnitTangent& v0, double horizon,
                           double tol, double spacing) {
  if (!(horizon > 0.0)) throw DomainError("orbit horizon must be positive");
  if (!(spacing > 0.0)) throw DomainError("sample spacing must be positive");
  if (const auto* c = m.constant()) return constant_trace(*c, v0, horizon, tol, spacing);
  if (const auto* t = m.torus()) return integrate_torus(m, *t, v0, horizon, tol, spacing);
  throw UnsupportedQuery("abstract profiles have no orbit to integrate");
}

OrbitTrace integrate_orbit_two_sided(const SurfaceModel& m, const UnitTangent& v0, double horizon,
                                     double tol, double spacing) {
  const OrbitTrace fwd = integrate_orbit(m, v0, horizon, tol, spacing);
  if (m.constant()) {
    OrbitTrace out = fwd;
    const std::size_t n = fwd.size();
    out.t_samples.resize(2 * n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      out.t_samples[i] = -fwd.t_samples[n - 1 - i];
      out.t_samples[n - 1 + i] = fwd.t_samples[i];
    }
    out.states.assign(out.t_samples.size(), v0);
    out.kappa_samples.assign(out.t_samples.size(), fwd.kappa_samples.front());
    return out;
  }
  const SurfaceModel reversed = m.with_reversed_field();
  const OrbitTrace bwd =
      integrate_orbit(reversed, UnitTangent{v0.x, v0.y, v0.theta + kPi}, horizon, tol, spacing);

  OrbitTrace out;
  out.step_controls = fwd.step_controls;
  const std::size_t n = fwd.size();
  out.t_samples.reserve(2 * n - 1);
  out.states.reserve(2 * n - 1);
  out.kappa_samples.reserve(2 * n - 1);
  for (std::size_t i = n - 1; i >= 1; --i) {
    const UnitTangent& e = bwd.states[i];
    const UnitTangent u{e.x, e.y, e.theta - kPi};
    out.t_samples.push_back(-bwd.t_samples[i]);
    out.states.push_back(u);
    out.kappa_samples.push_back(magnetic_curvature(m, u));
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.t_samples.push_back(fwd.t_samples[i]);
    out.states.push_back(fwd.states[i]);
    out.kappa_samples.push_back(fwd.kappa_samples[i]);
  }
  return out;
}

CurvatureProfile CurvatureProfile::constant(double kappa, std::string provenance) {
  CurvatureProfile p;
  p.base_ = std::make_shared<const std::function<double(double)>>([kappa](double) { return kappa; });
  p.constant_ = kappa;
  p.k_bound_ = std::sqrt(std::max(0.0, -kappa)) + 1e-6;
  p.provenance_ = std::move(provenance);
  return p;
}

CurvatureProfile CurvatureProfile::from_function(std::function<double(double)> kappa,
                                                 double k_bound, std::string provenance,
                                                 double t_min, double t_max) {
  if (!kappa) throw DomainError("profile evaluator is empty");
  if (!(t_min < t_max)) throw DomainError("profile domain is empty");
  CurvatureProfile p;
  p.base_ = std::make_shared<const std::function<double(double)>>(std::move(kappa));
  p.k_bound_ = k_bound;
  p.t_min_ = t_min;
  p.t_max_ = t_max;
  p.provenance_ = std::move(provenance);
  return p;
}

CurvatureProfile CurvatureProfile::from_samples(double t0, double h, std::vector<double> samples,
                                                std::string provenance) {
  if (samples.size() < 4)
    throw InsufficientData("a curvature profile needs at least 4 samples, got " +
                           std::to_string(samples.size()));
  if (!(h > 0.0)) throw DomainError("sample spacing must be positive");
  const double kb = k_bound_from_samples(samples);
  const double t1 = t0 + h * static_cast<double>(samples.size() - 1);
  const bool flat = std::all_of(samples.begin(), samples.end(),
                                [&](double v) { return v == samples.front(); });
  if (flat) {
    CurvatureProfile p = constant(samples.front(), std::move(provenance));
    p.t_min_ = t0;
    p.t_max_ = t1;
    return p;
  }
  auto spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
      samples.begin(), samples.end(), t0, h);
  return from_function([spline](double t) { return (*spline)(t); }, kb, std::move(provenance), t0,
                       t1);
}

double CurvatureProfile::operator()(double t) const {
  if (constant_ && std::isinf(t_min_) && std::isinf(t_max_)) return *constant_;
  if (!contains(t)) {
    const double slack = 1e-12 * std::max(1.0, std::abs(t));
    if (t < t_min_ - slack || t > t_max_ + slack) {
      std::ostringstream msg;
      msg << "profile '" << provenance_ << "' evaluated at t=" << t << " outside [" << t_min_
          << ", " << t_max_ << "]";
      throw DomainError(msg.str());
    }
    t = std::clamp(t, t_min_, t_max_);
  }
  if (constant_) return *constant_;
  return (*base_)(sign_ * t + offset_);
}

CurvatureProfile CurvatureProfile::flipped() const {
  CurvatureProfile p = *this;
  p.sign_ = -sign_;
  p.t_min_ = -t_max_;
  p.t_max_ = -t_min_;
  p.provenance_ = provenance_ + " (flipped)";
  return p;
}

CurvatureProfile CurvatureProfile::shifted(double offset) const {
  CurvatureProfile p = *this;
  // K_new(s) = K(s + offset) = base(sign s + sign offset + offset_)
  p.offset_ = offset_ + sign_ * offset;
  p.t_min_ = t_min_ - offset;
  p.t_max_ = t_max_ - offset;
  std::ostringstream name;
  name << provenance_ << " (shifted " << offset << ")";
  p.provenance_ = name.str();
  return p;
}

CurvatureProfile CurvatureProfile::with_k_bound(double k) const {
  CurvatureProfile p = *this;
  p.k_bound_ = k;
  return p;
}

double CurvatureProfile::sampled_min(double a, double b, double step) const {
  a = std::max(a, t_min_);
  b = std::min(b, t_max_);
  if (constant_) return *constant_;
  double lo = (*this)(a);
  for (double t = a; t <= b; t += step) lo = std::min(lo, (*this)(t));
  return std::min(lo, (*this)(b));
}

double CurvatureProfile::sampled_max(double a, double b, double step) const {
  a = std::max(a, t_min_);
  b = std::min(b, t_max_);
  if (constant_) return *constant_;
  double hi = (*this)(a);
  for (double t = a; t <= b; t += step) hi = std::max(hi, (*this)(t));
  return std::max(hi, (*this)(b));
}

double k_bound_from_samples(const std::vector<double>& kappa, double margin) {
  if (kappa.empty()) throw InsufficientData("no curvature samples");
  const double lo = *std::min_element(kappa.begin(), kappa.end());
  return std::sqrt(std::max(0.0, -lo)) + margin;
}

CurvatureProfile curvature_profile(const SurfaceModel& m, const OrbitTrace& orbit,
                                   std::string provenance) {
  if (orbit.size() < 4)
    throw InsufficientData("orbit has " + std::to_string(orbit.size()) +
                           " samples; a curvature profile needs at least 4");
  if (const auto* c = m.constant())
    return CurvatureProfile::constant(c->curvature + c->magnetic * c->magnetic,
                                      std::move(provenance));
  const double t0 = orbit.t_samples.front();
  const double h = (orbit.t_samples.back() - t0) / static_cast<double>(orbit.size() - 1);
  return CurvatureProfile::from_samples(t0, h, orbit.kappa_samples, std::move(provenance));
}

CurvatureProfile curvature_profile(const SurfaceModel& m, double validation_horizon,
                                   double validation_step) {
  if (const auto* c = m.constant())
    return CurvatureProfile::constant(c->curvature + c->magnetic * c->magnetic, "constant model");
  const auto* a = m.abstract();
  if (!a) throw UnsupportedQuery("torus models need an orbit to define a curvature profile");
  CurvatureProfile p = CurvatureProfile::from_function(a->kappa, a->k_bound, a->label);
  const double lo = p.sampled_min(-validation_horizon, validation_horizon, validation_step);
  if (a->k_bound * a->k_bound + lo <= -1e-12) {
    std::ostringstream msg;
    msg << "declared k_bound " << a->k_bound << " violates K > -k^2: sampled minimum " << lo;
    throw DomainError(msg.str());
  }
  return p;
}

}  // namespace magflow
