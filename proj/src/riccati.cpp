#include "magflow/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "magflow/errors.hpp"

namespace magflow {

namespace {

using Real = long double;
using UState = ode::State<Real, 1>;
using UNode = ode::Node<Real, 1>;

class Sampler {
 public:
  Sampler(RiccatiTrace& out, double t0, double dir, double spacing)
      : out_(out), t0_(t0), dir_(dir), spacing_(spacing) {}

  // Records samples in (prev_t, t] given an evaluator of u.
  template <class Eval>
  void advance(double t, Eval&& eval) {
    if (spacing_ <= 0.0) {
      out_.t_samples.push_back(t);
      out_.u_samples.push_back(eval(t));
      return;
    }
    for (;;) {
      const double g = t0_ + dir_ * static_cast<double>(next_) * spacing_;
      if (dir_ * (g - t) > 0) break;
      out_.t_samples.push_back(g);
      out_.u_samples.push_back(eval(g));
      ++next_;
    }
  }

  void finish(double t, double u) {
    if (out_.t_samples.empty() || out_.t_samples.back() != t) {
      out_.t_samples.push_back(t);
      out_.u_samples.push_back(u);
    }
  }

 private:
  RiccatiTrace& out_;
  double t0_;
  double dir_;
  double spacing_;
  long long next_ = 1;
};

}  // namespace

void RiccatiTrace::write_csv(std::ostream& os) const {
  os << "t,u\n";
  os.precision(17);
  for (std::size_t i = 0; i < t_samples.size(); ++i) os << t_samples[i] << ',' << u_samples[i] << '\n';
}

RiccatiTrace integrate_riccati(const CurvatureProfile& p, double u0, double t0, double t1,
                               const RiccatiOptions& opts) {
  if (!std::isfinite(t0) || !std::isfinite(t1)) throw DomainError("time span must be finite");
  if (!std::isfinite(u0)) throw DomainError("initial value must be finite");
  RiccatiTrace out;
  out.k_used = p.k_bound();
  out.t_samples.push_back(t0);
  out.u_samples.push_back(u0);
  if (t0 == t1) return out;

  const double dir = t1 > t0 ? 1.0 : -1.0;
  const Real threshold = 10 * std::max(p.k_bound(), 1.0);
  ode::Tolerances tol;
  tol.rtol = opts.tol;
  tol.atol = opts.tol;
  Sampler sampler(out, t0, dir, opts.sample_spacing);

  auto rhs = [&p](Real t, const UState& u, UState& d) {
    d[0] = -u[0] * u[0] - static_cast<Real>(p(static_cast<double>(t)));
  };
  bool escaped = false;
  UNode last{Real(t0), UState{Real(u0)}, {}};
  ode::integrate<Real, 1>(rhs, Real(t0), Real(t1), UState{Real(u0)}, tol,
                          [&](const UNode& prev, UNode& next) {
                            sampler.advance(static_cast<double>(next.t), [&](double t) {
                              UState y;
                              ode::hermite(prev, next, Real(t), y);
                              return static_cast<double>(y[0]);
                            });
                            last = next;
                            if (dir * next.y[0] < -threshold) {
                              escaped = true;
                              return false;
                            }
                            return true;
                          });
  if (!escaped) {
    sampler.finish(t1, static_cast<double>(last.y[0]));
    return out;
  }

  // Continue through the linear equation J'' + K J = 0 with J = 1, J' = u.
  const double ts = static_cast<double>(last.t);
  const auto jt = integrate_perp(p, {1.0, static_cast<double>(last.y[0])}, ts, t1, opts.tol);
  const auto zero = first_sign_change(jt, 0.01, opts.blowup_tol);
  const double t_end = zero ? *zero : t1;
  auto u_of = [&](double t) {
    const auto s = jt(t);
    return s.deriv / s.value;
  };
  for (const auto& n : jt.dense().nodes()) {
    const double t = static_cast<double>(n.t);
    if (t == ts) continue;
    if (dir * (t - t_end) >= 0) break;
    sampler.advance(t, u_of);
  }
  if (zero) {
    out.blowup_time = *zero;
  } else {
    sampler.advance(t1, u_of);
    sampler.finish(t1, u_of(t1));
  }
  return out;
}

Envelope comparison_envelope(double k, double t) {
  if (!(k > 0.0)) throw DomainError("comparison envelope needs k > 0");
  if (!(t > 0.0)) throw DomainError("comparison envelope is defined for t > 0 only");
  return {-k, k / std::tanh(k * t)};
}

}  // namespace magflow
