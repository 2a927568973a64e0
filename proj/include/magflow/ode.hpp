#pragma once

// Adaptive Dormand-Prince 5(4) integration with cubic Hermite dense output.
//
// The integrator is templated on the scalar type so that the scalar Jacobi and
// Riccati equations can be run in extended precision while orbit integration
// stays in double.  Integration may proceed in either time direction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "magflow/errors.hpp"

namespace magflow::ode {

struct Tolerances {
  double rtol = 1e-10;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0 selects a step automatically
  double max_step = 0.0;      // 0 means unbounded
  std::size_t max_steps = 20'000'000;
};

template <class Scalar, std::size_t N>
using State = std::array<Scalar, N>;

// One accepted node of an integration: time, state and derivative.
template <class Scalar, std::size_t N>
struct Node {
  Scalar t{};
  State<Scalar, N> y{};
  State<Scalar, N> dydt{};
};

// Cubic Hermite interpolation between two nodes.  Returns state and derivative.
template <class Scalar, std::size_t N>
void hermite(const Node<Scalar, N>& a, const Node<Scalar, N>& b, Scalar t, State<Scalar, N>& y,
             State<Scalar, N>* dydt = nullptr) {
  const Scalar h = b.t - a.t;
  if (h == Scalar(0)) {
    y = a.y;
    if (dydt) *dydt = a.dydt;
    return;
  }
  const Scalar s = (t - a.t) / h;
  const Scalar s2 = s * s;
  const Scalar s3 = s2 * s;
  const Scalar h00 = 2 * s3 - 3 * s2 + 1;
  const Scalar h10 = s3 - 2 * s2 + s;
  const Scalar h01 = -2 * s3 + 3 * s2;
  const Scalar h11 = s3 - s2;
  for (std::size_t i = 0; i < N; ++i)
    y[i] = h00 * a.y[i] + h10 * h * a.dydt[i] + h01 * b.y[i] + h11 * h * b.dydt[i];
  if (dydt) {
    const Scalar d00 = (6 * s2 - 6 * s) / h;
    const Scalar d10 = 3 * s2 - 4 * s + 1;
    const Scalar d01 = (-6 * s2 + 6 * s) / h;
    const Scalar d11 = 3 * s2 - 2 * s;
    for (std::size_t i = 0; i < N; ++i)
      (*dydt)[i] = d00 * a.y[i] + d10 * a.dydt[i] + d01 * b.y[i] + d11 * b.dydt[i];
  }
}

// Sequence of accepted nodes with dense evaluation in between.  Nodes are kept
// in integration order, which may be decreasing in time.
template <class Scalar, std::size_t N>
class DenseTrace {
 public:
  using node_type = Node<Scalar, N>;
  using state_type = State<Scalar, N>;

  void push(const node_type& n) { nodes_.push_back(n); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<node_type>& nodes() const { return nodes_; }

  Scalar t_first() const { return nodes_.front().t; }
  Scalar t_last() const { return nodes_.back().t; }
  Scalar t_min() const { return std::min(t_first(), t_last()); }
  Scalar t_max() const { return std::max(t_first(), t_last()); }
  bool covers(Scalar t) const { return !empty() && t >= t_min() && t <= t_max(); }

  state_type operator()(Scalar t, state_type* dydt = nullptr) const {
    if (!covers(t))
      throw DomainError("dense trace queried at t=" + std::to_string(static_cast<double>(t)) +
                        " outside [" + std::to_string(static_cast<double>(t_min())) + ", " +
                        std::to_string(static_cast<double>(t_max())) + "]");
    if (nodes_.size() == 1) {
      if (dydt) *dydt = nodes_.front().dydt;
      return nodes_.front().y;
    }
    const bool forward = t_last() >= t_first();
    auto it = forward ? std::lower_bound(nodes_.begin(), nodes_.end(), t,
                                         [](const node_type& n, Scalar v) { return n.t < v; })
                      : std::lower_bound(nodes_.begin(), nodes_.end(), t,
                                         [](const node_type& n, Scalar v) { return n.t > v; });
    std::size_t j = static_cast<std::size_t>(it - nodes_.begin());
    if (j == 0) j = 1;
    if (j >= nodes_.size()) j = nodes_.size() - 1;
    state_type y;
    hermite(nodes_[j - 1], nodes_[j], t, y, dydt);
    return y;
  }

 private:
  std::vector<node_type> nodes_;
};

namespace detail {

template <class Scalar>
struct Dopri5Table {
  static constexpr Scalar r(long long p, long long q) { return Scalar(p) / Scalar(q); }
  static constexpr Scalar c2 = r(1, 5), c3 = r(3, 10), c4 = r(4, 5), c5 = r(8, 9);
  static constexpr Scalar a21 = r(1, 5);
  static constexpr Scalar a31 = r(3, 40), a32 = r(9, 40);
  static constexpr Scalar a41 = r(44, 45), a42 = r(-56, 15), a43 = r(32, 9);
  static constexpr Scalar a51 = r(19372, 6561), a52 = r(-25360, 2187), a53 = r(64448, 6561),
                          a54 = r(-212, 729);
  static constexpr Scalar a61 = r(9017, 3168), a62 = r(-355, 33), a63 = r(46732, 5247),
                          a64 = r(49, 176), a65 = r(-5103, 18656);
  static constexpr Scalar a71 = r(35, 384), a73 = r(500, 1113), a74 = r(125, 192),
                          a75 = r(-2187, 6784), a76 = r(11, 84);
  static constexpr Scalar e1 = r(71, 57600), e3 = r(-71, 16695), e4 = r(71, 1920),
                          e5 = r(-17253, 339200), e6 = r(22, 525), e7 = r(-1, 40);
};

template <class Scalar, std::size_t N>
Scalar error_norm(const State<Scalar, N>& err, const State<Scalar, N>& y0,
                  const State<Scalar, N>& y1, const Tolerances& tol) {
  using std::abs;
  using std::sqrt;
  Scalar acc = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const Scalar sc = Scalar(tol.atol) + Scalar(tol.rtol) * std::max(abs(y0[i]), abs(y1[i]));
    const Scalar q = err[i] / sc;
    acc += q * q;
  }
  return sqrt(acc / Scalar(N));
}

// Initial step heuristic (Hairer, Norsett & Wanner, Vol. I, II.4).
template <class Scalar, std::size_t N, class Rhs>
Scalar initial_step(Rhs& rhs, Scalar t0, const State<Scalar, N>& y0, const State<Scalar, N>& f0,
                    Scalar dir, const Tolerances& tol) {
  using std::abs;
  using std::pow;
  using std::sqrt;
  Scalar d0 = 0, d1 = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const Scalar sc = Scalar(tol.atol) + Scalar(tol.rtol) * abs(y0[i]);
    d0 += (y0[i] / sc) * (y0[i] / sc);
    d1 += (f0[i] / sc) * (f0[i] / sc);
  }
  d0 = sqrt(d0 / Scalar(N));
  d1 = sqrt(d1 / Scalar(N));
  Scalar h0 = (d0 < Scalar(1e-5) || d1 < Scalar(1e-5)) ? Scalar(1e-6) : Scalar(0.01) * d0 / d1;
  State<Scalar, N> y1, f1;
  for (std::size_t i = 0; i < N; ++i) y1[i] = y0[i] + dir * h0 * f0[i];
  rhs(t0 + dir * h0, y1, f1);
  Scalar d2 = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const Scalar sc = Scalar(tol.atol) + Scalar(tol.rtol) * abs(y0[i]);
    d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
  }
  d2 = sqrt(d2 / Scalar(N)) / h0;
  const Scalar dm = std::max(d1, d2);
  const Scalar h1 = dm <= Scalar(1e-15) ? std::max(Scalar(1e-6), h0 * Scalar(1e-3))
                                         : pow(Scalar(0.01) / dm, Scalar(0.2));
  return std::min(Scalar(100) * h0, h1);
}

}  // namespace detail

// Integrates dy/dt = rhs(t, y) from t0 towards t1.
//
// `rhs(t, y, dydt)` fills the derivative.  After each accepted step,
// `observe(prev, next)` is called; it may modify `next.y` (e.g. to wrap a
// periodic coordinate, in which case the derivative must stay valid) and
// returns false to stop early.  Returns the time actually reached.
template <class Scalar, std::size_t N, class Rhs, class Observer>
Scalar integrate(Rhs&& rhs, Scalar t0, Scalar t1, const State<Scalar, N>& y0,
                 const Tolerances& tol, Observer&& observe) {
  using std::abs;
  using std::pow;
  using T = detail::Dopri5Table<Scalar>;

  Node<Scalar, N> cur{t0, y0, {}};
  rhs(cur.t, cur.y, cur.dydt);
  if (t1 == t0) return t0;

  const Scalar dir = t1 > t0 ? Scalar(1) : Scalar(-1);
  const Scalar span = abs(t1 - t0);
  Scalar h = tol.initial_step > 0 ? Scalar(tol.initial_step)
                                  : detail::initial_step<Scalar, N>(rhs, t0, cur.y, cur.dydt, dir, tol);
  if (tol.max_step > 0) h = std::min(h, Scalar(tol.max_step));
  h = std::min(h, span);

  State<Scalar, N> k2, k3, k4, k5, k6, k7, ytmp, ynew, err;
  std::size_t steps = 0;
  bool last_rejected = false;

  while (dir * (t1 - cur.t) > 0) {
    if (++steps > tol.max_steps)
      throw IntegrationFailure("step budget exhausted", static_cast<double>(cur.t));
    const Scalar remaining = abs(t1 - cur.t);
    bool final_step = false;
    if (h >= remaining) {
      h = remaining;
      final_step = true;
    }
    const Scalar min_step =
        Scalar(16) * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), abs(cur.t));
    if (h < min_step)
      throw IntegrationFailure("step size underflow", static_cast<double>(cur.t));

    const Scalar hs = dir * h;
    const auto& y = cur.y;
    const auto& k1 = cur.dydt;
    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + hs * T::a21 * k1[i];
    rhs(cur.t + T::c2 * hs, ytmp, k2);
    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + hs * (T::a31 * k1[i] + T::a32 * k2[i]);
    rhs(cur.t + T::c3 * hs, ytmp, k3);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + hs * (T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]);
    rhs(cur.t + T::c4 * hs, ytmp, k4);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + hs * (T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] + T::a54 * k4[i]);
    rhs(cur.t + T::c5 * hs, ytmp, k5);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + hs * (T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] + T::a64 * k4[i] +
                             T::a65 * k5[i]);
    const Scalar tnew = final_step ? t1 : cur.t + hs;
    rhs(cur.t + hs, ytmp, k6);
    for (std::size_t i = 0; i < N; ++i)
      ynew[i] = y[i] + hs * (T::a71 * k1[i] + T::a73 * k3[i] + T::a74 * k4[i] + T::a75 * k5[i] +
                             T::a76 * k6[i]);
    rhs(tnew, ynew, k7);
    for (std::size_t i = 0; i < N; ++i)
      err[i] = hs * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] +
                     T::e6 * k6[i] + T::e7 * k7[i]);

    const Scalar en = detail::error_norm<Scalar, N>(err, y, ynew, tol);
    using std::isfinite;
    if (!isfinite(static_cast<double>(en))) {
      h *= Scalar(0.2);
      last_rejected = true;
      continue;
    }
    if (en <= Scalar(1)) {
      Node<Scalar, N> next{tnew, ynew, k7};
      const Node<Scalar, N> prev = cur;
      const bool keep_going = observe(prev, next);
      cur = next;
      if (!keep_going) return cur.t;
      Scalar fac = en == Scalar(0) ? Scalar(5) : Scalar(0.9) * pow(en, Scalar(-0.2));
      fac = std::clamp(fac, Scalar(0.2), last_rejected ? Scalar(1) : Scalar(5));
      h *= fac;
      if (tol.max_step > 0) h = std::min(h, Scalar(tol.max_step));
      last_rejected = false;
    } else {
      const Scalar fac = std::max(Scalar(0.2), Scalar(0.9) * pow(en, Scalar(-0.2)));
      h *= fac;
      last_rejected = true;
    }
  }
  return cur.t;
}

// Convenience wrapper: integrates and records every node into a dense trace.
template <class Scalar, std::size_t N, class Rhs>
DenseTrace<Scalar, N> integrate_dense(Rhs&& rhs, Scalar t0, Scalar t1, const State<Scalar, N>& y0,
                                      const Tolerances& tol) {
  DenseTrace<Scalar, N> trace;
  Node<Scalar, N> first{t0, y0, {}};
  rhs(first.t, first.y, first.dydt);
  trace.push(first);
  integrate<Scalar, N>(rhs, t0, t1, y0, tol, [&](const Node<Scalar, N>&, Node<Scalar, N>& next) {
    trace.push(next);
    return true;
  });
  return trace;
}

}  // namespace magflow::ode
