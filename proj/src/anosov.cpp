#include "magflow/anosov.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "magflow/errors.hpp"
#include "magflow/jacobi.hpp"

namespace magflow {

namespace {

double radical_inverse(unsigned long long i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// Horizon clipped to the profile domain.
double clip_forward(const CurvatureProfile& p, double h) { return std::min(h, p.t_max()); }
double clip_backward(const CurvatureProfile& p, double h) { return std::max(-h, p.t_min()); }

}  // namespace

std::optional<double> first_conjugate_time(const CurvatureProfile& p, double horizon,
                                           double scan_step, double tol) {
  if (horizon == 0.0) throw DomainError("conjugate scan horizon must be non-zero");
  const double h = horizon > 0 ? clip_forward(p, horizon) : clip_backward(p, -horizon);
  if (h == 0.0) return std::nullopt;
  return first_zero_Jz(p, h, scan_step, std::min(tol, 1e-12));
}

GapResult transversality_gap(const CurvatureProfile& p, const GreenOptions& opts) {
  GapResult r;
  r.estimate = green_estimate(p, opts);
  r.gap = r.estimate.gap;
  r.converged = r.estimate.converged;
  return r;
}

std::optional<Witness> bounded_jacobi_witness(const CurvatureProfile& p, double u_plus0, double gap,
                                              double gap_tol, double window, double bound,
                                              double spacing) {
  if (!(gap < gap_tol)) return std::nullopt;
  const double lo = clip_backward(p, window), hi = clip_forward(p, window);
  const PerpJacobiState s0{1.0, u_plus0};
  Witness w;
  auto sample = [&](const PerpJacobiTrace& tr, double from, double to, bool include_start) {
    const double dir = to >= from ? 1.0 : -1.0;
    const auto n = static_cast<long long>(std::floor(std::abs(to - from) / spacing + 1e-9));
    for (long long i = include_start ? 0 : 1; i <= n; ++i) {
      const double t = from + dir * static_cast<double>(i) * spacing;
      w.t.push_back(t);
      w.j.push_back(tr(t).value);
    }
  };
  if (lo < 0.0) {
    const auto back = integrate_perp(p, s0, 0.0, lo);
    sample(back, 0.0, lo, true);
    std::reverse(w.t.begin(), w.t.end());
    std::reverse(w.j.begin(), w.j.end());
  }
  if (hi > 0.0) {
    const auto fwd = integrate_perp(p, s0, 0.0, hi);
    sample(fwd, 0.0, hi, w.t.empty());
  }
  for (double v : w.j) w.sup_norm = std::max(w.sup_norm, std::abs(v));
  w.bounded = w.sup_norm <= bound;
  return w;
}

ContractionFit contraction_fit(const CurvatureProfile& p, double window, const GreenOptions& opts,
                               double min_rate) {
  ContractionFit fit;
  if (!(window > 1.0)) throw DomainError("contraction window must exceed 1");
  const GreenSolution sol = green_riccati_solution(p, Side::Stable, 0.0, window, opts, 0.01);
  if (sol.trace.blowup_time) {
    fit.failure = "stable Riccati solution blows up at t=" + fmt(*sol.trace.blowup_time);
    return fit;
  }
  std::vector<double> t(sol.trace.t_samples.rbegin(), sol.trace.t_samples.rend());
  std::vector<double> u(sol.trace.u_samples.rbegin(), sol.trace.u_samples.rend());
  fit.t = t;
  fit.log_norm.resize(t.size());
  double integral = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0) integral += 0.5 * (u[i] + u[i - 1]) * (t[i] - t[i - 1]);
    fit.log_norm[i] = integral + 0.5 * std::log1p(u[i] * u[i]);
  }
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < 1.0) continue;
    n += 1;
    sx += t[i];
    sy += fit.log_norm[i];
    sxx += t[i] * t[i];
    sxy += t[i] * fit.log_norm[i];
  }
  if (n < 3) {
    fit.failure = "too few samples in the fit window";
    return fit;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  fit.c = -slope;
  double ss = 0.0, dmax = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    dmax = std::max(dmax, fit.log_norm[i] + fit.c * t[i]);
    if (t[i] < 1.0) continue;
    const double e = fit.log_norm[i] - (intercept + slope * t[i]);
    ss += e * e;
  }
  fit.d = std::exp(dmax);
  fit.fit_residual = std::sqrt(ss / n);
  if (!sol.anchor.converged) {
    fit.failure = "stable slope at the window end did not converge";
  } else if (!(fit.c > min_rate)) {
    fit.failure = "no contraction: fitted rate " + fmt(fit.c);
  } else {
    fit.failed = false;
  }
  return fit;
}

NegativityResult negativity_criterion(const std::vector<CurvatureProfile>& profiles, double eps,
                                      double horizon, double step) {
  NegativityResult r;
  if (profiles.empty()) return r;
  r.sampled_max = -std::numeric_limits<double>::infinity();
  bool every_negative = true;
  for (const auto& p : profiles) {
    r.sampled_max = std::max(r.sampled_max, p.sampled_max(-horizon, horizon, step));
    every_negative = every_negative && p.sampled_min(-horizon, horizon, step) < -eps;
  }
  r.applicable = r.sampled_max <= eps;
  r.passes = r.applicable && every_negative;
  return r;
}

double growth_constant(const CurvatureProfile& p, double window, double step) {
  const double hi = clip_forward(p, window);
  if (hi <= 1.0) throw InsufficientData("profile too short for the growth constant");
  const auto tr = integrate_perp(p, {0.0, 1.0}, 0.0, hi);
  double run_max = 0.0, a = std::numeric_limits<double>::infinity();
  for (double t = 1.0; t <= hi + 1e-12; t += step) {
    const double j = tr(std::min(t, hi)).value;
    if (!(j > 0.0)) return 0.0;
    run_max = std::max(run_max, j);
    a = std::min(a, j / run_max);
  }
  return a;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::NumericallyAnosov:
      return "NumericallyAnosov";
    case Verdict::NotAnosov:
      return "NotAnosov";
    case Verdict::Inconclusive:
      return "Inconclusive";
  }
  return "Inconclusive";
}

OrbitResult analyze_profile(const CurvatureProfile& p, const ClassifyOptions& opts, int id) {
  OrbitResult r;
  r.id = id;
  r.provenance = p.provenance();
  r.k_bound = p.k_bound();
  const double lo = clip_backward(p, opts.horizon), hi = clip_forward(p, opts.horizon);
  r.kappa_min = p.sampled_min(lo, hi, opts.sample_spacing);
  r.kappa_max = p.sampled_max(lo, hi, opts.sample_spacing);

  GreenOptions go;
  go.tol = opts.green_tol;
  try {
    if (opts.analyses.conjugate) {
      r.conjugate_forward = first_conjugate_time(p, opts.horizon);
      r.conjugate_backward = first_conjugate_time(p, -opts.horizon);
      if (r.conjugate_forward || r.conjugate_backward) {
        r.verdict = Verdict::NotAnosov;
        r.reason = "conjugate point at t=" +
                   fmt(r.conjugate_forward ? *r.conjugate_forward : *r.conjugate_backward, 10);
        return r;
      }
    }
    if (!opts.analyses.gaps) {
      r.reason = "gap analysis disabled";
      return r;
    }
    r.gap = transversality_gap(p, go);
    const GreenEstimate& g = r.gap->estimate;
    r.slope_bound_ok = std::abs(g.u_plus0) <= p.k_bound() + 1e-6 &&
                       std::abs(g.u_minus0) <= p.k_bound() + 1e-6;
    if (r.gap->gap < -1e-8) {
      r.reason = "negative transversality gap " + fmt(r.gap->gap);
      r.error = "Green slopes out of order";
      return r;
    }
    if (r.gap->gap < opts.gap_margin) {
      r.witness = bounded_jacobi_witness(p, g.u_plus0, r.gap->gap, opts.gap_margin,
                                         opts.witness_window, opts.witness_bound);
      if (r.witness && r.witness->bounded) {
        r.verdict = Verdict::NotAnosov;
        r.reason = "bounded Jacobi witness (sup " + fmt(r.witness->sup_norm) + ")";
      } else {
        r.reason = "gap below margin without a bounded witness";
      }
      return r;
    }
    if (!r.gap->converged) {
      r.reason = "Green slopes did not converge";
      return r;
    }
    if (opts.analyses.contraction) {
      r.contraction = contraction_fit(p, opts.contraction_window, go);
      if (r.contraction->failed) {
        r.reason = "contraction fit failed: " + r.contraction->failure;
        return r;
      }
    }
    if (hi > 1.0) r.growth = growth_constant(p, std::min(opts.contraction_window, hi));
    r.verdict = Verdict::NumericallyAnosov;
    r.reason = "gap " + fmt(r.gap->gap) + " > margin";
  } catch (const ConjugatePointError& e) {
    r.verdict = Verdict::NotAnosov;
    r.reason = "conjugate point at t=" + fmt(e.time(), 10);
  } catch (const Error& e) {
    r.verdict = Verdict::Inconclusive;
    r.reason = "numerical failure";
    r.error = e.what();
  }
  return r;
}

std::vector<UnitTangent> ensemble_initial_conditions(const ConformalTorus& t, int count,
                                                     unsigned seed) {
  std::vector<UnitTangent> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const unsigned long long k = static_cast<unsigned long long>(seed) + i + 1;
    out.push_back({t.period_x * radical_inverse(k, 2), t.period_y * radical_inverse(k, 3),
                   kTwoPi * radical_inverse(k, 5)});
  }
  return out;
}

AnosovReport classify(const SurfaceModel& m, const ClassifyOptions& opts) {
  if (opts.ensemble_count < 1) throw DomainError("ensemble count must be at least 1");
  AnosovReport rep;
  rep.model_kind = m.kind();
  rep.euler_characteristic = m.euler_characteristic();

  bool inequality_failed_to_run = false;
  if (opts.analyses.inequality) {
    if (m.abstract()) {
      rep.inequality_note = "skipped: abstract profile carries no magnetic intensity";
    } else {
      try {
        rep.inequality = integral_inequality_check(m);
      } catch (const Error& e) {
        rep.inequality_note = e.what();
        inequality_failed_to_run = true;
      }
    }
  } else {
    rep.inequality_note = "disabled";
  }

  // One profile per orbit.  Constant and abstract models have a single exact profile.
  std::vector<UnitTangent> starts;
  if (const auto* t = m.torus()) {
    starts = ensemble_initial_conditions(*t, opts.ensemble_count, opts.seed);
  } else {
    starts.push_back(UnitTangent{});
    rep.notes.push_back(m.constant()
                            ? "constant model: one exact constant profile represents every orbit"
                            : "abstract model: the declared profile is the only orbit");
  }
  const std::size_t n = starts.size();
  rep.orbits.resize(n);
  std::vector<std::optional<CurvatureProfile>> profiles(n);

  auto work = [&](std::size_t i) {
    OrbitResult& res = rep.orbits[i];
    try {
      if (m.torus()) {
        const OrbitTrace tr = integrate_orbit_two_sided(m, starts[i], opts.horizon,
                                                        opts.integration_tol, opts.sample_spacing);
        profiles[i] = curvature_profile(m, tr, "orbit " + std::to_string(i));
        res = analyze_profile(*profiles[i], opts, static_cast<int>(i));
        if (opts.orbit_export_stride > 0) {
          OrbitTrace dec;
          dec.step_controls = tr.step_controls;
          for (std::size_t k = 0; k < tr.size(); k += static_cast<std::size_t>(opts.orbit_export_stride)) {
            dec.t_samples.push_back(tr.t_samples[k]);
            dec.states.push_back(tr.states[k]);
            dec.kappa_samples.push_back(tr.kappa_samples[k]);
          }
          res.trace = std::move(dec);
        }
      } else {
        profiles[i] = curvature_profile(m, opts.horizon, opts.sample_spacing);
        res = analyze_profile(*profiles[i], opts, static_cast<int>(i));
      }
    } catch (const Error& e) {
      res.id = static_cast<int>(i);
      res.verdict = Verdict::Inconclusive;
      res.reason = "numerical failure";
      res.error = e.what();
    }
    res.initial = starts[i];
  };

  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    for (auto& th : pool) th.join();
  }

  if (opts.analyses.negativity) {
    std::vector<CurvatureProfile> ps;
    for (const auto& p : profiles)
      if (p) ps.push_back(*p);
    if (!ps.empty()) rep.negativity = negativity_criterion(ps, opts.negativity_eps, opts.horizon);
  }

  for (const auto& o : rep.orbits) {
    if (o.gap) rep.min_gap = rep.min_gap ? std::min(*rep.min_gap, o.gap->gap) : o.gap->gap;
    if (o.contraction && !o.contraction->failed)
      rep.min_contraction_rate = rep.min_contraction_rate
                                     ? std::min(*rep.min_contraction_rate, o.contraction->c)
                                     : o.contraction->c;
  }

  // Verdict.
  if (rep.euler_characteristic && *rep.euler_characteristic >= 0) {
    rep.verdict = Verdict::NotAnosov;
    rep.reason = "euler characteristic ≥ 0";
    return rep;
  }
  if (rep.inequality && !rep.inequality->passes) {
    rep.verdict = Verdict::NotAnosov;
    rep.reason = "integral inequality fails: " + fmt(rep.inequality->lhs, 10) +
                 " ≥ " + fmt(rep.inequality->rhs, 10);
    return rep;
  }
  for (const auto& o : rep.orbits) {
    if (o.verdict == Verdict::NotAnosov) {
      rep.verdict = Verdict::NotAnosov;
      rep.reason = "orbit " + std::to_string(o.id) + ": " + o.reason;
      return rep;
    }
  }
  for (const auto& o : rep.orbits) {
    if (o.verdict != Verdict::NumericallyAnosov) {
      rep.verdict = Verdict::Inconclusive;
      rep.reason = "orbit " + std::to_string(o.id) + ": " + o.reason;
      if (!o.error.empty()) rep.reason += " (" + o.error + ")";
      return rep;
    }
  }
  if (inequality_failed_to_run) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = "integral inequality could not be evaluated: " + rep.inequality_note;
    return rep;
  }
  if (opts.analyses.inequality && !rep.inequality && rep.euler_characteristic) {
    rep.notes.push_back("integral inequality unavailable for this model");
  }
  rep.verdict = Verdict::NumericallyAnosov;
  rep.reason = "all " + std::to_string(n) + " sampled orbits have gap > " + fmt(opts.gap_margin) +
               " and contract";
  return rep;
}

}  // namespace magflow
