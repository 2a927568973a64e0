#pragma once

// Riccati equation u' + u^2 + K(t) = 0 for logarithmic derivatives of
// perpendicular Jacobi fields.

#include <iosfwd>
#include <optional>
#include <vector>

#include "magflow/flow.hpp"
#include "magflow/jacobi.hpp"

namespace magflow {

struct RiccatiTrace {
  std::vector<double> t_samples;
  std::vector<double> u_samples;
  std::optional<double> blowup_time;
  double k_used = 0.0;

  // Last time at which u is defined (the blow-up time if any).
  double t_reached() const { return blowup_time ? *blowup_time : t_samples.back(); }
  void write_csv(std::ostream& os) const;
};

struct RiccatiOptions {
  double tol = kJacobiTol;
  // 0 records every integrator node; otherwise u is reported on this grid.
  double sample_spacing = 0.0;
  // Bracket width for the blow-up time.
  double blowup_tol = 1e-10;
};

// Integrates from t0 to t1 (either direction).  Once u leaves the blow-up
// threshold 10 max(k_bound, 1) in the direction of the singularity, the
// solution is continued as J'/J of the linear equation started from (1, u) and
// the first zero of J is the blow-up time.
RiccatiTrace integrate_riccati(const CurvatureProfile& p, double u0, double t0, double t1,
                               const RiccatiOptions& opts = {});

struct Envelope {
  double lower = 0.0;
  double upper = 0.0;
};

// -k <= u(t) <= k coth(k t) for solutions started at time 0.
Envelope comparison_envelope(double k, double t);

}  // namespace magflow
