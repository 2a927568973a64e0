#pragma once

// Numerical Anosov certification of a magnetic system over a sampled orbit
// ensemble: conjugate points, transversality of the Green lines, bounded
// Jacobi witnesses, contraction rates and the integral inequality.

#include <optional>
#include <string>
#include <vector>

#include "magflow/flow.hpp"
#include "magflow/geometry.hpp"
#include "magflow/green.hpp"

namespace magflow {

// First zero of J^z in (0, horizon]; horizon < 0 scans [horizon, 0).
std::optional<double> first_conjugate_time(const CurvatureProfile& p, double horizon,
                                           double scan_step = 0.01, double tol = 1e-9);

struct GapResult {
  double gap = 0.0;
  bool converged = false;
  GreenEstimate estimate;
};

GapResult transversality_gap(const CurvatureProfile& p, const GreenOptions& opts = {});

struct Witness {
  std::vector<double> t;
  std::vector<double> j;
  double sup_norm = 0.0;
  bool bounded = false;  // sup_norm <= bound over the whole window
};

// When gap < gap_tol, integrates J from (1, u_plus0) over [-window, window]
// (clipped to the profile domain) and returns it as a bounded-field candidate.
std::optional<Witness> bounded_jacobi_witness(const CurvatureProfile& p, double u_plus0, double gap,
                                              double gap_tol, double window = 50.0,
                                              double bound = 10.0, double spacing = 0.01);

struct ContractionFit {
  double c = 0.0;
  double d = 0.0;
  double fit_residual = 0.0;
  bool failed = true;
  std::string failure;
  std::vector<double> t;         // sample times on [0, window]
  std::vector<double> log_norm;  // log of the Sasaki norm of the stable field with J(0) = 1
};

// Fits log ||(J, J')|| = log d' - c t on [1, window] for the stable field.
ContractionFit contraction_fit(const CurvatureProfile& p, double window = 20.0,
                               const GreenOptions& opts = {}, double min_rate = 1e-3);

struct NegativityResult {
  bool applicable = false;
  bool passes = false;
  double sampled_max = 0.0;
};

// Applicable when every sampled K <= eps; passes when in addition every
// profile reaches K < -eps within the horizon.
NegativityResult negativity_criterion(const std::vector<CurvatureProfile>& profiles, double eps,
                                      double horizon, double step = 0.01);

// min over 1 <= s <= t <= window of |J^z(t)| / |J^z(s)|.
double growth_constant(const CurvatureProfile& p, double window = 20.0, double step = 0.01);

enum class Verdict { NumericallyAnosov, NotAnosov, Inconclusive };
std::string to_string(Verdict v);

struct AnalysisToggles {
  bool inequality = true;
  bool conjugate = true;
  bool gaps = true;
  bool contraction = true;
  bool negativity = true;
};

struct ClassifyOptions {
  int ensemble_count = 64;
  unsigned seed = 0;
  double horizon = 120.0;
  double sample_spacing = 0.01;
  double integration_tol = 1e-10;
  double green_tol = 1e-9;
  double gap_margin = 1e-4;
  double negativity_eps = 1e-8;
  double witness_window = 50.0;
  double witness_bound = 10.0;
  double contraction_window = 20.0;
  AnalysisToggles analyses;
  int workers = 1;
  // Keep every n-th orbit sample for export (0 keeps none).
  int orbit_export_stride = 0;
};

struct OrbitResult {
  int id = 0;
  std::string provenance;
  UnitTangent initial;
  double k_bound = 0.0;
  double kappa_min = 0.0;
  double kappa_max = 0.0;
  std::optional<double> conjugate_forward;
  std::optional<double> conjugate_backward;
  std::optional<GapResult> gap;
  std::optional<Witness> witness;
  std::optional<ContractionFit> contraction;
  std::optional<double> growth;
  bool slope_bound_ok = true;
  Verdict verdict = Verdict::Inconclusive;
  std::string reason;
  std::string error;
  std::optional<OrbitTrace> trace;  // decimated, only when exported
};

struct AnosovReport {
  ModelKind model_kind = ModelKind::ConstantCurvature;
  std::optional<int> euler_characteristic;
  std::optional<InequalityResult> inequality;
  std::string inequality_note;
  std::vector<OrbitResult> orbits;
  std::optional<NegativityResult> negativity;
  Verdict verdict = Verdict::Inconclusive;
  std::string reason;
  std::optional<double> min_gap;
  std::optional<double> min_contraction_rate;
  std::vector<std::string> notes;
};

// Analyzes one curvature profile (orbit-level verdict, no global conditions).
OrbitResult analyze_profile(const CurvatureProfile& p, const ClassifyOptions& opts, int id = 0);

// Low-discrepancy initial conditions (Halton bases 2, 3, 5 over x, y, theta).
std::vector<UnitTangent> ensemble_initial_conditions(const ConformalTorus& t, int count,
                                                     unsigned seed);

AnosovReport classify(const SurfaceModel& m, const ClassifyOptions& opts = {});

}  // namespace magflow
