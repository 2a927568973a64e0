#include "magflow/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace magflow {

namespace {

using nlohmann::json;

// JSON has no infinity or NaN.
json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

template <class T>
json optional_number(const std::optional<T>& v) {
  return v ? number(static_cast<double>(*v)) : json(nullptr);
}

json slope_to_json(const SlopeEstimate& s) {
  json j;
  j["slope"] = number(s.slope);
  j["last_iterate"] = number(s.last_iterate);
  j["converged"] = s.converged;
  j["extrapolated"] = s.extrapolated;
  j["r_schedule"] = s.r_schedule;
  j["slopes"] = s.slopes;
  j["residuals"] = s.residuals;
  j["max_cross_check"] = number(s.max_cross_check);
  return j;
}

}  // namespace

json orbit_to_json(const OrbitResult& o) {
  json j;
  j["id"] = o.id;
  j["provenance"] = o.provenance;
  j["initial"] = {{"x", o.initial.x}, {"y", o.initial.y}, {"theta", o.initial.theta}};
  j["k_bound"] = number(o.k_bound);
  j["kappa_min"] = number(o.kappa_min);
  j["kappa_max"] = number(o.kappa_max);
  j["conjugate_forward"] = optional_number(o.conjugate_forward);
  j["conjugate_backward"] = optional_number(o.conjugate_backward);
  if (o.gap) {
    const GreenEstimate& g = o.gap->estimate;
    j["gap"] = {{"gap", number(o.gap->gap)},
                {"converged", o.gap->converged},
                {"u_plus0", number(g.u_plus0)},
                {"u_minus0", number(g.u_minus0)},
                {"stable_bound_constant", number(g.stable_bound_constant())},
                {"plus", slope_to_json(g.plus)},
                {"minus", slope_to_json(g.minus)}};
  } else {
    j["gap"] = nullptr;
  }
  if (o.witness)
    j["witness"] = {{"sup_norm", number(o.witness->sup_norm)},
                    {"bounded", o.witness->bounded},
                    {"window", {o.witness->t.front(), o.witness->t.back()}}};
  else
    j["witness"] = nullptr;
  if (o.contraction)
    j["contraction"] = {{"c", number(o.contraction->c)},
                        {"d", number(o.contraction->d)},
                        {"fit_residual", number(o.contraction->fit_residual)},
                        {"failed", o.contraction->failed},
                        {"failure", o.contraction->failure}};
  else
    j["contraction"] = nullptr;
  j["growth_constant"] = optional_number(o.growth);
  j["slope_bound_ok"] = o.slope_bound_ok;
  j["verdict"] = to_string(o.verdict);
  j["reason"] = o.reason;
  j["error"] = o.error;
  return j;
}

json report_to_json(const AnosovReport& r, const json& config,
                    const std::optional<std::string>& generated_at) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["tool"] = {{"name", "magflow"}, {"version", kToolVersion}};
  if (generated_at) j["generated_at"] = *generated_at;
  j["config"] = config;
  j["model"] = {{"kind", to_string(r.model_kind)},
                {"euler_characteristic", optional_number(r.euler_characteristic)}};
  j["verdict"] = to_string(r.verdict);
  j["reason"] = r.reason;
  if (r.inequality) {
    j["inequality"] = {{"lhs", number(r.inequality->lhs)},
                       {"rhs", number(r.inequality->rhs)},
                       {"passes", r.inequality->passes},
                       {"lambda_squared_threshold",
                        optional_number(r.inequality->lambda_squared_threshold)}};
  } else {
    j["inequality"] = nullptr;
  }
  j["inequality_note"] = r.inequality_note;
  if (r.negativity)
    j["negativity"] = {{"applicable", r.negativity->applicable},
                       {"passes", r.negativity->passes},
                       {"sampled_max", number(r.negativity->sampled_max)}};
  else
    j["negativity"] = nullptr;
  j["min_gap"] = optional_number(r.min_gap);
  j["min_contraction_rate"] = optional_number(r.min_contraction_rate);
  j["notes"] = r.notes;
  json orbits = json::array();
  for (const auto& o : r.orbits) orbits.push_back(orbit_to_json(o));
  j["orbits"] = std::move(orbits);
  return j;
}

void write_summary(std::ostream& os, const AnosovReport& r) {
  os << "verdict: " << to_string(r.verdict) << "\n";
  os << "reason:  " << r.reason << "\n";
  os << "model:   " << to_string(r.model_kind);
  if (r.euler_characteristic) os << " (chi = " << *r.euler_characteristic << ")";
  os << "\n";
  if (r.inequality)
    os << "integral inequality: lhs " << r.inequality->lhs << ", rhs " << r.inequality->rhs
       << (r.inequality->passes ? " (passes)" : " (fails)") << "\n";
  else if (!r.inequality_note.empty())
    os << "integral inequality: " << r.inequality_note << "\n";
  if (r.negativity)
    os << "negativity criterion: " << (r.negativity->applicable ? "applicable" : "not applicable")
       << (r.negativity->passes ? ", passes" : "") << "\n";
  if (r.min_gap) os << "min gap: " << *r.min_gap << "\n";
  if (r.min_contraction_rate) os << "min contraction rate: " << *r.min_contraction_rate << "\n";
  os << "orbits: " << r.orbits.size() << "\n";
  for (const auto& o : r.orbits) {
    os << "  [" << std::setw(3) << o.id << "] " << std::left << std::setw(18)
       << to_string(o.verdict) << std::right;
    if (o.gap) os << " gap " << std::setprecision(6) << o.gap->gap;
    os << "  " << o.reason;
    if (!o.error.empty()) os << " (" << o.error << ")";
    os << "\n";
  }
  for (const auto& n : r.notes) os << "note: " << n << "\n";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace magflow
