// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "magflow/anosov.hpp"
#include "magflow/config.hpp"
#include "magflow/green.hpp"
#include "magflow/jacobi.hpp"
#include "magflow/riccati.hpp"
#include "magflow/runner.hpp"
#include "profiles.hpp"

using namespace magflow;
using magflow::testing::random_negative_profiles;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "failed: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "exception: " << e.what();
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name;
  const std::string d = o.detail.str();
  if (!d.empty()) std::cout << " -- " << d;
  std::cout << std::endl;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

json constant_model(double b) {
  return {{"kind", "constant_curvature"},
          {"curvature", -1.0},
          {"magnetic", b},
          {"euler_characteristic", -2}};
}

}  // namespace

int main() {
  std::cout.setf(std::ios::unitbuf);

  criterion(1, "Green slopes of constant profiles", [](Outcome& o) {
    double worst = 0.0;
    for (double k : {-4.0, -1.0, -0.25}) {
      const auto g = green_estimate(CurvatureProfile::constant(k));
      const double a = std::sqrt(-k);
      worst = std::max({worst, std::abs(g.u_plus0 + a), std::abs(g.u_minus0 - a)});
    }
    o.require(worst < 1e-6, "slope error " + num(worst));
    o.detail << "max slope error " << num(worst);
  });

  criterion(2, "conjugate times of constant profiles", [](Outcome& o) {
    double worst = 0.0;
    for (double k : {1.0, 4.0}) {
      const auto c = first_conjugate_time(CurvatureProfile::constant(k), 50.0);
      o.require(c.has_value(), "no conjugate point for K=" + num(k));
      if (c) worst = std::max(worst, std::abs(*c - kPi / std::sqrt(k)));
    }
    o.require(worst < 1e-6, "time error " + num(worst));
    o.require(!first_conjugate_time(CurvatureProfile::constant(-1.0), 50.0),
              "conjugate point found for K=-1");
    o.detail << "max time error " << num(worst);
  });

  criterion(3, "horocycle boundary sweep", [](Outcome& o) {
    json cfg = {{"model", constant_model(1.0)},
                {"sweep", {{"start", 0.2}, {"stop", 1.4}, {"step", 0.05}}},
                {"workers", 4}};
    const auto points = run_sweep(parse_config(cfg));
    o.require(points.size() == 25, "expected 25 grid points, got " + std::to_string(points.size()));
    for (const auto& p : points) {
      const double l = p.parameter;
      const Verdict want = l <= 0.95 + 1e-9 ? Verdict::NumericallyAnosov : Verdict::NotAnosov;
      o.require(p.report.verdict == want,
                "lambda " + num(l) + " gave " + to_string(p.report.verdict));
      if (std::abs(l - 0.95) < 1e-9) {
        const double gap = p.report.min_gap.value_or(NAN);
        const double err = std::abs(gap - 2 * std::sqrt(1 - l * l));
        o.require(err < 1e-4, "gap error at 0.95 is " + num(err));
        if (o.pass) o.detail << "gap error at 0.95: " << num(err);
      }
    }
  });

  criterion(4, "integral inequality", [](Outcome& o) {
    for (double b : {0.0, 0.5, 0.999, 1.0, 1.001, 1.5}) {
      const auto r = integral_inequality_check(SurfaceModel::constant_curvature(-1.0, b, -2, 4 * kPi));
      o.require(std::abs(r.lhs - b * b * 4 * kPi) < 1e-12, "lhs at b=" + num(b));
      o.require(std::abs(r.rhs - 4 * kPi) < 1e-12, "rhs at b=" + num(b));
      o.require(r.passes == (b * b < 1.0), "passes at b=" + num(b));
    }
    for (double b : {0.0, 0.7}) {
      const auto t = SurfaceModel::conformal_torus(
          FourierSeries2D(0.0, {{1, 0, 0.1, 0.0}, {0, 1, 0.0, 0.05}}),
          FourierSeries2D(b, {{1, 1, 0.2, 0.0}}));
      o.require(!integral_inequality_check(t).passes, "torus passes at mean b=" + num(b));
    }
  });

  criterion(5, "Wronskian conservation", [](Outcome& o) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (const auto& p : random_negative_profiles(20, 105)) {
      const PerpJacobiState a0{u(rng), u(rng)}, b0{u(rng), u(rng)};
      const auto a = integrate_perp(p, a0, 0.0, 50.0);
      const auto b = integrate_perp(p, b0, 0.0, 50.0);
      const double w0 = wronskian(a0, b0);
      for (double t = 0.0; t <= 50.0; t += 0.05) {
        const auto sa = a(t), sb = b(t);
        // Drift relative to the size of the product being cancelled.
        const double scale = std::max(1.0, sasaki_norm(sa) * sasaki_norm(sb));
        worst = std::max(worst, std::abs(wronskian(sa, sb) - w0) / scale);
      }
    }
    o.require(worst < 1e-8, "drift " + num(worst));
    o.detail << "max normalized drift " << num(worst);
  });

  auto criterion6_profiles = [] {
    std::vector<CurvatureProfile> ps{CurvatureProfile::constant(0.0),
                                     CurvatureProfile::constant(-1.0)};
    for (const auto& p : random_negative_profiles(10, 606)) ps.push_back(p);
    return ps;
  };

  criterion(6, "two-point slope by quadrature and shooting", [&](Outcome& o) {
    double worst = 0.0;
    for (const auto& p : criterion6_profiles())
      for (double r : {5.0, 10.0, 20.0}) {
        const auto j = solve_Jr_slope(p, r, kJacobiTol, 1.0);
        worst = std::max(worst, j.cross_check);
      }
    o.require(worst < 1e-8, "disagreement " + num(worst));
    o.detail << "max disagreement " << num(worst);
  });

  criterion(7, "monotonicity of the two-point slope", [&](Outcome& o) {
    for (const auto& p : criterion6_profiles()) {
      double prev = -INFINITY;
      for (double r : {5.0, 10.0, 20.0}) {
        const double s = psi_slope(p, r);
        o.require(s > prev, p.provenance() + " not increasing at r=" + num(r));
        prev = s;
      }
      o.require(prev < psi_slope(p, -1.0), p.provenance() + " exceeds the r=-1 slope");
    }
  });

  criterion(8, "comparison envelopes", [](Outcome& o) {
    std::mt19937_64 rng(8);
    const double horizon = 50.0;
    int survivors = 0;
    for (const auto& p : random_negative_profiles(20, 808)) {
      const double k = p.k_bound();
      std::uniform_real_distribution<double> u0(-1.5 * k, 3.0 * k);
      // Time within which a solution below -k - 1e-6 reaches -2k and then blows up.
      const double escape = (std::log(k / 1e-6) + std::log(3.0)) / (2 * k) + 1.0;
      for (int trial = 0; trial < 5; ++trial) {
        const auto tr = integrate_riccati(p, u0(rng), 0.0, horizon);
        if (tr.blowup_time) continue;
        ++survivors;
        for (std::size_t i = 0; i < tr.t_samples.size(); ++i) {
          const double t = tr.t_samples[i], u = tr.u_samples[i];
          if (t > 0.0 && u > comparison_envelope(k, t).upper + 1e-6)
            o.require(false, p.provenance() + " above k coth(kt) at t=" + num(t));
          if (t <= horizon - escape && u < -k - 1e-6)
            o.require(false, p.provenance() + " below -k at t=" + num(t));
        }
      }
      for (Side side : {Side::Stable, Side::Unstable}) {
        const auto g = green_riccati_solution(p, side, -50.0, 50.0);
        o.require(!g.trace.blowup_time, p.provenance() + " Green solution blows up");
        for (double u : g.trace.u_samples)
          if (std::abs(u) > k + 1e-6) {
            o.require(false, p.provenance() + " Green solution exceeds k");
            break;
          }
      }
    }
    o.detail << survivors << " surviving solutions checked";
  });

  criterion(9, "invariance of the stable slope", [](Outcome& o) {
    const auto p = CurvatureProfile::from_function(
        [](double t) { return -1.0 + 0.3 * std::sin(t); }, std::sqrt(1.3) + 1e-6);
    double worst = 0.0;
    for (double t : {1.0, kPi, 10.0}) worst = std::max(worst, invariance_residual(p, t));
    o.require(worst < 1e-6, "residual " + num(worst));
    o.detail << "max residual " << num(worst);
  });

  criterion(10, "flip duality", [](Outcome& o) {
    GreenOptions direct;
    direct.unstable_route = UnstableRoute::NegativeR;
    double worst = 0.0;
    for (const auto& p : random_negative_profiles(10, 1010)) {
      const double flipped = green_slope(flip_profile(p), Side::Stable).slope;
      const double minus = green_slope(p, Side::Unstable, direct).slope;
      worst = std::max(worst, std::abs(flipped + minus));
    }
    o.require(worst < 1e-8, "difference " + num(worst));
    o.detail << "max difference " << num(worst);
  });

  criterion(11, "contraction fit", [](Outcome& o) {
    const auto f = contraction_fit(CurvatureProfile::constant(-1.0));
    o.require(!f.failed, f.failure);
    o.require(std::abs(f.c - 1.0) < 0.05, "c = " + num(f.c));
    double at10 = NAN;
    for (std::size_t i = 0; i < f.t.size(); ++i)
      if (std::abs(f.t[i] - 10.0) < 1e-9) at10 = std::exp(f.log_norm[i]);
    const double want = std::sqrt(2.0) * std::exp(-10.0);
    o.require(std::abs(at10 / want - 1.0) < 0.05, "norm at t=10 is " + num(at10));
    o.detail << "c = " << f.c << ", norm(10)/expected = " << at10 / want;
  });

  criterion(12, "non-positive profile vanishing on half-periods", [](Outcome& o) {
    ClassifyOptions opts;
    const auto hs = analyze_profile(magflow::testing::half_sine_profile(), opts);
    o.require(hs.gap && hs.gap->converged && hs.gap->gap > 1e-3, "half-sine gap not certified");
    o.require(hs.verdict == Verdict::NumericallyAnosov, "half-sine verdict " + to_string(hs.verdict));
    const auto flat = analyze_profile(CurvatureProfile::constant(0.0), opts);
    o.require(flat.gap && std::abs(flat.gap->gap) < 1e-8, "flat gap not below 1e-8");
    bool constant_one = flat.witness && flat.witness->bounded;
    if (flat.witness)
      for (double j : flat.witness->j) constant_one = constant_one && std::abs(j - 1.0) < 1e-12;
    o.require(constant_one, "flat witness is not J = 1");
    o.require(flat.verdict == Verdict::NotAnosov, "flat verdict " + to_string(flat.verdict));
    if (hs.gap) o.detail << "half-sine gap " << hs.gap->gap;
  });

  criterion(13, "flat-chart circular orbit", [](Outcome& o) {
    const auto m = SurfaceModel::conformal_torus(FourierSeries2D(), FourierSeries2D(1.0, {}));
    const UnitTangent v0{0.3, 0.6, 0.4};
    const auto tr = integrate_orbit(m, v0, 10 * kTwoPi);
    double theta_err = 0.0, period_err = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i)
      theta_err = std::max(theta_err, std::abs(tr.states[i].theta - v0.theta - tr.t_samples[i]));
    for (int k = 1; k <= 10; ++k) {
      const auto s = integrate_orbit(m, v0, k * kTwoPi, 1e-10, k * kTwoPi).states.back();
      period_err = std::max({period_err, std::abs(std::remainder(s.x - v0.x, 1.0)),
                             std::abs(std::remainder(s.y - v0.y, 1.0))});
    }
    o.require(theta_err < 1e-8, "theta error " + num(theta_err));
    o.require(period_err < 1e-8, "period error " + num(period_err));
    o.detail << "theta error " << num(theta_err) << ", return error " << num(period_err);
  });

  criterion(14, "deterministic reports", [](Outcome& o) {
    const fs::path dir = fs::temp_directory_path() / "magflow_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const json cfg = {
        {"model",
         {{"kind", "conformal_torus"},
          {"phi", {{"modes", {{{"kx", 1}, {"ky", 1}, {"cos", 0.1}}}}}},
          {"magnetic", {{"mean", 0.3}, {"modes", {{{"kx", 0}, {"ky", 1}, {"sin", 0.2}}}}}}}},
        {"ensemble", {{"count", 6}, {"seed", 7}, {"horizon", 30.0}}}};
    std::ofstream(dir / "config.json") << cfg.dump(2);
    json reports[2];
    for (int i = 0; i < 2; ++i) {
      const fs::path out = dir / ("run" + std::to_string(i));
      const std::string cmd = std::string(MAGFLOW_CLI_PATH) + " run -c " +
                              (dir / "config.json").string() + " -o " + out.string() +
                              " -w " + std::to_string(1 + 2 * i) + " > /dev/null";
      const int status = std::system(cmd.c_str());
      o.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "run " + std::to_string(i) + " failed");
      std::ifstream in(out / "report.json");
      reports[i] = json::parse(in);
      reports[i].erase("generated_at");
    }
    o.require(reports[0].dump() == reports[1].dump(), "reports differ");
    o.detail << "1 and 3 workers, " << reports[0]["orbits"].size() << " orbits";
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
