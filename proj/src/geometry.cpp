#include "magflow/geometry.hpp"

#include <cmath>
#include <sstream>

#include "magflow/errors.hpp"

namespace magflow {

namespace {

double phase(const FourierMode& m, double x, double y, double lx, double ly) {
  return kTwoPi * (m.kx * x / lx + m.ky * y / ly);
}

// Tensor trapezoidal rule over one period cell, doubling the grid until two
// successive estimates agree to opts.tolerance.
template <class F>
double torus_integral(const ConformalTorus& t, F&& integrand, const QuadratureOptions& opts) {
  auto rule = [&](int n) {
    const double hx = t.period_x / n;
    const double hy = t.period_y / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += integrand(Point{i * hx, j * hy});
    return acc * hx * hy;
  };
  int n = opts.initial_grid;
  double coarse = rule(n);
  while (2 * n <= opts.max_grid) {
    const double fine = rule(2 * n);
    if (std::abs(fine - coarse) < opts.tolerance) return fine;
    coarse = fine;
    n *= 2;
  }
  std::ostringstream msg;
  msg << "torus quadrature did not reach tolerance " << opts.tolerance << " at grid " << n;
  throw ResolutionError(msg.str());
}

}  // namespace

FourierSeries2D::FourierSeries2D(double mean, std::vector<FourierMode> modes)
    : mean_(mean), modes_(std::move(modes)) {}

bool FourierSeries2D::is_constant() const {
  for (const auto& m : modes_)
    if ((m.kx != 0 || m.ky != 0) && (m.cos_coeff != 0.0 || m.sin_coeff != 0.0)) return false;
  return true;
}

double FourierSeries2D::value(double x, double y, double lx, double ly) const {
  double v = mean_;
  for (const auto& m : modes_) {
    const double ph = phase(m, x, y, lx, ly);
    v += m.cos_coeff * std::cos(ph) + m.sin_coeff * std::sin(ph);
  }
  return v;
}

Gradient FourierSeries2D::gradient(double x, double y, double lx, double ly) const {
  Gradient g;
  for (const auto& m : modes_) {
    const double ph = phase(m, x, y, lx, ly);
    const double d = -m.cos_coeff * std::sin(ph) + m.sin_coeff * std::cos(ph);
    g.dx += d * kTwoPi * m.kx / lx;
    g.dy += d * kTwoPi * m.ky / ly;
  }
  return g;
}

double FourierSeries2D::laplacian(double x, double y, double lx, double ly) const {
  double v = 0.0;
  for (const auto& m : modes_) {
    const double ph = phase(m, x, y, lx, ly);
    const double wx = kTwoPi * m.kx / lx;
    const double wy = kTwoPi * m.ky / ly;
    v -= (wx * wx + wy * wy) * (m.cos_coeff * std::cos(ph) + m.sin_coeff * std::sin(ph));
  }
  return v;
}

FourierSeries2D FourierSeries2D::scaled(double factor) const {
  auto modes = modes_;
  for (auto& m : modes) {
    m.cos_coeff *= factor;
    m.sin_coeff *= factor;
  }
  return FourierSeries2D(mean_ * factor, std::move(modes));
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ConstantCurvature:
      return "constant_curvature";
    case ModelKind::ConformalTorus:
      return "conformal_torus";
    case ModelKind::AbstractProfile:
      return "abstract_profile";
  }
  return "unknown";
}

SurfaceModel SurfaceModel::constant_curvature(double curvature, double magnetic,
                                              int euler_characteristic, double area) {
  if (!(area > 0.0)) throw DomainError("constant-curvature model needs area > 0");
  const double residual = curvature * area - kTwoPi * euler_characteristic;
  if (std::abs(residual) > 1e-9) {
    std::ostringstream msg;
    msg << "Gauss-Bonnet violated: K*area - 2*pi*chi = " << residual;
    throw DomainError(msg.str());
  }
  return SurfaceModel(ConstantCurvature{curvature, magnetic, euler_characteristic, area});
}

SurfaceModel SurfaceModel::constant_curvature(double curvature, double magnetic,
                                              int euler_characteristic) {
  if (curvature == 0.0) throw DomainError("area cannot be derived for a flat constant model");
  return constant_curvature(curvature, magnetic, euler_characteristic,
                            kTwoPi * euler_characteristic / curvature);
}

SurfaceModel SurfaceModel::conformal_torus(FourierSeries2D phi, FourierSeries2D magnetic,
                                           double period_x, double period_y) {
  if (!(period_x > 0.0) || !(period_y > 0.0)) throw DomainError("torus periods must be positive");
  return SurfaceModel(ConformalTorus{std::move(phi), std::move(magnetic), period_x, period_y});
}

SurfaceModel SurfaceModel::abstract_profile(std::function<double(double)> kappa, double k_bound,
                                            std::optional<int> euler_characteristic,
                                            std::optional<double> area, std::string label) {
  if (!kappa) throw DomainError("abstract profile needs a curvature evaluator");
  if (!(k_bound >= 0.0)) throw DomainError("k_bound must be non-negative");
  if (area && !(*area > 0.0)) throw DomainError("area must be positive");
  return SurfaceModel(
      AbstractProfile{std::move(kappa), k_bound, euler_characteristic, area, std::move(label)});
}

ModelKind SurfaceModel::kind() const {
  if (constant()) return ModelKind::ConstantCurvature;
  if (torus()) return ModelKind::ConformalTorus;
  return ModelKind::AbstractProfile;
}

std::optional<int> SurfaceModel::euler_characteristic() const {
  if (const auto* c = constant()) return c->euler_characteristic;
  if (torus()) return 0;
  return abstract()->euler_characteristic;
}

std::optional<double> SurfaceModel::area() const {
  if (const auto* c = constant()) return c->area;
  if (const auto* t = torus()) {
    const ConformalTorus& tor = *t;
    return torus_integral(
        tor,
        [&](const Point& p) {
          return std::exp(2.0 * tor.phi.value(p.x, p.y, tor.period_x, tor.period_y));
        },
        QuadratureOptions{});
  }
  return abstract()->area;
}

SurfaceModel SurfaceModel::with_magnetic_scale(double lambda) const {
  if (const auto* c = constant()) {
    auto copy = *c;
    copy.magnetic *= lambda;
    return SurfaceModel(copy);
  }
  if (const auto* t = torus()) {
    auto copy = *t;
    copy.magnetic = t->magnetic.scaled(lambda);
    return SurfaceModel(copy);
  }
  throw UnsupportedQuery("abstract profiles carry no magnetic intensity to rescale");
}

double SurfaceModel::magnetic_intensity(const Point& p) const {
  if (const auto* c = constant()) return c->magnetic;
  if (const auto* t = torus()) return t->magnetic.value(p.x, p.y, t->period_x, t->period_y);
  throw UnsupportedQuery("abstract profiles have no pointwise magnetic intensity");
}

double SurfaceModel::conformal_log_factor(const Point& p) const {
  if (const auto* t = torus()) return t->phi.value(p.x, p.y, t->period_x, t->period_y);
  return 0.0;
}

UnitTangent rotate_i(const UnitTangent& v) { return {v.x, v.y, v.theta + 0.5 * kPi}; }

Point velocity_components(const SurfaceModel& m, const UnitTangent& v) {
  const double s = std::exp(-m.conformal_log_factor({v.x, v.y}));
  return {s * std::cos(v.theta), s * std::sin(v.theta)};
}

double metric_inner(const SurfaceModel& m, const Point& p, const Point& a, const Point& b) {
  return std::exp(2.0 * m.conformal_log_factor(p)) * (a.x * b.x + a.y * b.y);
}

double gaussian_curvature(const SurfaceModel& m, const Point& p) {
  if (const auto* c = m.constant()) return c->curvature;
  if (const auto* t = m.torus()) {
    const double phi = t->phi.value(p.x, p.y, t->period_x, t->period_y);
    return -std::exp(-2.0 * phi) * t->phi.laplacian(p.x, p.y, t->period_x, t->period_y);
  }
  throw UnsupportedQuery("abstract profiles have no pointwise Gaussian curvature");
}

double magnetic_curvature(const SurfaceModel& m, const UnitTangent& v) {
  if (const auto* c = m.constant()) return c->curvature + c->magnetic * c->magnetic;
  if (const auto* t = m.torus()) {
    const double lx = t->period_x, ly = t->period_y;
    const double phi = t->phi.value(v.x, v.y, lx, ly);
    const double gauss = -std::exp(-2.0 * phi) * t->phi.laplacian(v.x, v.y, lx, ly);
    const double b = t->magnetic.value(v.x, v.y, lx, ly);
    const Gradient db = t->magnetic.gradient(v.x, v.y, lx, ly);
    // i v = exp(-phi) (-sin theta, cos theta)
    const double db_iv = std::exp(-phi) * (-db.dx * std::sin(v.theta) + db.dy * std::cos(v.theta));
    return gauss - db_iv + b * b;
  }
  throw UnsupportedQuery("abstract profiles have no pointwise magnetic curvature");
}

double gauss_bonnet_residual(const SurfaceModel& m, const QuadratureOptions& opts) {
  if (const auto* c = m.constant())
    return std::abs(c->curvature * c->area - kTwoPi * c->euler_characteristic);
  if (const auto* t = m.torus()) {
    const ConformalTorus& tor = *t;
    if (tor.phi.is_constant()) return 0.0;
    const double total = torus_integral(
        tor,
        [&](const Point& p) {
          const double phi = tor.phi.value(p.x, p.y, tor.period_x, tor.period_y);
          return gaussian_curvature(m, p) * std::exp(2.0 * phi);
        },
        opts);
    return std::abs(total);
  }
  throw UnsupportedQuery("Gauss-Bonnet check needs pointwise geometry");
}

InequalityResult integral_inequality_check(const SurfaceModel& m, const QuadratureOptions& opts) {
  InequalityResult r;
  if (const auto* c = m.constant()) {
    r.lhs = c->magnetic * c->magnetic * c->area;
    r.rhs = -kTwoPi * c->euler_characteristic;
  } else if (const auto* t = m.torus()) {
    const ConformalTorus& tor = *t;
    r.lhs = torus_integral(
        tor,
        [&](const Point& p) {
          const double b = tor.magnetic.value(p.x, p.y, tor.period_x, tor.period_y);
          const double phi = tor.phi.value(p.x, p.y, tor.period_x, tor.period_y);
          return b * b * std::exp(2.0 * phi);
        },
        opts);
    r.rhs = 0.0;
  } else {
    throw UnsupportedQuery("integral inequality needs the magnetic intensity on the surface");
  }
  r.passes = r.lhs < r.rhs;
  if (r.lhs > 0.0) r.lambda_squared_threshold = r.rhs / r.lhs;
  return r;
}

}  // namespace magflow
