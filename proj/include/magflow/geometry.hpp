#pragma once

// Surface models for magnetic systems (g, b) on closed oriented surfaces.
//
// Three kinds of model are supported:
//  * ConstantCurvature: constant Gaussian curvature K and constant intensity b,
//    with Euler characteristic and area carried as metadata (no chart).
//  * ConformalTorus: g = exp(2 phi) (dx^2 + dy^2) on the torus [0,Lx) x [0,Ly),
//    with phi and b given as finite Fourier series so every derivative is exact.
//  * AbstractProfile: only the magnetic curvature along one orbit is known.
//
// Chart convention: a unit tangent vector is (x, y, theta) where theta is the
// Euclidean angle of the velocity; its chart components are
// exp(-phi) (cos theta, sin theta), so its g-norm is 1 by construction.

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace magflow {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct UnitTangent {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// One term a cos(2 pi (kx x / Lx + ky y / Ly)) + b sin(...) of a doubly periodic series.
struct FourierMode {
  int kx = 0;
  int ky = 0;
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

struct Gradient {
  double dx = 0.0;
  double dy = 0.0;
};

// Truncated real Fourier series on a torus with periods (Lx, Ly).
class FourierSeries2D {
 public:
  FourierSeries2D() = default;
  FourierSeries2D(double mean, std::vector<FourierMode> modes);

  double mean() const { return mean_; }
  const std::vector<FourierMode>& modes() const { return modes_; }
  bool is_constant() const;

  double value(double x, double y, double lx, double ly) const;
  Gradient gradient(double x, double y, double lx, double ly) const;
  double laplacian(double x, double y, double lx, double ly) const;

  FourierSeries2D scaled(double factor) const;

 private:
  double mean_ = 0.0;
  std::vector<FourierMode> modes_;
};

struct ConstantCurvature {
  double curvature = -1.0;
  double magnetic = 0.0;
  int euler_characteristic = -2;
  double area = 4.0 * kPi;
};

struct ConformalTorus {
  FourierSeries2D phi;
  FourierSeries2D magnetic;
  double period_x = 1.0;
  double period_y = 1.0;
};

struct AbstractProfile {
  std::function<double(double)> kappa;
  double k_bound = 1.0;
  std::optional<int> euler_characteristic;
  std::optional<double> area;
  std::string label = "abstract";
};

enum class ModelKind { ConstantCurvature, ConformalTorus, AbstractProfile };

std::string to_string(ModelKind kind);

class SurfaceModel {
 public:
  // Checks Gauss-Bonnet consistency K * area = 2 pi chi to 1e-9.
  static SurfaceModel constant_curvature(double curvature, double magnetic, int euler_characteristic,
                                         double area);
  // Area derived from Gauss-Bonnet; requires curvature != 0.
  static SurfaceModel constant_curvature(double curvature, double magnetic, int euler_characteristic);
  static SurfaceModel conformal_torus(FourierSeries2D phi, FourierSeries2D magnetic,
                                      double period_x = 1.0, double period_y = 1.0);
  static SurfaceModel abstract_profile(std::function<double(double)> kappa, double k_bound,
                                       std::optional<int> euler_characteristic = std::nullopt,
                                       std::optional<double> area = std::nullopt,
                                       std::string label = "abstract");

  ModelKind kind() const;
  std::optional<int> euler_characteristic() const;
  std::optional<double> area() const;

  const ConstantCurvature* constant() const { return std::get_if<ConstantCurvature>(&data_); }
  const ConformalTorus* torus() const { return std::get_if<ConformalTorus>(&data_); }
  const AbstractProfile* abstract() const { return std::get_if<AbstractProfile>(&data_); }

  // The system (g, lambda b).  Not available for AbstractProfile.
  SurfaceModel with_magnetic_scale(double lambda) const;
  // The system (g, -b).
  SurfaceModel with_reversed_field() const { return with_magnetic_scale(-1.0); }

  // Magnetic intensity at a point (constant models ignore the point).
  double magnetic_intensity(const Point& p) const;
  // log of the conformal factor; 0 for models without a chart.
  double conformal_log_factor(const Point& p) const;

 private:
  using Data = std::variant<ConstantCurvature, ConformalTorus, AbstractProfile>;
  explicit SurfaceModel(Data d) : data_(std::move(d)) {}
  Data data_;
};

// Quarter turn in the surface orientation.
UnitTangent rotate_i(const UnitTangent& v);

// Chart components of the unit velocity represented by v.
Point velocity_components(const SurfaceModel& m, const UnitTangent& v);

// g(a, b) for chart vectors a, b based at p.
double metric_inner(const SurfaceModel& m, const Point& p, const Point& a, const Point& b);

double gaussian_curvature(const SurfaceModel& m, const Point& p);

// K(x) - db_x(i v) + b(x)^2.
double magnetic_curvature(const SurfaceModel& m, const UnitTangent& v);

struct QuadratureOptions {
  int initial_grid = 128;
  int max_grid = 2048;
  double tolerance = 1e-8;
};

// |integral of K dnu - 2 pi chi|.
double gauss_bonnet_residual(const SurfaceModel& m, const QuadratureOptions& opts = {});

struct InequalityResult {
  double lhs = 0.0;  // integral of b^2 dnu
  double rhs = 0.0;  // -2 pi chi
  bool passes = false;
  // rhs / lhs: (g, lambda b) can only be Anosov when lambda^2 is below this.
  std::optional<double> lambda_squared_threshold;
};

InequalityResult integral_inequality_check(const SurfaceModel& m, const QuadratureOptions& opts = {});

}  // namespace magflow
