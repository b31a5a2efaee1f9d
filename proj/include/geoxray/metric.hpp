#pragma once

#include <optional>
#include <string_view>

#include "geoxray/grid.hpp"

namespace geoxray {

/// Built-in sound-speed profiles. For c1, c2, c3 the closed-form exponentials
/// describe the refractive index n(x,y); the wave speed is 1/n, so the x axis
/// is a slow gutter (c1, c2) and the two bumps of c3 are focusing lenses.
enum class SpeedProfile { unit, c1, c2, c3 };

SpeedProfile parse_speed_profile(std::string_view name);
std::string_view to_string(SpeedProfile p);

/// Closed-form refractive index of a profile (1 for unit).
double refractive_index(SpeedProfile p, double x, double y);

/// Metric c^-2 dx^2 on the unit disk with c sampled on a grid.
class ConformalMetric {
 public:
  explicit ConformalMetric(ScalarField2D speed);

  struct Local {
    double c2;      // c^2
    double dlog_x;  // d(ln c)/dx
    double dlog_y;  // d(ln c)/dy
  };

  const Grid2D& grid() const { return speed_.grid(); }
  const ScalarField2D& speed() const { return speed_; }
  const ScalarField2D& log_speed() const { return log_speed_; }
  double c_min() const { return c_min_; }
  double c_max() const { return c_max_; }

  double speed_at(double x, double y) const;
  Local local(double x, double y) const;

  /// Cached K = c^2 * Laplacian(ln c); available for n >= 32.
  const ScalarField2D& curvature() const;

 private:
  ScalarField2D speed_;
  ScalarField2D log_speed_;
  ScalarField2D dlog_x_;
  ScalarField2D dlog_y_;
  std::optional<ScalarField2D> curvature_;
  double c_min_ = 0.0;
  double c_max_ = 0.0;
};

ConformalMetric make_speed(SpeedProfile kind, const Grid2D& grid);

/// Gaussian curvature of c^-2 dx^2 by centered second differences of ln c.
/// Boundary ring copies the nearest interior value. Refuses n < 32.
ScalarField2D gaussian_curvature(const ConformalMetric& m);

/// c^2 times the five-point Laplacian, Dirichlet outside the open unit disk:
/// nodes with |x| >= 1 read as zero and produce zero.
ScalarField2D metric_laplacian(const ConformalMetric& m, const ScalarField2D& u);

/// Radial C^2 smoothstep: 1 for r <= r_one, 0 for r >= r_zero.
ScalarField2D make_cutoff(const Grid2D& grid, double r_one = 0.7,
                          double r_zero = 0.96);

/// 1 - (6s^5 - 15s^4 + 10s^3) on [0,1], clamped outside.
double smooth_falloff(double s);

inline bool inside_open_disk(double x, double y) { return x * x + y * y < 1.0; }

}  // namespace geoxray
