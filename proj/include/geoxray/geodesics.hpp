#pragma once

#include <filesystem>
#include <vector>

#include "geoxray/grid.hpp"
#include "geoxray/metric.hpp"

namespace geoxray {

/// Position and Euclidean velocity with |v| = c(x), i.e. unit metric speed.
struct PhasePoint {
  Point2 x;
  Point2 v;
};

struct ShootOptions {
  double dt = 0.0;  // <= 0 selects default_step(metric)
  int max_steps = 100000;
  const ScalarField2D* attenuation = nullptr;  // a; zero when null
};

/// spacing / (2 c_max)
double default_step(const ConformalMetric& m);

/// Samples of a unit-speed geodesic from its start to the first exit through
/// the unit circle. t[0] = 0, t.back() = tau; the last interval may be short.
struct GeodesicPath {
  std::vector<double> t;
  std::vector<PhasePoint> points;
  std::vector<double> cum_atten;  // integral of a from 0 to t
  double tau = 0.0;

  std::size_t size() const { return t.size(); }
  /// Cubic Hermite interpolation of position between samples.
  Point2 position_at(double time) const;
  /// Hermite position with linearly interpolated velocity.
  PhasePoint state_at(double time) const;
};

/// Integrates the flow of H = c^2 |xi|^2 / 2 with RK4, renormalizing to unit
/// speed each step, and refines the exit crossing by bisection to 1e-10.
/// Throws NumericalError ("possibly trapped") past max_steps.
GeodesicPath shoot(const ConformalMetric& m, const PhasePoint& start,
                   const ShootOptions& opts = {});

/// Unit-speed phase point at x heading along the Euclidean direction dir.
PhasePoint make_phase_point(const ConformalMetric& m, Point2 x, Point2 dir);

/// Inward fan-beam rays: anchor (cos b, sin b), direction the inner normal
/// rotated by alpha. Entries are stored beta-major.
struct RayEntry {
  double beta = 0.0;
  double alpha = 0.0;
  Point2 x;
  Point2 dir;  // Euclidean unit vector
  double weight = 0.0;  // cos(alpha) d_beta d_alpha
};

struct RaySet {
  int n_beta = 0;
  int n_alpha = 0;
  std::vector<RayEntry> entries;

  std::size_t size() const { return entries.size(); }
  const RayEntry& operator()(int ib, int ia) const {
    return entries[static_cast<std::size_t>(ib) * n_alpha + ia];
  }
};

RaySet make_rayset(int n_beta, int n_alpha);

PhasePoint start_of(const ConformalMetric& m, const RayEntry& ray);

struct JacobiSolution {
  std::vector<double> t;
  std::vector<double> b;
  std::vector<double> b_dot;
  std::vector<double> conjugate_times;
  std::vector<double> conjugate_bdot;
  std::vector<Point2> conjugate_points;
};

/// Solves b'' + K(gamma(t)) b = 0, b(0) = 0, b'(0) = 1 along the path with
/// RK4 on the path's own steps. Zeros of b in (0, tau) are conjugate times.
JacobiSolution jacobi(const ScalarField2D& curvature, const GeodesicPath& path);
JacobiSolution jacobi(const ConformalMetric& m, const GeodesicPath& path);

/// |b'(t0)| / |b'(0)|. t0 must be one of j.conjugate_times.
double bdot_ratio(const JacobiSolution& j, double t0);

struct LocusPoint {
  double angle = 0.0;  // initial direction at p
  Point2 q;            // first conjugate point
};

/// First conjugate points of p over n_dirs equally spaced directions.
std::vector<LocusPoint> conjugate_locus(const ConformalMetric& m, Point2 p,
                                        int n_dirs, double dt = 0.0);

void write_path_csv(const GeodesicPath& path, const std::filesystem::path& file);
void write_locus_csv(const std::vector<LocusPoint>& locus,
                     const std::filesystem::path& file);

}  // namespace geoxray
