#include "geoxray/metric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geoxray/errors.hpp"

namespace geoxray {

SpeedProfile parse_speed_profile(std::string_view name) {
  if (name == "unit") return SpeedProfile::unit;
  if (name == "c1") return SpeedProfile::c1;
  if (name == "c2") return SpeedProfile::c2;
  if (name == "c3") return SpeedProfile::c3;
  throw ConfigError("unknown speed profile '" + std::string(name) + "'");
}

std::string_view to_string(SpeedProfile p) {
  switch (p) {
    case SpeedProfile::unit: return "unit";
    case SpeedProfile::c1: return "c1";
    case SpeedProfile::c2: return "c2";
    case SpeedProfile::c3: return "c3";
  }
  return "?";
}

double refractive_index(SpeedProfile p, double x, double y) {
  auto gutter = [&](double sigma) {
    return std::exp(0.3 * std::exp(-y * y / (2.0 * sigma * sigma)));
  };
  switch (p) {
    case SpeedProfile::unit: return 1.0;
    case SpeedProfile::c1: return gutter(0.25);
    case SpeedProfile::c2: return gutter(0.12);
    case SpeedProfile::c3: {
      constexpr double s2 = 2.0 * 0.25 * 0.25;
      const double up = std::exp(-(x * x + (y - 0.3) * (y - 0.3)) / s2);
      const double down = std::exp(-(x * x + (y + 0.3) * (y + 0.3)) / s2);
      return std::exp(0.65 * up + 0.65 * down);
    }
  }
  return 1.0;
}

namespace {

// Centered differences in the interior, one-sided on the edges.
ScalarField2D derivative(const ScalarField2D& f, bool along_x) {
  const Grid2D& g = f.grid();
  const int n = g.n();
  const double h = g.spacing();
  ScalarField2D out(g);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int k = along_x ? i : j;
      auto at = [&](int kk) { return along_x ? f.at(kk, j) : f.at(i, kk); };
      double d;
      if (k == 0)
        d = (at(1) - at(0)) / h;
      else if (k == n - 1)
        d = (at(n - 1) - at(n - 2)) / h;
      else
        d = (at(k + 1) - at(k - 1)) / (2.0 * h);
      out.at(i, j) = d;
    }
  }
  return out;
}

ScalarField2D curvature_of(const ScalarField2D& speed,
                           const ScalarField2D& log_speed) {
  const Grid2D& g = speed.grid();
  const int n = g.n();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  ScalarField2D k(g);
  for (int j = 1; j < n - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      const double lap = (log_speed.at(i + 1, j) + log_speed.at(i - 1, j) +
                          log_speed.at(i, j + 1) + log_speed.at(i, j - 1) -
                          4.0 * log_speed.at(i, j)) *
                         inv_h2;
      const double c = speed.at(i, j);
      k.at(i, j) = c * c * lap;
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (i > 0 && i < n - 1 && j > 0 && j < n - 1) continue;
      k.at(i, j) = k.at(std::clamp(i, 1, n - 2), std::clamp(j, 1, n - 2));
    }
  }
  return k;
}

}  // namespace

ConformalMetric::ConformalMetric(ScalarField2D speed)
    : speed_(std::move(speed)),
      log_speed_(speed_.grid()),
      dlog_x_(speed_.grid()),
      dlog_y_(speed_.grid()) {
  if (!speed_.all_finite() || speed_.min() <= 0.0)
    throw ConfigError("speed must be finite and positive");
  auto logs = log_speed_.values();
  auto cs = speed_.values();
  for (std::size_t k = 0; k < cs.size(); ++k) logs[k] = std::log(cs[k]);
  dlog_x_ = derivative(log_speed_, true);
  dlog_y_ = derivative(log_speed_, false);
  c_min_ = speed_.min();
  c_max_ = speed_.max();
  if (speed_.grid().n() >= 32) curvature_ = curvature_of(speed_, log_speed_);
}

double ConformalMetric::speed_at(double x, double y) const {
  return std::exp(log_speed_.evaluate(x, y));
}

ConformalMetric::Local ConformalMetric::local(double x, double y) const {
  const auto s = bilinear_stencil(grid(), x, y);
  return {std::exp(2.0 * log_speed_.evaluate(s)), dlog_x_.evaluate(s),
          dlog_y_.evaluate(s)};
}

const ScalarField2D& ConformalMetric::curvature() const {
  if (!curvature_)
    throw ConfigError("grid too coarse for curvature (need n >= 32, have n = " +
                      std::to_string(grid().n()) + ")");
  return *curvature_;
}

ConformalMetric make_speed(SpeedProfile kind, const Grid2D& grid) {
  return ConformalMetric(ScalarField2D::sample(grid, [kind](double x, double y) {
    return 1.0 / refractive_index(kind, x, y);
  }));
}

ScalarField2D gaussian_curvature(const ConformalMetric& m) {
  return m.curvature();
}

ScalarField2D metric_laplacian(const ConformalMetric& m, const ScalarField2D& u) {
  require_same_grid(m.speed(), u, "metric_laplacian");
  const Grid2D& g = u.grid();
  const int n = g.n();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());

  std::vector<unsigned char> inside(g.size());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto p = g.node(i, j);
      inside[g.index(i, j)] = inside_open_disk(p.x, p.y);
    }
  auto value = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= n || j >= n) return 0.0;
    const auto k = g.index(i, j);
    return inside[k] ? u.raw()[k] : 0.0;
  };

  ScalarField2D out(g);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const auto k = g.index(i, j);
      if (!inside[k]) continue;
      const double lap = (value(i + 1, j) + value(i - 1, j) + value(i, j + 1) +
                          value(i, j - 1) - 4.0 * u.raw()[k]) *
                         inv_h2;
      const double c = m.speed().raw()[k];
      out.raw()[k] = c * c * lap;
    }
  }
  return out;
}

double smooth_falloff(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

ScalarField2D make_cutoff(const Grid2D& grid, double r_one, double r_zero) {
  if (!(r_one > 0.0) || !(r_one < r_zero) || r_zero > 1.0)
    throw ConfigError("cutoff radii need 0 < r_one < r_zero <= 1");
  return ScalarField2D::sample(grid, [=](double x, double y) {
    return smooth_falloff((std::hypot(x, y) - r_one) / (r_zero - r_one));
  });
}

}  // namespace geoxray
