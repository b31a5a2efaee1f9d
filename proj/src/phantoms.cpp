#include "geoxray/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>

#include "geoxray/errors.hpp"
#include "geoxray/metric.hpp"

namespace geoxray {

PhantomKind parse_phantom_kind(std::string_view name) {
  if (name == "zero") return PhantomKind::zero;
  if (name == "ellipse") return PhantomKind::ellipse;
  if (name == "coherent") return PhantomKind::coherent;
  if (name == "coherent_positive") return PhantomKind::coherent_positive;
  if (name == "bump") return PhantomKind::bump;
  throw ConfigError("unknown phantom kind '" + std::string(name) + "'");
}

std::string_view to_string(PhantomKind k) {
  switch (k) {
    case PhantomKind::zero: return "zero";
    case PhantomKind::ellipse: return "ellipse";
    case PhantomKind::coherent: return "coherent";
    case PhantomKind::coherent_positive: return "coherent_positive";
    case PhantomKind::bump: return "bump";
  }
  return "?";
}

PhantomSpec PhantomSpec::ellipse() {
  PhantomSpec s;
  s.kind = PhantomKind::ellipse;
  s.center = {0.0, 0.0};
  s.rotation = 0.0;
  return s;
}

PhantomSpec PhantomSpec::coherent(Point2 center, double rotation) {
  PhantomSpec s;
  s.kind = PhantomKind::coherent;
  s.center = center;
  s.rotation = rotation;
  return s;
}

PhantomSpec PhantomSpec::bump(Point2 center) {
  PhantomSpec s;
  s.kind = PhantomKind::bump;
  s.center = center;
  s.rotation = 0.0;
  return s;
}

double phantom_value(const PhantomSpec& spec, double x, double y) {
  const double dx = x - spec.center.x, dy = y - spec.center.y;
  const double c = std::cos(spec.rotation), s = std::sin(spec.rotation);
  const double u = c * dx + s * dy;   // rotate by -rotation
  const double v = -s * dx + c * dy;
  const double r2 = u * u + v * v;
  switch (spec.kind) {
    case PhantomKind::zero:
      return 0.0;
    case PhantomKind::coherent:
    case PhantomKind::coherent_positive: {
      const double s2 = spec.sigma * spec.sigma;
      const double envelope = std::exp(-r2 / (2.0 * s2));
      double f = std::sin(v / s2) * envelope;
      // Same envelope lifts sin to 1 + sin >= 0.
      if (spec.kind == PhantomKind::coherent_positive) f += envelope;
      return spec.amplitude * f;
    }
    case PhantomKind::ellipse: {
      const double rho = std::sqrt(u * u / (spec.semi_x * spec.semi_x) +
                                   v * v / (spec.semi_y * spec.semi_y));
      const double dist = (rho - 1.0) * std::min(spec.semi_x, spec.semi_y);
      return spec.amplitude * smooth_falloff(dist / spec.smoothing + 0.5);
    }
    case PhantomKind::bump:
      return spec.amplitude * std::exp(-r2 / (2.0 * spec.width * spec.width));
  }
  return 0.0;
}

ScalarField2D make_phantom(const PhantomSpec& spec, const Grid2D& grid) {
  return ScalarField2D::sample(grid, [&](double x, double y) { return phantom_value(spec, x, y); });
}

std::optional<std::string> resolution_warning(const PhantomSpec& spec, const Grid2D& grid) {
  double feature = 0.0;
  switch (spec.kind) {
    case PhantomKind::zero: return std::nullopt;
    case PhantomKind::coherent:
    case PhantomKind::coherent_positive:
      feature = 2.0 * 3.141592653589793 * spec.sigma * spec.sigma;  // wavelength
      break;
    case PhantomKind::ellipse: feature = spec.smoothing; break;
    case PhantomKind::bump: feature = 2.0 * spec.width; break;
  }
  const double cells = feature / grid.spacing();
  if (cells >= 3.0) return std::nullopt;
  return "phantom feature spans " + std::to_string(cells) +
         " grid cells (< 3); the phantom is under-resolved";
}

AttenuationKind parse_attenuation_kind(std::string_view name) {
  if (name == "zero") return AttenuationKind::zero;
  if (name == "gaussian_bump") return AttenuationKind::gaussian_bump;
  if (name == "disk2") return AttenuationKind::disk2;
  throw ConfigError("unknown attenuation kind '" + std::string(name) + "'");
}

std::string_view to_string(AttenuationKind k) {
  switch (k) {
    case AttenuationKind::zero: return "zero";
    case AttenuationKind::gaussian_bump: return "gaussian_bump";
    case AttenuationKind::disk2: return "disk2";
  }
  return "?";
}

double attenuation_value(AttenuationKind kind, double x, double y) {
  switch (kind) {
    case AttenuationKind::zero:
      return 0.0;
    case AttenuationKind::gaussian_bump: {
      constexpr double peak = 2.0, width = 0.35;
      return peak * std::exp(-(x * x + y * y) / (2.0 * width * width));
    }
    case AttenuationKind::disk2: {
      const double r = std::hypot(x - kDisk2Center.x, y - kDisk2Center.y);
      return 2.0 * smooth_falloff((r - kDisk2Radius) / kDisk2Rolloff);
    }
  }
  return 0.0;
}

ScalarField2D make_attenuation(AttenuationKind kind, const Grid2D& grid) {
  return ScalarField2D::sample(grid, [kind](double x, double y) { return attenuation_value(kind, x, y); });
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "none") return NoiseKind::none;
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "poisson") return NoiseKind::poisson;
  throw ConfigError("unknown noise kind '" + std::string(name) + "'");
}

std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::poisson: return "poisson";
  }
  return "?";
}

Sinogram add_gaussian_noise(const Sinogram& s, double rel_level, std::uint64_t seed) {
  if (rel_level < 0.0) throw ConfigError("noise level must be >= 0");
  Sinogram out = s;
  if (rel_level == 0.0) return out;
  const double sd = rel_level * s.max_abs();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out.values) v += sd * normal(rng);
  return out;
}

Sinogram poisson_modulate(const Sinogram& s, double peak, std::uint64_t seed) {
  if (!(peak > 0.0)) throw ConfigError("poisson peak must be > 0");
  Sinogram out = s;
  std::size_t clipped = 0;
  for (double& v : out.values)
    if (v < 0.0) {
      v = 0.0;
      ++clipped;
    }
  if (clipped)
    std::clog << "warning: poisson_modulate clipped " << clipped << " negative entries\n";
  const double top = out.max_abs();
  if (top == 0.0) return out;
  std::mt19937_64 rng(seed);
  for (double& v : out.values) {
    const double mean = v * peak / top;
    double sample = 0.0;
    if (mean > 0.0) {
      std::poisson_distribution<long long> poisson(mean);
      sample = static_cast<double>(poisson(rng));
    }
    v = sample * top / peak;
  }
  return out;
}

Sinogram apply_noise(const Sinogram& s, const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::none: return s;
    case NoiseKind::gaussian: return add_gaussian_noise(s, spec.level, spec.seed);
    case NoiseKind::poisson: return poisson_modulate(s, spec.level > 0.0 ? spec.level : 10.0, spec.seed);
  }
  return s;
}

}  // namespace geoxray
