#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "geoxray/grid.hpp"
#include "geoxray/xray.hpp"

namespace geoxray {

enum class PhantomKind { zero, ellipse, coherent, coherent_positive, bump };

PhantomKind parse_phantom_kind(std::string_view name);
std::string_view to_string(PhantomKind k);

struct PhantomSpec {
  PhantomKind kind = PhantomKind::coherent;
  Point2 center{-0.7, 0.0};
  double amplitude = 1.0;
  // coherent / coherent_positive: sin(y'/sigma^2) exp(-|x'|^2 / 2 sigma^2) in
  // coordinates rotated by `rotation` about `center`.
  double sigma = 0.1;
  double rotation = 0.1308996938995747;  // pi / 24
  // ellipse
  double semi_x = 0.45;
  double semi_y = 0.18;
  double smoothing = 0.05;
  // bump
  double width = 0.04;

  static PhantomSpec ellipse();
  static PhantomSpec coherent(Point2 center, double rotation);
  static PhantomSpec bump(Point2 center);
};

double phantom_value(const PhantomSpec& spec, double x, double y);
ScalarField2D make_phantom(const PhantomSpec& spec, const Grid2D& grid);

/// Message when the smallest feature of the phantom spans fewer than three
/// grid cells.
std::optional<std::string> resolution_warning(const PhantomSpec& spec, const Grid2D& grid);

enum class AttenuationKind { zero, gaussian_bump, disk2 };

AttenuationKind parse_attenuation_kind(std::string_view name);
std::string_view to_string(AttenuationKind k);

double attenuation_value(AttenuationKind kind, double x, double y);
ScalarField2D make_attenuation(AttenuationKind kind, const Grid2D& grid);

/// Center and radius of the disk2 attenuation plateau.
inline constexpr Point2 kDisk2Center{-0.2, -0.33};
inline constexpr double kDisk2Radius = 0.28;
inline constexpr double kDisk2Rolloff = 0.06;

enum class NoiseKind { none, gaussian, poisson };

NoiseKind parse_noise_kind(std::string_view name);
std::string_view to_string(NoiseKind k);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double level = 0.0;  // gaussian: relative std; poisson: peak count
  std::uint64_t seed = 1;
};

/// i.i.d. normal noise with std rel_level * max|s|.
Sinogram add_gaussian_noise(const Sinogram& s, double rel_level, std::uint64_t seed);

/// Scales s to peak `peak`, replaces each entry by a Poisson sample with that
/// mean and scales back. Negative entries are clipped to zero (with a warning
/// on std::clog); an all-zero sinogram is returned unchanged.
Sinogram poisson_modulate(const Sinogram& s, double peak, std::uint64_t seed);

Sinogram apply_noise(const Sinogram& s, const NoiseSpec& spec);

}  // namespace geoxray
