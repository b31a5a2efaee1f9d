#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "geoxray/errors.hpp"
#include "geoxray/grid.hpp"
#include "geoxray/metric.hpp"

using namespace geoxray;

namespace {

// Symbolic K for c1/c2: ln c = -0.3 E, E = exp(-y^2 / 2 s^2).
double gutter_curvature(double sigma, double y) {
  const double e = std::exp(-y * y / (2.0 * sigma * sigma));
  const double s2 = sigma * sigma;
  const double lap = -0.3 * e * (y * y / (s2 * s2) - 1.0 / s2);
  const double c = std::exp(-0.3 * e);
  return c * c * lap;
}

// Symbolic K for c3: ln c = -0.65 (U + D), Gaussian lenses at (0, +-0.3).
double lens_curvature(double x, double y) {
  const double s2 = 0.25 * 0.25;
  double lap = 0.0, lnc = 0.0;
  for (double yc : {0.3, -0.3}) {
    const double r2 = x * x + (y - yc) * (y - yc);
    const double e = std::exp(-r2 / (2.0 * s2));
    lnc -= 0.65 * e;
    lap -= 0.65 * e * (r2 / (s2 * s2) - 2.0 / s2);
  }
  return std::exp(2.0 * lnc) * lap;
}

double max_interior_error(int n) {
  const Grid2D g(n);
  const auto m = make_speed(SpeedProfile::c1, g);
  double err = 0.0;
  for (int j = 1; j < n - 1; ++j)
    for (int i = 1; i < n - 1; ++i)
      err = std::max(err, std::abs(m.curvature().at(i, j) - gutter_curvature(0.25, g.coord(j))));
  return err;
}

ScalarField2D random_disk_field(const Grid2D& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return ScalarField2D::sample(g, [&](double x, double y) {
    const double v = u(rng);
    return x * x + y * y < 0.8 ? v : 0.0;
  });
}

}  // namespace

TEST_SUITE("grid_metric") {
  TEST_CASE("grid geometry") {
    CHECK_THROWS_AS(Grid2D(15), ConfigError);
    const Grid2D g(65);
    CHECK(g.spacing() == doctest::Approx(2.0 / 64));
    CHECK(g.coord(0) == -1.0);
    CHECK(g.coord(64) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.index(3, 2) == 2u * 65 + 3);
  }

  TEST_CASE("bilinear interpolation reproduces affine fields") {
    const Grid2D g(40);
    const auto f = ScalarField2D::sample(g, [](double x, double y) { return 2 * x - 3 * y + 1; });
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      const double x = u(rng), y = u(rng);
      CHECK(f.evaluate(x, y) == doctest::Approx(2 * x - 3 * y + 1).epsilon(1e-12));
    }
    // clamped outside the square
    CHECK(f.evaluate(5.0, 0.0) == doctest::Approx(f.evaluate(1.0, 0.0)));
  }

  TEST_CASE("speed profile values") {
    const Grid2D g(129);
    CHECK(make_speed(SpeedProfile::unit, g).speed_at(0.3, 0.4) == doctest::Approx(1.0));
    const auto c1 = make_speed(SpeedProfile::c1, g);
    for (double x : {-0.9, -0.3, 0.0, 0.5, 0.77})
      CHECK(c1.speed_at(x, 0.0) == doctest::Approx(std::exp(-0.3)).epsilon(1e-12));
    CHECK(refractive_index(SpeedProfile::c1, 0.2, 0.0) == doctest::Approx(1.349859).epsilon(1e-6));
    // exp(0.3 e^-1/2) = 1.199565 (the often quoted 1.199418 is off in the 4th digit)
    CHECK(refractive_index(SpeedProfile::c2, 0.0, 0.12) == doctest::Approx(1.199565).epsilon(1e-6));
    const double c2 = 1.0 / std::exp(0.3 * std::exp(-0.5));
    CHECK(c2 == doctest::Approx(0.833635).epsilon(1e-6));
    CHECK(make_speed(SpeedProfile::c2, g).speed_at(0.0, 0.12) == doctest::Approx(c2).epsilon(2e-3));
    CHECK_THROWS_AS(parse_speed_profile("c9"), ConfigError);
    CHECK_THROWS_AS(ConformalMetric(ScalarField2D(g, 0.0)), ConfigError);
  }

  TEST_CASE("curvature: flat, closed form, far field") {
    const Grid2D g(129);
    const auto flat = gaussian_curvature(make_speed(SpeedProfile::unit, g));
    CHECK(flat.max_abs() < 1e-12);
    const auto k1 = gaussian_curvature(make_speed(SpeedProfile::c1, g));
    CHECK(gutter_curvature(0.25, 0.0) == doctest::Approx(std::exp(-0.6) * 4.8));
    CHECK(k1.at(64, 64) == doctest::Approx(2.634).epsilon(5e-3));
    // the lens tails are not negligible at (0.9, 0): K = 0.19 there
    const auto k3 = make_speed(SpeedProfile::c3, g).curvature();
    CHECK(k3.evaluate(0.9, 0.0) == doctest::Approx(lens_curvature(0.9, 0.0)).epsilon(0.02));
    CHECK(std::abs(k3.evaluate(0.9, 0.0)) < 0.25);
    CHECK(std::abs(lens_curvature(0.98, 0.0)) < 0.1 * std::abs(lens_curvature(0.0, 0.0)));
    CHECK_THROWS_AS(make_speed(SpeedProfile::c1, Grid2D(24)).curvature(), ConfigError);
  }

  TEST_CASE("curvature converges at second order") {
    const double e1 = max_interior_error(65);
    const double e2 = max_interior_error(129);
    const double e3 = max_interior_error(257);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.15));
  }

  TEST_CASE("metric laplacian") {
    const Grid2D g(101);
    const auto unit = make_speed(SpeedProfile::unit, g);
    CHECK(metric_laplacian(unit, ScalarField2D(g)).max_abs() == 0.0);
    const auto quad = ScalarField2D::sample(g, [](double x, double y) { return x * x + y * y; });
    const auto lq = metric_laplacian(unit, quad);
    for (int j = 0; j < g.n(); ++j)
      for (int i = 0; i < g.n(); ++i) {
        const auto p = g.node(i, j);
        if (std::hypot(p.x, p.y) < 0.9) CHECK(lq.at(i, j) == doctest::Approx(4.0).epsilon(1e-9));
      }

    // even input under the even c1 gives even output
    const auto c1 = make_speed(SpeedProfile::c1, g);
    const auto even = ScalarField2D::sample(g, [](double x, double y) {
      return std::cos(3 * x) * std::exp(-y * y) * (1 - x * x - y * y);
    });
    const auto le = metric_laplacian(c1, even);
    double asym = 0.0;
    const int n = g.n();
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        asym = std::max(asym, std::abs(le.at(i, j) - le.at(n - 1 - i, j)));
        asym = std::max(asym, std::abs(le.at(i, j) - le.at(i, n - 1 - j)));
      }
    CHECK(asym < 1e-12 * std::max(1.0, le.max_abs()));

    // <Delta_g u, v c^-2> = <u c^-2, Delta_g v>
    const auto u = random_disk_field(g, 1), v = random_disk_field(g, 2);
    const auto lu = metric_laplacian(c1, u), lv = metric_laplacian(c1, v);
    double lhs = 0.0, rhs = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double c = c1.speed().raw()[k];
      lhs += lu.raw()[k] * v.raw()[k] / (c * c);
      rhs += u.raw()[k] / (c * c) * lv.raw()[k];
      scale += std::abs(lu.raw()[k] * v.raw()[k] / (c * c));
    }
    CHECK(std::abs(lhs - rhs) < 1e-10 * scale);
    CHECK_THROWS_AS(metric_laplacian(c1, ScalarField2D(Grid2D(64))), ConfigError);
  }

  TEST_CASE("cutoff") {
    const Grid2D g(128);
    const auto chi = make_cutoff(g, 0.7, 0.96);
    CHECK(chi.min() >= 0.0);
    CHECK(chi.max() <= 1.0);
    CHECK(chi.evaluate(0.0, 0.0) == doctest::Approx(1.0));
    CHECK(chi.evaluate(0.99, 0.0) == 0.0);
    double prev = 2.0;
    for (int k = 0; k <= 200; ++k) {
      const double r = k / 200.0;
      const double v = smooth_falloff((r - 0.7) / 0.26);
      CHECK(v <= prev);
      prev = v;
    }
    CHECK_THROWS_AS(make_cutoff(g, 0.9, 0.8), ConfigError);
    CHECK_THROWS_AS(make_cutoff(g, 0.5, 1.2), ConfigError);
  }

  TEST_CASE("field serialization") {
    const Grid2D g(20);
    const auto f = random_disk_field(g, 9);
    const auto dir = std::filesystem::temp_directory_path() / "geoxray_grid_test";
    std::filesystem::create_directories(dir);
    write_field_binary(f, dir / "f.bin");
    const auto back = read_field_binary(dir / "f.bin");
    CHECK(back.grid().n() == 20);
    CHECK(back.raw() == f.raw());
    CHECK(std::filesystem::file_size(dir / "f.bin") == 8 + 8 * g.size());
    write_field_csv(f, dir / "f.csv");
    std::ifstream in(dir / "f.csv");
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      CHECK(std::count(line.begin(), line.end(), ',') == 19);
    }
    CHECK(rows == 20);
    CHECK(std::stod(format_double(0.1)) == 0.1);
    std::filesystem::remove_all(dir);
  }
}
