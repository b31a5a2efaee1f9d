#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace geoxray {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform n x n node grid covering [-1,1]^2, origin at (-1,-1).
class Grid2D {
 public:
  explicit Grid2D(int n);

  int n() const { return n_; }
  double spacing() const { return spacing_; }
  double cell_area() const { return spacing_ * spacing_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }

  double coord(int i) const { return -1.0 + i * spacing_; }
  Point2 node(int i, int j) const { return {coord(i), coord(j)}; }
  // Row-major, rows indexed by y.
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * n_ + i;
  }

  bool operator==(const Grid2D& other) const { return n_ == other.n_; }

 private:
  int n_;
  double spacing_;
};

/// Bilinear stencil of a point: lower-left node plus fractional offsets.
struct BilinearStencil {
  int i = 0;
  int j = 0;
  double fx = 0.0;
  double fy = 0.0;
};

/// Clamps to the square, so any point gets a valid stencil.
BilinearStencil bilinear_stencil(const Grid2D& grid, double x, double y);

/// A real field sampled on a Grid2D. Values are finite.
class ScalarField2D {
 public:
  explicit ScalarField2D(Grid2D grid, double fill = 0.0);
  ScalarField2D(Grid2D grid, std::vector<double> values);

  template <typename F>
  static ScalarField2D sample(Grid2D grid, F&& f) {
    ScalarField2D out(grid);
    for (int j = 0; j < grid.n(); ++j)
      for (int i = 0; i < grid.n(); ++i)
        out.values_[grid.index(i, j)] = f(grid.coord(i), grid.coord(j));
    return out;
  }

  const Grid2D& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::vector<double>& raw() { return values_; }
  const std::vector<double>& raw() const { return values_; }

  double at(int i, int j) const { return values_[grid_.index(i, j)]; }
  double& at(int i, int j) { return values_[grid_.index(i, j)]; }

  double evaluate(double x, double y) const;
  double evaluate(Point2 p) const { return evaluate(p.x, p.y); }
  double evaluate(const BilinearStencil& s) const;

  double min() const;
  double max() const;
  double max_abs() const;
  bool all_finite() const;

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

void require_same_grid(const ScalarField2D& a, const ScalarField2D& b,
                       const char* what);

// Binary layout: u32 n, u32 reserved (0), then n*n little-endian float64,
// row-major.
void write_field_binary(const ScalarField2D& field,
                        const std::filesystem::path& path);
ScalarField2D read_field_binary(const std::filesystem::path& path);
void write_field_csv(const ScalarField2D& field,
                     const std::filesystem::path& path);

// Generic row-major matrix with a (rows, cols) u32 header, float64 body.
void write_matrix_binary(std::span<const double> values, std::uint32_t rows,
                         std::uint32_t cols, const std::filesystem::path& path);
std::vector<double> read_matrix_binary(const std::filesystem::path& path,
                                       std::uint32_t& rows,
                                       std::uint32_t& cols);
void write_matrix_csv(std::span<const double> values, std::size_t rows,
                      std::size_t cols, const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace geoxray
