#include "geoxray/grid.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>

#include "geoxray/errors.hpp"

namespace geoxray {

Grid2D::Grid2D(int n) : n_(n), spacing_(0.0) {
  if (n < 16) throw ConfigError("grid needs at least 16 points per axis");
  spacing_ = 2.0 / (n - 1);
}

BilinearStencil bilinear_stencil(const Grid2D& grid, double x, double y) {
  const int last = grid.n() - 1;
  const double u = std::clamp((x + 1.0) / grid.spacing(), 0.0,
                              static_cast<double>(last));
  const double v = std::clamp((y + 1.0) / grid.spacing(), 0.0,
                              static_cast<double>(last));
  BilinearStencil s;
  s.i = std::min(static_cast<int>(u), last - 1);
  s.j = std::min(static_cast<int>(v), last - 1);
  s.fx = u - s.i;
  s.fy = v - s.j;
  return s;
}

ScalarField2D::ScalarField2D(Grid2D grid, double fill)
    : grid_(grid), values_(grid.size(), fill) {}

ScalarField2D::ScalarField2D(Grid2D grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw ConfigError("field value count does not match grid");
}

double ScalarField2D::evaluate(const BilinearStencil& s) const {
  const std::size_t k = grid_.index(s.i, s.j);
  const std::size_t n = static_cast<std::size_t>(grid_.n());
  return (1.0 - s.fy) * ((1.0 - s.fx) * values_[k] + s.fx * values_[k + 1]) +
         s.fy * ((1.0 - s.fx) * values_[k + n] + s.fx * values_[k + n + 1]);
}

double ScalarField2D::evaluate(double x, double y) const {
  return evaluate(bilinear_stencil(grid_, x, y));
}

double ScalarField2D::min() const {
  return *std::min_element(values_.begin(), values_.end());
}

double ScalarField2D::max() const {
  return *std::max_element(values_.begin(), values_.end());
}

double ScalarField2D::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool ScalarField2D::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

void require_same_grid(const ScalarField2D& a, const ScalarField2D& b,
                       const char* what) {
  if (!(a.grid() == b.grid()))
    throw ConfigError(std::string(what) + ": grid mismatch");
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ConfigError("truncated binary header");
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
  return v;
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw ConfigError("truncated binary body");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return std::bit_cast<double>(bits);
}

std::ofstream open_out(const std::filesystem::path& path,
                       std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

void write_matrix_binary(std::span<const double> values, std::uint32_t rows,
                         std::uint32_t cols, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::binary);
  put_u32(out, rows);
  put_u32(out, cols);
  for (double v : values) put_f64(out, v);
}

std::vector<double> read_matrix_binary(const std::filesystem::path& path,
                                       std::uint32_t& rows,
                                       std::uint32_t& cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  rows = get_u32(in);
  cols = get_u32(in);
  const std::size_t count =
      static_cast<std::size_t>(rows) * (cols == 0 ? rows : cols);
  std::vector<double> values(count);
  for (auto& v : values) v = get_f64(in);
  return values;
}

void write_field_binary(const ScalarField2D& field,
                        const std::filesystem::path& path) {
  write_matrix_binary(field.values(), static_cast<std::uint32_t>(field.grid().n()),
                      0u, path);
}

ScalarField2D read_field_binary(const std::filesystem::path& path) {
  std::uint32_t n = 0, reserved = 0;
  auto values = read_matrix_binary(path, n, reserved);
  if (reserved != 0) throw ConfigError("not a field file (reserved != 0)");
  return ScalarField2D(Grid2D(static_cast<int>(n)), std::move(values));
}

void write_matrix_csv(std::span<const double> values, std::size_t rows,
                      std::size_t cols, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << format_double(values[r * cols + c]);
    }
    out << '\n';
  }
}

void write_field_csv(const ScalarField2D& field,
                     const std::filesystem::path& path) {
  const auto n = static_cast<std::size_t>(field.grid().n());
  write_matrix_csv(field.values(), n, n, path);
}

}  // namespace geoxray
