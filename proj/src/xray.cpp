#include "geoxray/xray.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <utility>

#include "geoxray/errors.hpp"
#include "geoxray/parallel.hpp"
#include "geoxray/power_method.hpp"

namespace geoxray {

double Sinogram::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

void write_sinogram_csv(const Sinogram& s, const std::filesystem::path& path) {
  write_matrix_csv(s.values, static_cast<std::size_t>(s.n_beta),
                   static_cast<std::size_t>(s.n_alpha), path);
}

void write_sinogram_binary(const Sinogram& s, const std::filesystem::path& path) {
  write_matrix_binary(s.values, static_cast<std::uint32_t>(s.n_beta),
                      static_cast<std::uint32_t>(s.n_alpha), path);
}

Sinogram read_sinogram_binary(const std::filesystem::path& path) {
  std::uint32_t rows = 0, cols = 0;
  auto values = read_matrix_binary(path, rows, cols);
  if (cols == 0) throw ConfigError("not a sinogram file (column count 0)");
  Sinogram s;
  s.n_beta = static_cast<int>(rows);
  s.n_alpha = static_cast<int>(cols);
  s.values = std::move(values);
  return s;
}

std::vector<double> kappa_along(const GeodesicPath& path) {
  std::vector<double> kappa(path.size());
  const double total = path.cum_atten.back();
  for (std::size_t i = 0; i < path.size(); ++i)
    kappa[i] = std::exp(-(total - path.cum_atten[i]));
  return kappa;
}

ForwardOperator::ForwardOperator(ConformalMetric metric, ScalarField2D attenuation,
                                 RaySet rays, double dt)
    : metric_(std::move(metric)),
      attenuation_(std::move(attenuation)),
      rays_(std::move(rays)),
      dt_(dt > 0.0 ? dt : default_step(metric_)) {
  require_same_grid(metric_.speed(), attenuation_, "build_operator");
  if (attenuation_.min() < 0.0) throw ConfigError("attenuation must be >= 0");
  if (!attenuation_.all_finite()) throw ConfigError("attenuation must be finite");

  const Grid2D& g = grid();
  image_weight_.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double c = metric_.speed().raw()[k];
    image_weight_[k] = g.cell_area() / (c * c);
  }

  const std::size_t n_rays = rays_.size();
  const std::size_t chunks = chunk_count(n_rays);
  struct Rows {
    std::vector<std::size_t> lengths;
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
    double kmin = 1.0, kmax = 0.0;
  };
  std::vector<Rows> parts(chunks);
  std::vector<std::string> errors(chunks);

  parallel_chunks(n_rays, [&](std::size_t lo, std::size_t hi, std::size_t w) {
    Rows& part = parts[w];
    std::vector<std::pair<std::int32_t, double>> row;
    const auto n = static_cast<std::int32_t>(g.n());
    try {
      for (std::size_t r = lo; r < hi; ++r) {
        const GeodesicPath path = trace(r);
        const auto kappa = kappa_along(path);
        row.clear();
        const std::size_t m = path.size();
        for (std::size_t i = 0; i < m; ++i) {
          const double left = i > 0 ? path.t[i] - path.t[i - 1] : 0.0;
          const double right = i + 1 < m ? path.t[i + 1] - path.t[i] : 0.0;
          const double w_sample = 0.5 * (left + right) * kappa[i];
          part.kmin = std::min(part.kmin, kappa[i]);
          part.kmax = std::max(part.kmax, kappa[i]);
          const auto s = bilinear_stencil(g, path.points[i].x.x, path.points[i].x.y);
          const auto base = static_cast<std::int32_t>(g.index(s.i, s.j));
          row.emplace_back(base, w_sample * (1 - s.fx) * (1 - s.fy));
          row.emplace_back(base + 1, w_sample * s.fx * (1 - s.fy));
          row.emplace_back(base + n, w_sample * (1 - s.fx) * s.fy);
          row.emplace_back(base + n + 1, w_sample * s.fx * s.fy);
        }
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t len = 0;
        for (std::size_t k = 0; k < row.size();) {
          std::int32_t col = row[k].first;
          double v = 0.0;
          for (; k < row.size() && row[k].first == col; ++k) v += row[k].second;
          if (v == 0.0) continue;
          part.cols.push_back(col);
          part.vals.push_back(v);
          ++len;
        }
        part.lengths.push_back(len);
      }
    } catch (const std::exception& e) {
      errors[w] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw NumericalError(e);

  row_start_.reserve(n_rays + 1);
  row_start_.push_back(0);
  for (auto& part : parts) {
    for (std::size_t len : part.lengths) row_start_.push_back(row_start_.back() + len);
    cols_.insert(cols_.end(), part.cols.begin(), part.cols.end());
    vals_.insert(vals_.end(), part.vals.begin(), part.vals.end());
    kappa_min_ = std::min(kappa_min_, part.kmin);
    kappa_max_ = std::max(kappa_max_, part.kmax);
    part = Rows{};
  }
}

GeodesicPath ForwardOperator::trace(std::size_t ray) const {
  ShootOptions opts;
  opts.dt = dt_;
  opts.attenuation = &attenuation_;
  return shoot(metric_, start_of(metric_, rays_.entries.at(ray)), opts);
}

void ForwardOperator::check_sinogram(const Sinogram& s, const char* what) const {
  if (s.n_beta != rays_.n_beta || s.n_alpha != rays_.n_alpha ||
      s.values.size() != rays_.size())
    throw ConfigError(std::string(what) + ": sinogram shape does not match rayset");
}

Sinogram ForwardOperator::forward(const ScalarField2D& f) const {
  require_same_grid(metric_.speed(), f, "forward");
  Sinogram out(rays_.n_beta, rays_.n_alpha);
  const double* fv = f.raw().data();
  parallel_chunks(rays_.size(), [&](std::size_t lo, std::size_t hi, std::size_t) {
    for (std::size_t r = lo; r < hi; ++r) {
      double acc = 0.0;
      for (std::size_t k = row_start_[r]; k < row_start_[r + 1]; ++k)
        acc += vals_[k] * fv[cols_[k]];
      out.values[r] = acc;
    }
  });
  return out;
}

ScalarField2D ForwardOperator::adjoint(const Sinogram& s) const {
  check_sinogram(s, "adjoint");
  const std::size_t n_nodes = grid().size();
  const std::size_t chunks = chunk_count(rays_.size());
  std::vector<std::vector<double>> acc(chunks);
  parallel_chunks(rays_.size(), [&](std::size_t lo, std::size_t hi, std::size_t w) {
    auto& buf = acc[w];
    buf.assign(n_nodes, 0.0);
    for (std::size_t r = lo; r < hi; ++r) {
      const double sr = s.values[r] * rays_.entries[r].weight;
      if (sr == 0.0) continue;
      for (std::size_t k = row_start_[r]; k < row_start_[r + 1]; ++k)
        buf[cols_[k]] += vals_[k] * sr;
    }
  });
  ScalarField2D out(grid());
  auto& ov = out.raw();
  for (const auto& buf : acc)
    for (std::size_t k = 0; k < n_nodes; ++k) ov[k] += buf[k];
  for (std::size_t k = 0; k < n_nodes; ++k) ov[k] /= image_weight_[k];
  return out;
}

ScalarField2D ForwardOperator::normal_apply(const ScalarField2D& f) const {
  return adjoint(forward(f));
}

double ForwardOperator::image_dot(const ScalarField2D& f, const ScalarField2D& g) const {
  require_same_grid(f, g, "image_dot");
  double acc = 0.0;
  for (std::size_t k = 0; k < image_weight_.size(); ++k)
    acc += f.raw()[k] * g.raw()[k] * image_weight_[k];
  return acc;
}

double ForwardOperator::data_dot(const Sinogram& s, const Sinogram& t) const {
  check_sinogram(s, "data_dot");
  check_sinogram(t, "data_dot");
  double acc = 0.0;
  for (std::size_t r = 0; r < rays_.size(); ++r)
    acc += s.values[r] * t.values[r] * rays_.entries[r].weight;
  return acc;
}

ForwardOperator build_operator(const ConformalMetric& m, const ScalarField2D& a,
                               const RaySet& rays, double dt) {
  return ForwardOperator(m, a, rays, dt);
}

ScalarField2D apply_preconditioner(const ConformalMetric& m, const ScalarField2D& chi,
                                   const ScalarField2D& u) {
  require_same_grid(chi, u, "apply_preconditioner");
  ScalarField2D w(u.grid());
  for (std::size_t k = 0; k < w.raw().size(); ++k) w.raw()[k] = chi.raw()[k] * u.raw()[k];
  ScalarField2D lap = metric_laplacian(m, w);
  for (std::size_t k = 0; k < lap.raw().size(); ++k) lap.raw()[k] *= -chi.raw()[k];
  return lap;
}

ScalarField2D apply_normal_preconditioned(const ForwardOperator& op,
                                          const ScalarField2D& chi,
                                          const ScalarField2D& f) {
  return op.normal_apply(apply_preconditioner(op.metric(), chi, op.normal_apply(f)));
}

OpnormEstimate estimate_opnorm(const ForwardOperator& op, const ScalarField2D& chi,
                               int iters, std::uint64_t seed) {
  if (iters < 20) throw ConfigError("estimate_opnorm needs at least 20 iterations");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  ScalarField2D x(op.grid());
  for (int j = 0; j < op.grid().n(); ++j)
    for (int i = 0; i < op.grid().n(); ++i) {
      const auto p = op.grid().node(i, j);
      if (inside_open_disk(p.x, p.y)) x.at(i, j) = unif(rng);
    }
  auto result = power_iteration(
      [&](const ScalarField2D& v) { return apply_normal_preconditioned(op, chi, v); },
      [&](const ScalarField2D& a, const ScalarField2D& b) { return op.image_dot(a, b); },
      std::move(x), iters);
  return {result.value, std::move(result.rayleigh)};
}

}  // namespace geoxray
