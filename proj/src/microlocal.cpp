#include "geoxray/microlocal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "geoxray/errors.hpp"
#include "geoxray/parallel.hpp"

namespace geoxray {

std::string_view to_string(Stability s) {
  return s == Stability::stable ? "stable" : "unstable";
}

double kappa_at(const ForwardOperator& op, const PhasePoint& p) {
  ShootOptions opts;
  opts.dt = op.dt();
  opts.attenuation = &op.attenuation();
  const auto path = shoot(op.metric(), p, opts);
  return std::exp(-path.cum_atten.back());
}

namespace {

PhasePoint reversed(const PhasePoint& p) { return {p.x, {-p.v.x, -p.v.y}}; }

}  // namespace

Matrix2 build_Q(const ForwardOperator& op, const ConjugatePairRecord& rec) {
  return {{{kappa_at(op, rec.p1), kappa_at(op, rec.p2)},
           {kappa_at(op, reversed(rec.p1)), kappa_at(op, reversed(rec.p2))}}};
}

double determinant(const Matrix2& q) { return q[0][0] * q[1][1] - q[0][1] * q[1][0]; }

double det_q_constant_attenuation(double c0, double segment, double remaining) {
  return (std::exp(-2.0 * c0 * segment) - 1.0) * std::exp(-c0 * remaining);
}

Stability classify(const Matrix2& q) {
  double top = 0.0;
  for (const auto& row : q)
    for (double v : row) top = std::max(top, std::abs(v));
  return determinant(q) < -1e-6 * top * top ? Stability::stable : Stability::unstable;
}

namespace {

struct RayChain {
  GeodesicPath path;
  JacobiSolution jacobi;
};

RayChain chain_of(const ForwardOperator& op, std::size_t ray, const CensusOptions& opts) {
  ShootOptions so;
  so.dt = opts.dt > 0.0 ? opts.dt : op.dt();
  RayChain out;
  out.path = shoot(op.metric(), start_of(op.metric(), op.rays().entries[ray]), so);
  out.jacobi = jacobi(op.metric(), out.path);
  return out;
}

template <typename T, typename Fn>
std::vector<T> per_ray(std::size_t n_rays, Fn&& fn) {
  const std::size_t chunks = chunk_count(n_rays);
  std::vector<std::vector<T>> parts(chunks);
  std::vector<std::string> errors(chunks);
  parallel_chunks(n_rays, [&](std::size_t lo, std::size_t hi, std::size_t w) {
    try {
      for (std::size_t r = lo; r < hi; ++r) fn(r, parts[w]);
    } catch (const std::exception& e) {
      errors[w] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw NumericalError(e);
  std::vector<T> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

std::vector<StabilityReport> census(const ForwardOperator& op, const CensusOptions& opts) {
  return per_ray<StabilityReport>(op.rays().size(), [&](std::size_t r,
                                                        std::vector<StabilityReport>& out) {
    const auto chain = chain_of(op, r, opts);
    const auto& j = chain.jacobi;
    if (j.conjugate_times.empty()) return;
    std::vector<double> times{0.0};
    std::vector<double> bdots{1.0};
    times.insert(times.end(), j.conjugate_times.begin(), j.conjugate_times.end());
    bdots.insert(bdots.end(), j.conjugate_bdot.begin(), j.conjugate_bdot.end());
    const auto& ray = op.rays().entries[r];
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
      StabilityReport rep;
      auto& rec = rep.pair;
      rec.ray_id = r;
      rec.beta = ray.beta;
      rec.alpha = ray.alpha;
      rec.t1 = times[k];
      rec.t2 = times[k + 1];
      rec.p1 = chain.path.state_at(rec.t1);
      rec.p2 = chain.path.state_at(rec.t2);
      rec.bdot_ratio = std::abs(bdots[k + 1]) / std::abs(bdots[k]);
      const Matrix2 q = build_Q(op, rec);
      rec.kappa = {q[0][0], q[0][1], q[1][0], q[1][1]};
      rep.det_q = determinant(q);
      rep.classification = classify(q);
      rep.multiplicity = static_cast<int>(times.size());
      out.push_back(rep);
    }
  });
}

std::vector<int> multiplicities(const ForwardOperator& op, const CensusOptions& opts) {
  return per_ray<int>(op.rays().size(), [&](std::size_t r, std::vector<int>& out) {
    out.push_back(1 + static_cast<int>(chain_of(op, r, opts).jacobi.conjugate_times.size()));
  });
}

void write_census_csv(const std::vector<StabilityReport>& reports,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "ray_id,beta,alpha,t1,t2,detQ,multiplicity,bdot_ratio\n";
  for (const auto& r : reports)
    out << r.pair.ray_id << ',' << format_double(r.pair.beta) << ','
        << format_double(r.pair.alpha) << ',' << format_double(r.pair.t1) << ','
        << format_double(r.pair.t2) << ',' << format_double(r.det_q) << ',' << r.multiplicity
        << ',' << format_double(r.pair.bdot_ratio) << '\n';
}

std::vector<Point2> conjugate_cloud(const ConformalMetric& m, Point2 p, int n_dirs,
                                    double dt) {
  if (p.x * p.x + p.y * p.y >= 1.0)
    throw ConfigError("conjugate_cloud: p must lie in the open disk");
  const auto& curvature = m.curvature();
  ShootOptions opts;
  opts.dt = dt;
  std::vector<Point2> cloud;
  for (int k = 0; k < n_dirs; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / n_dirs;
    const auto path = shoot(m, make_phase_point(m, p, {std::cos(angle), std::sin(angle)}), opts);
    const auto j = jacobi(curvature, path);
    cloud.insert(cloud.end(), j.conjugate_points.begin(), j.conjugate_points.end());
  }
  return cloud;
}

ScalarField2D mask_from_points(const Grid2D& grid, const std::vector<Point2>& points,
                               double radius_cells) {
  ScalarField2D mask(grid);
  const double h = grid.spacing();
  const double r = radius_cells * h;
  const int reach = static_cast<int>(std::ceil(radius_cells)) + 1;
  for (const auto& p : points) {
    const int ci = static_cast<int>(std::lround((p.x + 1.0) / h));
    const int cj = static_cast<int>(std::lround((p.y + 1.0) / h));
    for (int j = std::max(0, cj - reach); j <= std::min(grid.n() - 1, cj + reach); ++j)
      for (int i = std::max(0, ci - reach); i <= std::min(grid.n() - 1, ci + reach); ++i) {
        const auto q = grid.node(i, j);
        if (std::hypot(q.x - p.x, q.y - p.y) <= r) mask.at(i, j) = 1.0;
      }
  }
  return mask;
}

ScalarField2D support_region(const ScalarField2D& truth, double rel, double grow_cells) {
  const Grid2D& g = truth.grid();
  const double cut = rel * truth.max_abs();
  std::vector<Point2> core;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i)
      if (std::abs(truth.at(i, j)) >= cut && cut > 0.0) core.push_back(g.node(i, j));
  return mask_from_points(g, core, grow_cells);
}

ScalarField2D locus_mask(const ConformalMetric& m, const std::vector<Point2>& sources,
                         int n_dirs, double dilate_cells, const ScalarField2D& exclude,
                         const std::function<bool(Point2)>& keep) {
  require_same_grid(m.speed(), exclude, "locus_mask");
  std::vector<Point2> cloud;
  for (const auto& p : sources)
    for (const auto& q : conjugate_cloud(m, p, n_dirs))
      if (!keep || keep(q)) cloud.push_back(q);
  ScalarField2D mask = mask_from_points(m.grid(), cloud, dilate_cells);
  for (std::size_t k = 0; k < mask.raw().size(); ++k)
    if (exclude.raw()[k] > 0.0) mask.raw()[k] = 0.0;
  return mask;
}

ArtifactMetrics artifact_metrics(const ScalarField2D& recon, const ScalarField2D& truth,
                                 const ScalarField2D& locus_mask) {
  require_same_grid(recon, truth, "artifact_metrics");
  require_same_grid(recon, locus_mask, "artifact_metrics");
  const ScalarField2D region = support_region(truth);
  const auto& r = recon.raw();
  const auto& reg = region.raw();
  const auto& mask = locus_mask.raw();
  double peak = 0.0, signal = 0.0, artifact = 0.0, region_count = 0.0, mask_sum = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (reg[k] > 0.0) {
      peak = std::max(peak, std::abs(r[k]));
      signal += r[k] * r[k];
      region_count += 1.0;
    }
    if (mask[k] < 0.0 || mask[k] > 1.0) throw ConfigError("artifact_metrics: mask outside [0,1]");
    artifact += mask[k] * r[k] * r[k];
    mask_sum += mask[k];
  }
  if (region_count == 0.0) throw ConfigError("artifact_metrics: empty truth region");
  if (mask_sum == 0.0) throw ConfigError("artifact_metrics: empty locus mask");
  ArtifactMetrics out;
  out.amp_ratio_true = peak / truth.max_abs();
  if (signal > 0.0)
    out.artifact_to_signal = std::sqrt(artifact / signal);
  else
    out.artifact_to_signal = artifact > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return out;
}

}  // namespace geoxray
