#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "geoxray/geodesics.hpp"
#include "geoxray/grid.hpp"
#include "geoxray/metric.hpp"

namespace geoxray {

/// Values on a RaySet, beta-major (n_beta rows of n_alpha entries).
struct Sinogram {
  int n_beta = 0;
  int n_alpha = 0;
  std::vector<double> values;

  Sinogram() = default;
  Sinogram(int nb, int na, double fill = 0.0)
      : n_beta(nb), n_alpha(na), values(static_cast<std::size_t>(nb) * na, fill) {}

  double& operator()(int ib, int ia) { return values[static_cast<std::size_t>(ib) * n_alpha + ia]; }
  double operator()(int ib, int ia) const { return values[static_cast<std::size_t>(ib) * n_alpha + ia]; }
  double max_abs() const;
};

void write_sinogram_csv(const Sinogram& s, const std::filesystem::path& path);
void write_sinogram_binary(const Sinogram& s, const std::filesystem::path& path);
Sinogram read_sinogram_binary(const std::filesystem::path& path);

/// kappa(gamma(t)) = exp(-(A(tau) - A(t))), A the cumulative attenuation.
std::vector<double> kappa_along(const GeodesicPath& path);

/// The weighted transform Xf(ray) = int kappa f ds on a fixed ray family,
/// discretized by trapezoidal sums of bilinear samples along each geodesic.
///
/// Every ray is traced once at construction and stored as a merged sparse
/// row (node index, weight), so forward() is a gather and adjoint() is the
/// exact transpose of that gather with respect to
///   <f, g>  = sum f g w_node,  w_node = cell_area / c(node)^2,
///   <s, t>  = sum s t w_ray.
/// With c = 1 the image weight is the plain cell area.
class ForwardOperator {
 public:
  ForwardOperator(ConformalMetric metric, ScalarField2D attenuation, RaySet rays,
                  double dt = 0.0);

  const ConformalMetric& metric() const { return metric_; }
  const ScalarField2D& attenuation() const { return attenuation_; }
  const RaySet& rays() const { return rays_; }
  const Grid2D& grid() const { return metric_.grid(); }
  double dt() const { return dt_; }

  Sinogram forward(const ScalarField2D& f) const;
  ScalarField2D adjoint(const Sinogram& s) const;
  ScalarField2D normal_apply(const ScalarField2D& f) const;

  double image_dot(const ScalarField2D& f, const ScalarField2D& g) const;
  double data_dot(const Sinogram& s, const Sinogram& t) const;
  double image_norm(const ScalarField2D& f) const { return std::sqrt(image_dot(f, f)); }
  double data_norm(const Sinogram& s) const { return std::sqrt(data_dot(s, s)); }
  std::span<const double> image_weights() const { return image_weight_; }

  /// Re-traces ray k with this operator's metric, attenuation and step.
  GeodesicPath trace(std::size_t ray) const;

  std::size_t nonzeros() const { return cols_.size(); }
  double kappa_min() const { return kappa_min_; }
  double kappa_max() const { return kappa_max_; }

 private:
  void check_sinogram(const Sinogram& s, const char* what) const;

  ConformalMetric metric_;
  ScalarField2D attenuation_;
  RaySet rays_;
  double dt_;
  std::vector<double> image_weight_;
  std::vector<std::size_t> row_start_;
  std::vector<std::int32_t> cols_;
  std::vector<double> vals_;
  double kappa_min_ = 1.0;
  double kappa_max_ = 0.0;
};

ForwardOperator build_operator(const ConformalMetric& m, const ScalarField2D& a,
                               const RaySet& rays, double dt = 0.0);

/// chi * (-Delta_g) * (chi * u)
ScalarField2D apply_preconditioner(const ConformalMetric& m,
                                   const ScalarField2D& chi,
                                   const ScalarField2D& u);

/// L*L f = X*X chi (-Delta_g) chi X*X f, the operator behind the Landweber
/// step.
ScalarField2D apply_normal_preconditioned(const ForwardOperator& op,
                                          const ScalarField2D& chi,
                                          const ScalarField2D& f);

struct OpnormEstimate {
  double value = 0.0;             // estimate of ||L||^2
  std::vector<double> rayleigh;   // Rayleigh quotient per iteration
};

/// Power iteration on L*L from a fixed pseudo-random start.
OpnormEstimate estimate_opnorm(const ForwardOperator& op, const ScalarField2D& chi,
                               int iters = 100, std::uint64_t seed = 12345);

}  // namespace geoxray
