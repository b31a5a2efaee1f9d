#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "geoxray/geodesics.hpp"
#include "geoxray/grid.hpp"
#include "geoxray/xray.hpp"

namespace geoxray {

/// Two consecutive points p1 = gamma(t1), p2 = gamma(t2) of a conjugate chain
/// on one ray. The chain starts at the entry point t = 0.
struct ConjugatePairRecord {
  std::size_t ray_id = 0;
  double beta = 0.0;
  double alpha = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  PhasePoint p1;
  PhasePoint p2;
  // kappa(p1, v1), kappa(p2, v2), kappa(p1, -v1), kappa(p2, -v2)
  std::array<double, 4> kappa{1.0, 1.0, 1.0, 1.0};
  double bdot_ratio = 1.0;  // |b'(t2)| / |b'(t1)|
};

enum class Stability { unstable, stable };

std::string_view to_string(Stability s);

struct StabilityReport {
  ConjugatePairRecord pair;
  double det_q = 0.0;
  Stability classification = Stability::unstable;
  int multiplicity = 0;  // points in the conjugate chain of the ray
};

using Matrix2 = std::array<std::array<double, 2>, 2>;

/// exp(-int a) from p along the geodesic with initial velocity v to its exit.
double kappa_at(const ForwardOperator& op, const PhasePoint& p);

/// [[kappa(p1,v1), kappa(p2,v2)], [kappa(p1,-v1), kappa(p2,-v2)]], each entry
/// integrated along its own geodesic.
Matrix2 build_Q(const ForwardOperator& op, const ConjugatePairRecord& rec);

double determinant(const Matrix2& q);

/// (exp(-2 c0 l) - 1) exp(-c0 r): det Q for constant attenuation c0, segment
/// length l between the pair and total remaining length r to the two exits.
double det_q_constant_attenuation(double c0, double segment, double remaining);

/// Unstable when det Q >= -1e-6 * (max |entry|)^2.
Stability classify(const Matrix2& q);

struct CensusOptions {
  double dt = 0.0;  // <= 0 uses the operator's step
};

/// Every conjugate pair on every ray of op, ordered by ray index then t1.
std::vector<StabilityReport> census(const ForwardOperator& op, const CensusOptions& opts = {});

/// Number of points in each ray's conjugate chain (1 when it has none).
std::vector<int> multiplicities(const ForwardOperator& op, const CensusOptions& opts = {});

void write_census_csv(const std::vector<StabilityReport>& reports,
                      const std::filesystem::path& path);

/// All conjugate points (not only the first) of geodesics leaving p in n_dirs
/// directions.
std::vector<Point2> conjugate_cloud(const ConformalMetric& m, Point2 p, int n_dirs,
                                    double dt = 0.0);

/// 1 on nodes within radius_cells grid cells of any point, 0 elsewhere.
ScalarField2D mask_from_points(const Grid2D& grid, const std::vector<Point2>& points,
                               double radius_cells);

/// 1 where |truth| >= rel * max|truth|, grown by grow_cells to close the zero
/// crossings of oscillatory phantoms.
ScalarField2D support_region(const ScalarField2D& truth, double rel = 0.05,
                             double grow_cells = 2.0);

/// Conjugate-point cloud of source points, dilated by dilate_cells and with
/// the exclusion region removed. keep, when set, filters cloud points.
ScalarField2D locus_mask(const ConformalMetric& m, const std::vector<Point2>& sources,
                         int n_dirs, double dilate_cells, const ScalarField2D& exclude,
                         const std::function<bool(Point2)>& keep = {});

struct ArtifactMetrics {
  double amp_ratio_true = 0.0;
  double artifact_to_signal = 0.0;
};

/// amp_ratio_true = max |recon| on the truth region / max |truth|;
/// artifact_to_signal = ||recon||_mask / ||recon||_region. The truth region is
/// support_region(truth). Throws ConfigError on an empty region or mask.
ArtifactMetrics artifact_metrics(const ScalarField2D& recon, const ScalarField2D& truth,
                                 const ScalarField2D& locus_mask);

}  // namespace geoxray
