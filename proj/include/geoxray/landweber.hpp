#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "geoxray/grid.hpp"
#include "geoxray/xray.hpp"

namespace geoxray {

using Vector = std::vector<double>;

/// Linear pieces of the preconditioned Landweber step
///   f <- f - gamma X* X P X* (X f - psi),   P = chi (-Delta_g) chi,
/// on flat vectors. P must be symmetric positive semidefinite in image_dot.
struct LandweberProblem {
  std::function<Vector(const Vector&)> forward;
  std::function<Vector(const Vector&)> adjoint;
  std::function<Vector(const Vector&)> precondition;
  std::function<double(const Vector&, const Vector&)> image_dot;
  std::function<double(const Vector&, const Vector&)> data_dot;
  std::size_t image_size = 0;
};

struct LandweberConfig {
  double gamma = 0.0;
  int k_max = 1;
  int record_every = 1;
  std::set<int> snapshots;  // iterations whose iterate is kept
  double opnorm_sq = 0.0;   // when > 0, gamma * opnorm_sq < 2 is enforced
};

struct ResidualRecord {
  int k = 0;
  double residual = 0.0;                 // ||X f - psi||, ray-weighted
  double preconditioned_residual = 0.0;  // sqrt(<u, P u>), u = X*(X f - psi)
  double iterate_norm = 0.0;             // ||f||, image-weighted
};

struct LandweberState {
  Vector iterate;
  int k = 0;
  std::vector<ResidualRecord> history;
  std::map<int, Vector> snapshots;
};

/// Runs k_max steps from f = 0. Throws NumericalError naming k if the
/// iterate stops being finite.
LandweberState landweber_iterate(const LandweberProblem& problem, const Vector& psi,
                                 const LandweberConfig& cfg);

/// Problem view of a ForwardOperator with cutoff chi.
LandweberProblem make_problem(const ForwardOperator& op, const ScalarField2D& chi);

struct FieldLandweberResult {
  ScalarField2D iterate;
  LandweberState state;
  std::map<int, ScalarField2D> snapshots;
};

FieldLandweberResult landweber_run(const ForwardOperator& op, const Sinogram& psi,
                                   const ScalarField2D& chi, const LandweberConfig& cfg);

/// safety / opnorm_sq
double choose_gamma(double opnorm_sq, double safety = 0.9);

/// 1 - (1 - gamma lambda^2)^k
double filter_phi(int k, double gamma, double lambda);
/// phi_k(lambda) / lambda, continuous at 0.
double filter_g(int k, double gamma, double lambda);

void write_residual_csv(const LandweberState& state, const std::filesystem::path& path);
void write_filter_csv(const std::vector<int>& ks, double gamma, double lambda_max,
                      int samples, const std::filesystem::path& path);

}  // namespace geoxray
