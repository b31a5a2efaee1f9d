#include "geoxray/landweber.hpp"

#include <cmath>
#include <fstream>

#include "geoxray/errors.hpp"

namespace geoxray {

namespace {

Vector subtract(const Vector& a, const Vector& b) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

}  // namespace

LandweberState landweber_iterate(const LandweberProblem& problem, const Vector& psi,
                                 const LandweberConfig& cfg) {
  if (cfg.k_max < 1) throw ConfigError("landweber: k_max must be >= 1");
  if (!(cfg.gamma > 0.0)) throw ConfigError("landweber: gamma must be > 0");
  if (cfg.record_every < 1) throw ConfigError("landweber: record_every must be >= 1");
  if (cfg.opnorm_sq > 0.0 && !(cfg.gamma * cfg.opnorm_sq < 2.0))
    throw ConfigError("landweber: gamma violates gamma * ||L||^2 < 2");

  LandweberState state;
  state.iterate.assign(problem.image_size, 0.0);
  if (cfg.snapshots.count(0)) state.snapshots[0] = state.iterate;

  auto record = [&](int k, const Vector& r, const Vector& u, const Vector& pu) {
    if (k % cfg.record_every != 0 && k != cfg.k_max) return;
    ResidualRecord rec;
    rec.k = k;
    rec.residual = std::sqrt(problem.data_dot(r, r));
    rec.preconditioned_residual = std::sqrt(std::max(0.0, problem.image_dot(u, pu)));
    rec.iterate_norm = std::sqrt(problem.image_dot(state.iterate, state.iterate));
    state.history.push_back(rec);
  };

  for (int k = 1; k <= cfg.k_max; ++k) {
    const Vector r = subtract(problem.forward(state.iterate), psi);
    const Vector u = problem.adjoint(r);
    const Vector pu = problem.precondition(u);
    record(k - 1, r, u, pu);
    const Vector step = problem.adjoint(problem.forward(pu));
    for (std::size_t i = 0; i < state.iterate.size(); ++i) {
      state.iterate[i] -= cfg.gamma * step[i];
      if (!std::isfinite(state.iterate[i]))
        throw NumericalError("landweber: non-finite iterate at k = " + std::to_string(k));
    }
    state.k = k;
    if (cfg.snapshots.count(k)) state.snapshots[k] = state.iterate;
  }
  const Vector r = subtract(problem.forward(state.iterate), psi);
  const Vector u = problem.adjoint(r);
  record(cfg.k_max, r, u, problem.precondition(u));
  return state;
}

LandweberProblem make_problem(const ForwardOperator& op, const ScalarField2D& chi) {
  require_same_grid(op.metric().speed(), chi, "landweber");
  const Grid2D grid = op.grid();
  const int nb = op.rays().n_beta, na = op.rays().n_alpha;
  LandweberProblem p;
  p.image_size = grid.size();
  p.forward = [&op, grid](const Vector& f) {
    return op.forward(ScalarField2D(grid, f)).values;
  };
  p.adjoint = [&op, nb, na](const Vector& s) {
    Sinogram sino(nb, na);
    sino.values = s;
    return op.adjoint(sino).raw();
  };
  p.precondition = [&op, &chi, grid](const Vector& u) {
    return apply_preconditioner(op.metric(), chi, ScalarField2D(grid, u)).raw();
  };
  p.image_dot = [&op](const Vector& a, const Vector& b) {
    const auto w = op.image_weights();
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) acc += a[k] * b[k] * w[k];
    return acc;
  };
  p.data_dot = [&op](const Vector& a, const Vector& b) {
    double acc = 0.0;
    const auto& rays = op.rays().entries;
    for (std::size_t k = 0; k < rays.size(); ++k) acc += a[k] * b[k] * rays[k].weight;
    return acc;
  };
  return p;
}

FieldLandweberResult landweber_run(const ForwardOperator& op, const Sinogram& psi,
                                   const ScalarField2D& chi, const LandweberConfig& cfg) {
  if (psi.n_beta != op.rays().n_beta || psi.n_alpha != op.rays().n_alpha)
    throw ConfigError("landweber: data shape does not match rayset");
  const auto problem = make_problem(op, chi);
  LandweberState state = landweber_iterate(problem, psi.values, cfg);
  FieldLandweberResult out{ScalarField2D(op.grid(), state.iterate), std::move(state), {}};
  for (auto& [k, v] : out.state.snapshots) out.snapshots.emplace(k, ScalarField2D(op.grid(), v));
  return out;
}

double choose_gamma(double opnorm_sq, double safety) {
  if (!(opnorm_sq > 0.0)) throw ConfigError("choose_gamma: operator norm must be > 0");
  if (!(safety > 0.0 && safety < 1.0)) throw ConfigError("choose_gamma: safety must be in (0,1)");
  return safety / opnorm_sq;
}

double filter_phi(int k, double gamma, double lambda) {
  return 1.0 - std::pow(1.0 - gamma * lambda * lambda, k);
}

double filter_g(int k, double gamma, double lambda) {
  if (lambda < 1e-8) return k * gamma * lambda;
  return filter_phi(k, gamma, lambda) / lambda;
}

void write_residual_csv(const LandweberState& state, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "k,residual,preconditioned_residual,iterate_norm\n";
  for (const auto& r : state.history)
    out << r.k << ',' << format_double(r.residual) << ','
        << format_double(r.preconditioned_residual) << ',' << format_double(r.iterate_norm)
        << '\n';
}

void write_filter_csv(const std::vector<int>& ks, double gamma, double lambda_max,
                      int samples, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "k,lambda,phi,g\n";
  for (int k : ks)
    for (int i = 0; i <= samples; ++i) {
      const double lambda = lambda_max * i / samples;
      out << k << ',' << format_double(lambda) << ',' << format_double(filter_phi(k, gamma, lambda))
          << ',' << format_double(filter_g(k, gamma, lambda)) << '\n';
    }
}

}  // namespace geoxray
