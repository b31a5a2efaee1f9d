#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "geoxray/errors.hpp"
#include "geoxray/experiment.hpp"
#include "geoxray/geodesics.hpp"
#include "geoxray/landweber.hpp"
#include "geoxray/microlocal.hpp"
#include "geoxray/parallel.hpp"
#include "geoxray/phantoms.hpp"

namespace gx = geoxray;

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericalExit = 3;

struct RunArgs {
  std::string config;
  std::string preset;
  int n = 0;
  int kmax = 0;
  long long seed = -1;
  std::string out;
  int threads = 0;
  bool quiet = false;
};

int run_command(const RunArgs& a) {
  gx::ExperimentConfig cfg = gx::preset(a.preset.empty() ? "custom" : a.preset);
  if (!a.config.empty()) cfg = gx::load_config(a.config, cfg);
  if (a.n > 0) cfg.n = a.n;
  if (a.kmax > 0) cfg.k_max = a.kmax;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.threads > 0) cfg.threads = a.threads;
  gx::RunOptions opts;
  opts.log = a.quiet ? nullptr : &std::cerr;
  const auto summary = gx::run_experiment(cfg, opts);
  std::cout << summary.text();
  return 0;
}

struct CensusArgs {
  std::string speed = "c1";
  std::string attenuation = "zero";
  int n = 128;
  int n_beta = 256;
  int n_alpha = 128;
  std::string out = "census.csv";
};

int census_command(const CensusArgs& a) {
  const gx::Grid2D grid(a.n);
  const auto op = gx::build_operator(gx::make_speed(gx::parse_speed_profile(a.speed), grid),
                                     gx::make_attenuation(gx::parse_attenuation_kind(a.attenuation), grid),
                                     gx::make_rayset(a.n_beta, a.n_alpha));
  const auto reports = gx::census(op);
  gx::write_census_csv(reports, a.out);
  int max_mult = 1;
  long long stable = 0;
  for (const auto& r : reports) {
    max_mult = std::max(max_mult, r.multiplicity);
    if (r.classification == gx::Stability::stable) ++stable;
  }
  std::cout << "pairs=" << reports.size() << "\nstable_pairs=" << stable
            << "\nmax_multiplicity=" << max_mult << '\n';
  return 0;
}

struct FilterArgs {
  std::vector<int> ks{1, 5, 20, 40, 80};
  double gamma = 1.0;
  double lambda_max = 1.0;
  int samples = 200;
  std::string out = "filters.csv";
};

int filters_command(const FilterArgs& a) {
  if (a.samples < 1) throw gx::ConfigError("--samples must be >= 1");
  if (!(a.gamma > 0.0)) throw gx::ConfigError("--gamma must be > 0");
  if (!(a.lambda_max > 0.0)) throw gx::ConfigError("--lambda-max must be > 0");
  for (int k : a.ks)
    if (k < 1) throw gx::ConfigError("--k values must be >= 1");
  gx::write_filter_csv(a.ks, a.gamma, a.lambda_max, a.samples, a.out);
  return 0;
}

struct GeodesicArgs {
  std::string speed = "c1";
  int n = 128;
  double x = -0.7;
  double y = 0.0;
  double angle = 0.0;
  int locus = 0;
  std::string out = "geodesic.csv";
};

int geodesics_command(const GeodesicArgs& a) {
  const gx::Grid2D grid(a.n);
  const auto m = gx::make_speed(gx::parse_speed_profile(a.speed), grid);
  if (a.locus > 0) {
    gx::write_locus_csv(gx::conjugate_locus(m, {a.x, a.y}, a.locus), a.out);
    return 0;
  }
  const auto path =
      gx::shoot(m, gx::make_phase_point(m, {a.x, a.y}, {std::cos(a.angle), std::sin(a.angle)}));
  gx::write_path_csv(path, a.out);
  const auto j = gx::jacobi(m, path);
  std::cout << "tau=" << gx::format_double(path.tau) << '\n';
  for (std::size_t k = 0; k < j.conjugate_times.size(); ++k)
    std::cout << "conjugate t=" << gx::format_double(j.conjugate_times[k])
              << " x=" << gx::format_double(j.conjugate_points[k].x)
              << " y=" << gx::format_double(j.conjugate_points[k].y) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attenuated geodesic X-ray transform: experiments and diagnostics"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run an experiment preset or config file");
  run_cmd->add_option("--config", run.config, "key=value config file");
  run_cmd->add_option("--preset", run.preset, "preset name (ex1 ... ex6_poisson, custom)");
  run_cmd->add_option("--n", run.n, "grid points per axis");
  run_cmd->add_option("--kmax", run.kmax, "Landweber iterations");
  run_cmd->add_option("--seed", run.seed, "noise and power-method seed");
  run_cmd->add_option("--out", run.out, "output directory");
  run_cmd->add_flag("--quiet", run.quiet, "no progress log on stderr");

  CensusArgs cen;
  auto* cen_cmd = app.add_subcommand("census", "conjugate-pair census with det Q classification");
  cen_cmd->add_option("--speed", cen.speed, "unit, c1, c2, c3");
  cen_cmd->add_option("--attenuation", cen.attenuation, "zero, gaussian_bump, disk2");
  cen_cmd->add_option("--n", cen.n, "grid points per axis");
  cen_cmd->add_option("--nbeta", cen.n_beta, "boundary angles");
  cen_cmd->add_option("--nalpha", cen.n_alpha, "incidence angles");
  cen_cmd->add_option("--out", cen.out, "census CSV path");

  FilterArgs fil;
  auto* fil_cmd = app.add_subcommand("filters", "spectral filter curves phi_k and g_k");
  fil_cmd->add_option("--k", fil.ks, "iteration counts");
  fil_cmd->add_option("--gamma", fil.gamma, "step size");
  fil_cmd->add_option("--lambda-max", fil.lambda_max, "largest singular value sampled");
  fil_cmd->add_option("--samples", fil.samples, "samples per curve");
  fil_cmd->add_option("--out", fil.out, "CSV path");

  GeodesicArgs geo;
  auto* geo_cmd = app.add_subcommand("geodesics", "trace one geodesic or a conjugate locus");
  geo_cmd->add_option("--speed", geo.speed, "unit, c1, c2, c3");
  geo_cmd->add_option("--n", geo.n, "grid points per axis");
  geo_cmd->add_option("--x", geo.x, "start x");
  geo_cmd->add_option("--y", geo.y, "start y");
  geo_cmd->add_option("--angle", geo.angle, "initial direction in radians");
  geo_cmd->add_option("--locus", geo.locus, "directions for the conjugate locus of (x, y)");
  geo_cmd->add_option("--out", geo.out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (threads > 0) gx::set_thread_count(threads);
    if (*run_cmd) return run_command(run);
    if (*cen_cmd) return census_command(cen);
    if (*fil_cmd) return filters_command(fil);
    if (*geo_cmd) return geodesics_command(geo);
  } catch (const gx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const gx::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
