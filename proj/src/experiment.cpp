#include "geoxray/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "geoxray/errors.hpp"
#include "geoxray/landweber.hpp"
#include "geoxray/microlocal.hpp"
#include "geoxray/parallel.hpp"
#include "geoxray/xray.hpp"

namespace geoxray {

namespace {

constexpr double kPi = std::numbers::pi;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string quote_value(std::string_view s) { return "'" + std::string(s) + "'"; }

long long parse_integer(std::string_view key, std::string_view v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(std::string(key) + ": expected an integer, got " + quote_value(v));
  return out;
}

int parse_int(std::string_view key, std::string_view v) {
  const long long x = parse_integer(key, v);
  if (x < -2147483647LL || x > 2147483647LL)
    throw ConfigError(std::string(key) + ": value out of range");
  return static_cast<int>(x);
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(std::string(key) + ": expected a number, got " + quote_value(v));
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key) + ": expected true/false, got " + quote_value(v));
}

std::set<int> parse_int_list(std::string_view key, std::string_view v) {
  std::set<int> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.insert(parse_int(key, item));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"ex1",       "ex2",       "ex3",
                                              "ex4",       "ex5",       "ex_local",
                                              "ex6_clean", "ex6_gauss", "ex6_poisson",
                                              "custom"};
  return names;
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.name = std::string(name);
  const PhantomSpec coherent_left = PhantomSpec::coherent({-0.7, 0.0}, kPi / 24.0);
  PhantomSpec coherent_center = PhantomSpec::coherent({0.0, 0.0}, kPi / 24.0);
  coherent_center.kind = PhantomKind::coherent_positive;

  if (name == "ex1" || name == "ex2") {
    c.phantom = PhantomSpec::ellipse();
    c.attenuation = name == "ex1" ? AttenuationKind::zero : AttenuationKind::gaussian_bump;
  } else if (name == "ex3") {
    c.speed = SpeedProfile::c2;
    c.phantom = PhantomSpec::coherent({0.05, 0.1}, 0.0);
  } else if (name == "ex4") {
    c.phantom = coherent_left;
  } else if (name == "ex5") {
    c.phantom = coherent_left;
    c.attenuation = AttenuationKind::gaussian_bump;
    c.k_max = 201;
  } else if (name == "ex_local") {
    c.speed = SpeedProfile::c3;
    c.attenuation = AttenuationKind::disk2;
    c.phantom = PhantomSpec::bump({-0.75, 0.0});
  } else if (name == "ex6_clean") {
    c.phantom = coherent_center;
    c.k_max = 201;
  } else if (name == "ex6_gauss") {
    c.phantom = coherent_center;
    c.noise = NoiseKind::gaussian;
    c.noise_level = 0.17;
  } else if (name == "ex6_poisson") {
    c.phantom = coherent_center;
    c.noise = NoiseKind::poisson;
    c.noise_level = 10.0;
  } else if (name != "custom") {
    throw ConfigError("unknown preset " + quote_value(name));
  }
  c.output_dir = std::filesystem::path("out") / c.name;
  return c;
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  auto& p = c.phantom;
  if (key == "preset") {
    c = preset(v);
  } else if (key == "name") {
    if (v.empty()) throw ConfigError("name must not be empty");
    c.name = std::string(v);
  } else if (key == "grid.n") {
    c.n = parse_int(key, v);
  } else if (key == "rays.n_beta") {
    c.n_beta = parse_int(key, v);
  } else if (key == "rays.n_alpha") {
    c.n_alpha = parse_int(key, v);
  } else if (key == "speed") {
    c.speed = parse_speed_profile(v);
  } else if (key == "attenuation") {
    c.attenuation = parse_attenuation_kind(v);
  } else if (key == "phantom.kind") {
    p.kind = parse_phantom_kind(v);
  } else if (key == "phantom.center_x") {
    p.center.x = parse_real(key, v);
  } else if (key == "phantom.center_y") {
    p.center.y = parse_real(key, v);
  } else if (key == "phantom.rotation") {
    p.rotation = parse_real(key, v);
  } else if (key == "phantom.amplitude") {
    p.amplitude = parse_real(key, v);
  } else if (key == "phantom.sigma") {
    p.sigma = parse_real(key, v);
  } else if (key == "phantom.semi_x") {
    p.semi_x = parse_real(key, v);
  } else if (key == "phantom.semi_y") {
    p.semi_y = parse_real(key, v);
  } else if (key == "phantom.smoothing") {
    p.smoothing = parse_real(key, v);
  } else if (key == "phantom.width") {
    p.width = parse_real(key, v);
  } else if (key == "noise.kind") {
    c.noise = parse_noise_kind(v);
  } else if (key == "noise.level") {
    c.noise_level = parse_real(key, v);
  } else if (key == "cutoff.r_one") {
    c.cutoff_r_one = parse_real(key, v);
  } else if (key == "cutoff.r_zero") {
    c.cutoff_r_zero = parse_real(key, v);
  } else if (key == "landweber.gamma") {
    c.gamma = v == "auto" ? 0.0 : parse_real(key, v);
  } else if (key == "landweber.safety") {
    c.gamma_safety = parse_real(key, v);
  } else if (key == "landweber.opnorm_iters") {
    c.opnorm_iters = parse_int(key, v);
  } else if (key == "landweber.k_max") {
    c.k_max = parse_int(key, v);
  } else if (key == "landweber.record_every") {
    c.record_every = parse_int(key, v);
  } else if (key == "landweber.snapshots") {
    c.snapshots = parse_int_list(key, v);
  } else if (key == "diagnostics.census") {
    c.census = parse_bool(key, v);
  } else if (key == "diagnostics.locus_dirs") {
    c.locus_dirs = parse_int(key, v);
  } else if (key == "diagnostics.locus_dilate") {
    c.locus_dilate = parse_real(key, v);
  } else if (key == "output.dir") {
    if (v.empty()) throw ConfigError("output.dir must not be empty");
    c.output_dir = std::filesystem::path(std::string(v));
  } else if (key == "output.images") {
    c.images = parse_bool(key, v);
  } else if (key == "seed") {
    const long long s = parse_integer(key, v);
    if (s < 0) throw ConfigError("seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "threads") {
    c.threads = parse_int(key, v);
  } else {
    throw ConfigError("unknown config key " + quote_value(key));
  }
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const auto key = trim(s.substr(0, eq));
    try {
      apply_setting(base, key, s.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in, std::move(base));
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto& p = c.phantom;
  out << "name=" << c.name << '\n'
      << "grid.n=" << c.n << '\n'
      << "rays.n_beta=" << c.n_beta << '\n'
      << "rays.n_alpha=" << c.n_alpha << '\n'
      << "speed=" << to_string(c.speed) << '\n'
      << "attenuation=" << to_string(c.attenuation) << '\n'
      << "phantom.kind=" << to_string(p.kind) << '\n'
      << "phantom.center_x=" << format_double(p.center.x) << '\n'
      << "phantom.center_y=" << format_double(p.center.y) << '\n'
      << "phantom.rotation=" << format_double(p.rotation) << '\n'
      << "phantom.amplitude=" << format_double(p.amplitude) << '\n'
      << "phantom.sigma=" << format_double(p.sigma) << '\n'
      << "phantom.semi_x=" << format_double(p.semi_x) << '\n'
      << "phantom.semi_y=" << format_double(p.semi_y) << '\n'
      << "phantom.smoothing=" << format_double(p.smoothing) << '\n'
      << "phantom.width=" << format_double(p.width) << '\n'
      << "noise.kind=" << to_string(c.noise) << '\n'
      << "noise.level=" << format_double(c.noise_level) << '\n'
      << "cutoff.r_one=" << format_double(c.cutoff_r_one) << '\n'
      << "cutoff.r_zero=" << format_double(c.cutoff_r_zero) << '\n'
      << "landweber.gamma=" << (c.gamma > 0.0 ? format_double(c.gamma) : "auto") << '\n'
      << "landweber.safety=" << format_double(c.gamma_safety) << '\n'
      << "landweber.opnorm_iters=" << c.opnorm_iters << '\n'
      << "landweber.k_max=" << c.k_max << '\n'
      << "landweber.record_every=" << c.record_every << '\n'
      << "landweber.snapshots=";
  bool first = true;
  for (int k : c.snapshots) {
    out << (first ? "" : ",") << k;
    first = false;
  }
  out << '\n'
      << "diagnostics.census=" << (c.census ? "true" : "false") << '\n'
      << "diagnostics.locus_dirs=" << c.locus_dirs << '\n'
      << "diagnostics.locus_dilate=" << format_double(c.locus_dilate) << '\n'
      << "output.dir=" << c.output_dir.string() << '\n'
      << "output.images=" << (c.images ? "true" : "false") << '\n'
      << "seed=" << c.seed << '\n'
      << "threads=" << c.threads << '\n';
  return out.str();
}

void validate(const ExperimentConfig& c) {
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), c.name) == names.end())
    throw ConfigError("experiment name must be one of the presets, got " + quote_value(c.name));
  if (c.n < 16) throw ConfigError("grid.n must be >= 16");
  if (c.n_beta < 8 || c.n_alpha < 8) throw ConfigError("rays.n_beta and rays.n_alpha must be >= 8");
  if (c.k_max < 1) throw ConfigError("landweber.k_max must be >= 1");
  if (c.record_every < 1) throw ConfigError("landweber.record_every must be >= 1");
  if (c.opnorm_iters < 20) throw ConfigError("landweber.opnorm_iters must be >= 20");
  if (c.gamma < 0.0) throw ConfigError("landweber.gamma must be > 0 or auto");
  if (!(c.gamma_safety > 0.0 && c.gamma_safety < 1.0))
    throw ConfigError("landweber.safety must be in (0,1)");
  if (!(c.cutoff_r_one > 0.0 && c.cutoff_r_one < c.cutoff_r_zero && c.cutoff_r_zero <= 1.0))
    throw ConfigError("cutoff radii need 0 < r_one < r_zero <= 1");
  if (c.noise_level < 0.0) throw ConfigError("noise.level must be >= 0");
  if (c.noise == NoiseKind::poisson && c.noise_level <= 0.0)
    throw ConfigError("noise.level is the Poisson peak and must be > 0");
  if (c.locus_dirs < 8) throw ConfigError("diagnostics.locus_dirs must be >= 8");
  if (c.locus_dilate < 0.0) throw ConfigError("diagnostics.locus_dilate must be >= 0");
  if (c.threads < 0) throw ConfigError("threads must be >= 0");
  const auto& p = c.phantom;
  if (p.sigma <= 0.0 || p.width <= 0.0 || p.semi_x <= 0.0 || p.semi_y <= 0.0 || p.smoothing <= 0.0)
    throw ConfigError("phantom lengths must be > 0");
}

void RunSummary::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries)
    if (k == key) {
      v = value;
      return;
    }
  entries.emplace_back(key, value);
}

void RunSummary::set(const std::string& key, double value) { set(key, format_double(value)); }

void RunSummary::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

const std::string& RunSummary::get(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return v;
  throw std::out_of_range("summary has no key " + key);
}

double RunSummary::number(const std::string& key) const { return std::stod(get(key)); }

bool RunSummary::has(const std::string& key) const {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.first == key; });
}

std::string RunSummary::text() const {
  std::string out;
  for (const auto& [k, v] : entries) out += k + "=" + v + "\n";
  return out;
}

void emit_image(const ScalarField2D& field, const std::filesystem::path& path) {
  if (!field.all_finite()) throw NumericalError("emit_image: field has non-finite values");
  const int n = field.grid().n();
  const double lo = field.min(), hi = field.max();
  std::string pixels(static_cast<std::size_t>(n) * n, '\0');
  if (hi > lo) {
    const double scale = 255.0 / (hi - lo);
    std::size_t k = 0;
    for (int j = n - 1; j >= 0; --j)
      for (int i = 0; i < n; ++i) {
        // nearbyint under the default rounding mode rounds half to even.
        const double v = std::nearbyint((field.at(i, j) - lo) * scale);
        pixels[k++] = static_cast<char>(static_cast<unsigned char>(std::clamp(v, 0.0, 255.0)));
      }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "P5\n" << n << ' ' << n << "\n255\n";
  out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());

  std::ofstream side(path.string() + ".range");
  if (!side) throw std::runtime_error("cannot open " + path.string() + ".range");
  side << "min=" << format_double(lo) << "\nmax=" << format_double(hi) << '\n';
}

double linf_relative_error(const ScalarField2D& recon, const ScalarField2D& truth) {
  require_same_grid(recon, truth, "linf_relative_error");
  double err = 0.0;
  for (std::size_t k = 0; k < recon.raw().size(); ++k)
    err = std::max(err, std::abs(recon.raw()[k] - truth.raw()[k]));
  const double scale = truth.max_abs();
  return scale > 0.0 ? err / scale : err;
}

namespace {

using Clock = std::chrono::steady_clock;

class StageLog {
 public:
  explicit StageLog(std::ostream* out) : out_(out), start_(Clock::now()) {}
  void operator()(const std::string& what) {
    if (!out_) return;
    const double s = std::chrono::duration<double>(Clock::now() - start_).count();
    *out_ << "[" << format_double(std::round(s * 100.0) / 100.0) << "s] " << what << '\n';
  }

 private:
  std::ostream* out_;
  Clock::time_point start_;
};

// Regular subsample of the truth core, at most max_points points.
std::vector<Point2> locus_sources(const ScalarField2D& truth, std::size_t max_points) {
  const ScalarField2D core = support_region(truth, 0.2, 0.0);
  const Grid2D& g = truth.grid();
  for (int stride = 1;; ++stride) {
    std::vector<Point2> pts;
    for (int j = 0; j < g.n(); j += stride)
      for (int i = 0; i < g.n(); i += stride)
        if (core.at(i, j) > 0.0) {
          const auto p = g.node(i, j);
          if (p.x * p.x + p.y * p.y < 0.98) pts.push_back(p);
        }
    if (pts.size() <= max_points) return pts;
  }
}

double masked_energy(const ScalarField2D& f, const ScalarField2D& mask) {
  double e = 0.0;
  for (std::size_t k = 0; k < f.raw().size(); ++k) e += mask.raw()[k] * f.raw()[k] * f.raw()[k];
  return e * f.grid().cell_area();
}

std::size_t count_cells(const ScalarField2D& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.raw().begin(), mask.raw().end(), [](double v) { return v > 0.0; }));
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  if (cfg.threads > 0) set_thread_count(cfg.threads);
  StageLog log(opts.log);
  const bool files = opts.write_files;
  const auto& dir = cfg.output_dir;
  if (files) {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "config.txt") << to_config_text(cfg);
  }

  const Grid2D grid(cfg.n);
  const ConformalMetric metric = make_speed(cfg.speed, grid);
  const ScalarField2D atten = make_attenuation(cfg.attenuation, grid);
  const RaySet rays = make_rayset(cfg.n_beta, cfg.n_alpha);
  const ForwardOperator op = build_operator(metric, atten, rays);
  log("operator built, " + std::to_string(op.nonzeros()) + " nonzeros");

  const ScalarField2D chi = make_cutoff(grid, cfg.cutoff_r_one, cfg.cutoff_r_zero);
  const ScalarField2D truth = make_phantom(cfg.phantom, grid);
  if (auto warn = resolution_warning(cfg.phantom, grid); warn && opts.log)
    *opts.log << "warning: " << *warn << '\n';

  const Sinogram clean = op.forward(truth);
  const Sinogram data = apply_noise(clean, NoiseSpec{cfg.noise, cfg.noise_level, cfg.seed});

  const OpnormEstimate est = estimate_opnorm(op, chi, cfg.opnorm_iters, cfg.seed);
  if (!(est.value > 0.0)) throw NumericalError("operator norm estimate is zero");
  const double gamma = cfg.gamma > 0.0 ? cfg.gamma : choose_gamma(est.value, cfg.gamma_safety);
  log("||L||^2 = " + format_double(est.value) + ", gamma = " + format_double(gamma));

  LandweberConfig lw;
  lw.gamma = gamma;
  lw.k_max = cfg.k_max;
  lw.record_every = cfg.record_every;
  lw.opnorm_sq = est.value;
  for (int k : cfg.snapshots)
    if (k >= 1 && k <= cfg.k_max) lw.snapshots.insert(k);
  lw.snapshots.insert(cfg.k_max);
  const FieldLandweberResult result = landweber_run(op, data, chi, lw);
  log("landweber finished at k = " + std::to_string(result.state.k));

  RunSummary s;
  s.set("name", cfg.name);
  s.set("n", static_cast<long long>(cfg.n));
  s.set("n_beta", static_cast<long long>(cfg.n_beta));
  s.set("n_alpha", static_cast<long long>(cfg.n_alpha));
  s.set("speed", std::string(to_string(cfg.speed)));
  s.set("attenuation", std::string(to_string(cfg.attenuation)));
  s.set("phantom", std::string(to_string(cfg.phantom.kind)));
  s.set("noise", std::string(to_string(cfg.noise)));
  s.set("noise_level", cfg.noise_level);
  s.set("seed", std::to_string(cfg.seed));
  s.set("k_max", static_cast<long long>(cfg.k_max));
  s.set("opnorm_sq", est.value);
  s.set("gamma", gamma);
  s.set("kappa_min", op.kappa_min());
  const auto& last = result.state.history.back();
  s.set("residual_final", last.residual);
  s.set("preconditioned_residual_final", last.preconditioned_residual);
  s.set("iterate_norm_final", last.iterate_norm);
  s.set("linf_rel_error", linf_relative_error(result.iterate, truth));

  const bool has_truth = truth.max_abs() > 0.0;
  ScalarField2D mask(grid), upper(grid), lower(grid);
  if (has_truth) {
    const ScalarField2D region = support_region(truth);
    mask = locus_mask(metric, locus_sources(truth, 64), cfg.locus_dirs, cfg.locus_dilate, region);
    for (int j = 0; j < grid.n(); ++j)
      for (int i = 0; i < grid.n(); ++i) {
        const bool up = grid.coord(j) >= 0.0;
        (up ? upper : lower).at(i, j) = mask.at(i, j);
      }
    log("locus mask: " + std::to_string(count_cells(mask)) + " cells");
  }
  s.set("locus_mask_cells", static_cast<long long>(count_cells(mask)));

  auto metrics_for = [&](const ScalarField2D& f, const std::string& suffix) {
    s.set("linf_rel_error" + suffix, linf_relative_error(f, truth));
    s.set("iterate_norm" + suffix, op.image_norm(f));
    if (!has_truth) {
      s.set("amp_ratio_true" + suffix, 0.0);
      s.set("artifact_to_signal" + suffix, 0.0);
      return;
    }
    const double a_up = masked_energy(f, upper), a_low = masked_energy(f, lower);
    s.set("artifact_energy_upper" + suffix, a_up);
    s.set("artifact_energy_lower" + suffix, a_low);
    if (count_cells(mask) == 0) {
      const ScalarField2D region = support_region(truth);
      double peak = 0.0;
      for (std::size_t k = 0; k < f.raw().size(); ++k)
        if (region.raw()[k] > 0.0) peak = std::max(peak, std::abs(f.raw()[k]));
      s.set("amp_ratio_true" + suffix, peak / truth.max_abs());
      s.set("artifact_to_signal" + suffix, 0.0);
      return;
    }
    const ArtifactMetrics m = artifact_metrics(f, truth, mask);
    s.set("amp_ratio_true" + suffix, m.amp_ratio_true);
    s.set("artifact_to_signal" + suffix, m.artifact_to_signal);
  };
  for (const auto& [k, f] : result.snapshots) metrics_for(f, "_k" + std::to_string(k));
  metrics_for(result.iterate, "");

  if (cfg.census) {
    const auto reports = census(op);
    int max_mult = 1;
    long long stable = 0;
    for (const auto& r : reports) {
      max_mult = std::max(max_mult, r.multiplicity);
      if (r.classification == Stability::stable) ++stable;
    }
    s.set("census_pairs", static_cast<long long>(reports.size()));
    s.set("census_stable_pairs", stable);
    s.set("census_max_multiplicity", static_cast<long long>(max_mult));
    if (files) write_census_csv(reports, dir / "census.csv");
    log("census: " + std::to_string(reports.size()) + " pairs");
  }

  if (files) {
    write_sinogram_csv(data, dir / "sinogram.csv");
    write_sinogram_binary(data, dir / "sinogram.bin");
    write_residual_csv(result.state, dir / "residuals.csv");
    write_field_binary(result.iterate, dir / "recon.bin");
    if (cfg.images) {
      emit_image(truth, dir / "truth.pgm");
      emit_image(mask, dir / "locus_mask.pgm");
      for (const auto& [k, f] : result.snapshots)
        emit_image(f, dir / ("recon_k" + std::to_string(k) + ".pgm"));
    }
    std::ofstream(dir / "summary.txt") << s.text();
  }
  return s;
}

}  // namespace geoxray
