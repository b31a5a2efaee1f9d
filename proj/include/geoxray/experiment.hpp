#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "geoxray/metric.hpp"
#include "geoxray/phantoms.hpp"

namespace geoxray {

struct ExperimentConfig {
  std::string name = "custom";
  int n = 128;
  int n_beta = 256;
  int n_alpha = 128;
  SpeedProfile speed = SpeedProfile::c1;
  AttenuationKind attenuation = AttenuationKind::zero;
  PhantomSpec phantom{.kind = PhantomKind::zero};
  NoiseKind noise = NoiseKind::none;
  double noise_level = 0.0;
  double cutoff_r_one = 0.7;
  double cutoff_r_zero = 0.96;
  double gamma = 0.0;  // 0 selects safety / ||L||^2
  double gamma_safety = 0.9;
  int opnorm_iters = 100;
  int k_max = 101;
  int record_every = 1;
  std::set<int> snapshots{1, 101, 201};
  bool census = true;
  int locus_dirs = 180;
  double locus_dilate = 3.0;
  bool images = true;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  int threads = 0;  // 0 keeps the process default
};

/// Presets: ex1, ex2, ex3, ex4, ex5, ex_local, ex6_clean, ex6_gauss,
/// ex6_poisson, custom.
ExperimentConfig preset(std::string_view name);
const std::vector<std::string>& preset_names();

/// Applies one dotted key, e.g. ("landweber.k_max", "201").
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Line-oriented key=value text; '#' starts a comment. A leading
/// "preset=NAME" line (or any preset key) resets to that preset first.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Canonical key=value form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& cfg);

void validate(const ExperimentConfig& cfg);

/// Flat key=value record, keys in insertion order.
struct RunSummary {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  bool has(const std::string& key) const;
  std::string text() const;
};

struct RunOptions {
  bool write_files = true;
  std::ostream* log = nullptr;
};

/// Builds the operator, synthesizes data, runs Landweber and the stability
/// diagnostics. Files go to cfg.output_dir when write_files is set.
RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// 8-bit binary PGM, top row = largest y, linear map [min, max] -> [0, 255]
/// rounded half to even; a constant field maps to 0. Writes "<path>.range"
/// with the min and max.
void emit_image(const ScalarField2D& field, const std::filesystem::path& path);

/// max |a - b| / max |truth| (max |a - b| when truth is zero)
double linf_relative_error(const ScalarField2D& recon, const ScalarField2D& truth);

}  // namespace geoxray
