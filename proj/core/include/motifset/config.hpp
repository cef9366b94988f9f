#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "motifset/evolution.hpp"
#include "motifset/network.hpp"
#include "motifset/topology.hpp"

namespace motifset {

struct DataConfig {
  enum class Source { fmnist, labeled_csv, cache };

  Source source = Source::fmnist;
  std::string dir;   ///< fmnist: directory holding the four IDX files
  std::string csv;   ///< labeled_csv: path
  std::string cache; ///< cache: container written by `prepare`
  int label_column = -1;
  double test_fraction = 1.0 / 3.0;
  bool standardize = true;
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
};

struct SeedConfig {
  std::uint64_t topology = 0;
  std::uint64_t init = 0;
  std::uint64_t evolution = 0;
  std::uint64_t split = 0;
  std::uint64_t shuffle = 0;
};

/// Everything a training run depends on. Missing keys take defaults; the
/// per-component seeds default to seed + {0, 1, 2, 3, 4}.
struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 42;

  DataConfig data;

  std::vector<std::size_t> hidden = {3000, 3000, 3000};
  std::size_t motif_size = 1;
  WeightMode weight_mode = WeightMode::shared;
  OutputGranularity output_granularity = OutputGranularity::neuron;
  Activation activation = Activation::relu;
  InitScheme init = InitScheme::he_uniform;
  BlockDensitySpec density = BlockDensitySpec::erdos_renyi(0.1);
  int precision = 64;  ///< 64 or 32

  std::size_t epochs = 300;
  double learning_rate = 0.05;
  std::size_t batch_size = 64;  ///< 0 = full batch
  bool deterministic = true;

  bool evolution_enabled = true;
  EvolutionPolicy evolution;
  std::size_t evolution_period = 1;

  SeedConfig seeds;

  double w_eff = 0.1;
  double w_acc = 0.9;

  std::string out_dir = "runs/experiment";

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&);
};

/// `section.key=value` overrides applied on top of a file, later wins.
struct ConfigOverride {
  std::string key;
  std::string value;
};
ConfigOverride parse_override(const std::string& text);

/// Reads the `[section]` / `key = value` format. Sections other than the
/// known ones (e.g. [environment], [result] in a manifest) are ignored;
/// unknown keys inside known sections are rejected.
ExperimentConfig parse_config(std::istream& is, const std::vector<ConfigOverride>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<ConfigOverride>& overrides = {});
ExperimentConfig config_from_overrides(const std::vector<ConfigOverride>& overrides);

/// Fully resolved text form; parse_config(write_config(c)) == c.
void write_config(std::ostream& os, const ExperimentConfig& config);
std::string config_to_string(const ExperimentConfig& config);

}  // namespace motifset
