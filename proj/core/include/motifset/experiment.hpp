#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "motifset/config.hpp"
#include "motifset/data.hpp"
#include "motifset/metrics.hpp"
#include "motifset/topology.hpp"

namespace motifset {

// File names inside a run directory.
inline constexpr const char* kManifestFile = "manifest.txt";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kEvolutionFile = "evolution.csv";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kScoreFile = "score.csv";
inline constexpr const char* kSweepFile = "sweep.csv";
inline constexpr const char* kCrossoverFile = "crossover.txt";

/// Reads and preprocesses the dataset named by `config.data`.
Dataset load_dataset(const ExperimentConfig& config);

/// [n_features, hidden..., n_classes]
std::vector<std::size_t> layer_sizes_for(const ExperimentConfig& config, std::size_t n_features,
                                         std::size_t n_classes);

MotifTopology topology_for(const ExperimentConfig& config, std::size_t n_features, std::size_t n_classes);

struct TrainResult {
  RunMeasurement measurement;
  std::size_t parameter_count = 0;
  std::uint64_t inference_flops = 0;
  std::filesystem::path out_dir;
};

/// Full training run. Writes metrics.csv (one flushed row per epoch),
/// evolution.csv, checkpoint.bin and manifest.txt under config.out_dir.
/// Progress lines go to `log` when given.
TrainResult run_train(const ExperimentConfig& config, std::ostream* log = nullptr);
TrainResult run_train(const ExperimentConfig& config, const Dataset& dataset, std::ostream* log = nullptr);

/// Loads the configured source and writes it as a cache container.
Dataset run_prepare(const ExperimentConfig& config, const std::filesystem::path& cache_path);

/// Platform description written to the [environment] section.
std::vector<std::pair<std::string, std::string>> environment_description();

struct ManifestSummary {
  double final_accuracy = 0.0;
  double total_time_s = 0.0;
  std::uint64_t total_flops = 0;
};

/// Writes the resolved config followed by [environment] and [result].
void write_manifest(std::ostream& os, const ExperimentConfig& config, const TrainResult& result);

/// [result] fields of a manifest; MissingFieldError if one is absent.
ManifestSummary read_manifest_summary(const std::filesystem::path& path);
ManifestSummary read_manifest_summary(std::istream& is);

/// Scores `variant` against `baseline`. The time channel is total_time_s, or
/// total_flops with use_flops. Writes score.csv into out_dir unless empty.
ScoreReport run_score(const ManifestSummary& baseline, const ManifestSummary& variant, double w_eff,
                      bool use_flops, const std::filesystem::path& out_dir = {});

/// Writes sweep.csv and crossover.txt into out_dir unless empty.
SweepResult run_sweep(const ManifestSummary& baseline, const ManifestSummary& variant, std::span<const double> grid,
                      bool use_flops, const std::filesystem::path& out_dir = {});

/// Same columns as sweep.csv, one row.
void write_score_csv(std::ostream& os, const ScoreReport& report);

}  // namespace motifset
