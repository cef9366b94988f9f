#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motifset/network.hpp"
#include "motifset/topology.hpp"

namespace motifset {

/// Efficiency/accuracy trade-off of a variant run against a baseline run.
///   r_r = (t_base - t) / t_base
///   a_r = (a_base - a) / a_base
///   s   = w_eff * r_r + w_acc * (1 - a_r)
/// Any consistent unit works for the time channel (seconds, flops).
struct ScoreReport {
  double t_base = 0.0, t = 0.0;
  double a_base = 0.0, a = 0.0;
  double w_eff = 0.1, w_acc = 0.9;
  double r_r = 0.0, a_r = 0.0, s = 0.0;

  /// Score of the baseline against itself at the same weights (= w_acc).
  double baseline_score() const noexcept { return w_acc; }
};

/// No clamping: r_r < 0 when the variant is slower.
ScoreReport comprehensive_score(double t_base, double t, double a_base, double a, double w_eff, double w_acc);

struct SweepResult {
  std::vector<ScoreReport> points;
  /// First grid w_eff at which the variant score exceeds the baseline score.
  std::optional<double> grid_crossover;
  /// Closed form a_r / (a_r + r_r); the variant wins for every larger w_eff
  /// when r_r > 0 and a_r > 0.
  std::optional<double> analytic_crossover;
};

SweepResult tradeoff_sweep(double t_base, double t, double a_base, double a, std::span<const double> grid);

/// 0, step, 2*step, ..., 1 (inclusive, computed as i * step).
std::vector<double> uniform_grid(double step = 0.01);

/// Writes `w_eff,w_acc,r_r,a_r,s_variant,s_baseline` rows with header.
void write_sweep_csv(std::ostream& os, std::span<const ScoreReport> points);

/// Analytic multiply-accumulate counts for one sample.
///
/// Per layer with A active blocks, motif m, fan-in n_in and fan-out n_out:
///   shared, m == 1 :  forward A
///   shared, m  > 1 :  forward A + n_in            (motif pooling of the input)
///   independent    :  forward A * m^2
/// backward = weight gradient (same as forward) + delta pooling n_out (shared,
/// m > 1) + delta propagation A (or A * m^2) for every layer but the first.
struct FlopCount {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0;
  std::uint64_t total() const noexcept { return forward + backward; }
};

FlopCount layer_flops(const LayerShape& shape, std::size_t active_blocks, WeightMode mode, bool propagate);
FlopCount sample_flops(const MotifTopology& topology, WeightMode mode);
/// Training flops for one epoch over `samples` rows.
std::uint64_t flop_counter(const MotifTopology& topology, WeightMode mode, std::size_t samples);
/// Inference flops (forward only) for `samples` rows.
std::uint64_t inference_flops(const MotifTopology& topology, WeightMode mode, std::size_t samples);

/// Distinct trainable weights per layer (biases excluded).
std::vector<std::size_t> distinct_parameters(const MotifTopology& topology, WeightMode mode);

struct EpochRecord {
  std::size_t epoch = 0;  ///< 1-based
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  double epoch_time_s = 0.0;
  std::uint64_t flops = 0;
};

struct RunMeasurement {
  double total_time_s = 0.0;
  std::vector<double> per_epoch_time_s;
  std::vector<EpochRecord> epochs;
  double final_accuracy = 0.0;
  std::uint64_t flop_count = 0;
};

void record_epoch(RunMeasurement& run, double epoch_time_s, double train_loss, double accuracy,
                  std::uint64_t flops = 0);

inline constexpr std::string_view kMetricsCsvHeader = "epoch,train_loss,test_accuracy,epoch_time_s,flops";

/// 17 significant digits, so parsing the text gives back the same doubles.
std::string format_double(double v);
std::string metrics_csv_row(const EpochRecord& r);
void write_metrics_csv(std::ostream& os, const RunMeasurement& run);
RunMeasurement read_metrics_csv(std::istream& is);

}  // namespace motifset
