#include "motifset/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "motifset/errors.hpp"

namespace motifset {

ScoreReport comprehensive_score(double t_base, double t, double a_base, double a, double w_eff, double w_acc) {
  if (!(t_base > 0.0)) throw NonPositiveBaselineError("baseline time must be positive");
  if (!(a_base > 0.0)) throw NonPositiveBaselineError("baseline accuracy must be positive");
  if (w_eff < 0.0 || w_acc < 0.0 || std::abs(w_eff + w_acc - 1.0) > 1e-12) {
    throw WeightSumError("weights must be non-negative and sum to 1");
  }
  ScoreReport r;
  r.t_base = t_base;
  r.t = t;
  r.a_base = a_base;
  r.a = a;
  r.w_eff = w_eff;
  r.w_acc = w_acc;
  r.r_r = (t_base - t) / t_base;
  r.a_r = (a_base - a) / a_base;
  r.s = w_eff * r.r_r + w_acc * (1.0 - r.a_r);
  return r;
}

SweepResult tradeoff_sweep(double t_base, double t, double a_base, double a, std::span<const double> grid) {
  SweepResult out;
  out.points.reserve(grid.size());
  for (const double w : grid) {
    if (w < 0.0 || w > 1.0) throw WeightSumError("grid value outside [0, 1]");
    out.points.push_back(comprehensive_score(t_base, t, a_base, a, w, 1.0 - w));
  }
  for (const auto& p : out.points) {
    if (p.s > p.baseline_score()) {
      out.grid_crossover = p.w_eff;
      break;
    }
  }
  if (!out.points.empty()) {
    const double r_r = out.points.front().r_r;
    const double a_r = out.points.front().a_r;
    if (r_r > 0.0) out.analytic_crossover = a_r <= 0.0 ? 0.0 : a_r / (a_r + r_r);
  }
  return out;
}

std::vector<double> uniform_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ConfigError("grid step must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(std::llround(1.0 / step));
  std::vector<double> g;
  g.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g.push_back(std::min(1.0, static_cast<double>(i) * step));
  return g;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_sweep_csv(std::ostream& os, std::span<const ScoreReport> points) {
  os << "w_eff,w_acc,r_r,a_r,s_variant,s_baseline\n";
  for (const auto& p : points) {
    os << format_double(p.w_eff) << ',' << format_double(p.w_acc) << ',' << format_double(p.r_r) << ','
       << format_double(p.a_r) << ',' << format_double(p.s) << ',' << format_double(p.baseline_score()) << '\n';
  }
}

FlopCount layer_flops(const LayerShape& shape, std::size_t active_blocks, WeightMode mode, bool propagate) {
  const std::uint64_t m = shape.motif;
  const std::uint64_t blocks = active_blocks;
  FlopCount f;
  if (mode == WeightMode::independent) {
    const std::uint64_t weights = blocks * m * m;
    f.forward = weights;
    f.backward = weights + (propagate ? weights : 0);
    return f;
  }
  const bool pooled = m > 1;
  f.forward = blocks + (pooled ? shape.in_neurons : 0);
  f.backward = blocks + (pooled ? shape.out_neurons : 0) + (propagate ? blocks : 0);
  return f;
}

FlopCount sample_flops(const MotifTopology& topology, WeightMode mode) {
  FlopCount total;
  for (std::size_t i = 0; i < topology.layer_count(); ++i) {
    const FlopCount f = layer_flops(topology.shape(i), topology.mask(i).count(), mode, i > 0);
    total.forward += f.forward;
    total.backward += f.backward;
  }
  return total;
}

std::uint64_t flop_counter(const MotifTopology& topology, WeightMode mode, std::size_t samples) {
  return sample_flops(topology, mode).total() * samples;
}

std::uint64_t inference_flops(const MotifTopology& topology, WeightMode mode, std::size_t samples) {
  return sample_flops(topology, mode).forward * samples;
}

std::vector<std::size_t> distinct_parameters(const MotifTopology& topology, WeightMode mode) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < topology.layer_count(); ++i) {
    const std::size_t m = topology.shape(i).motif;
    out.push_back(topology.mask(i).count() * (mode == WeightMode::shared ? 1 : m * m));
  }
  return out;
}

void record_epoch(RunMeasurement& run, double epoch_time_s, double train_loss, double accuracy,
                  std::uint64_t flops) {
  EpochRecord r;
  r.epoch = run.epochs.size() + 1;
  r.train_loss = train_loss;
  r.test_accuracy = accuracy;
  r.epoch_time_s = epoch_time_s;
  r.flops = flops;
  run.epochs.push_back(r);
  run.per_epoch_time_s.push_back(epoch_time_s);
  run.total_time_s += epoch_time_s;
  run.final_accuracy = accuracy;
  run.flop_count += flops;
}

std::string metrics_csv_row(const EpochRecord& r) {
  return std::to_string(r.epoch) + ',' + format_double(r.train_loss) + ',' + format_double(r.test_accuracy) + ',' +
         format_double(r.epoch_time_s) + ',' + std::to_string(r.flops);
}

void write_metrics_csv(std::ostream& os, const RunMeasurement& run) {
  os << kMetricsCsvHeader << '\n';
  for (const auto& r : run.epochs) os << metrics_csv_row(r) << '\n';
}

RunMeasurement read_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMetricsCsvHeader) throw DataError("missing metrics CSV header");
  RunMeasurement run;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    EpochRecord r;
    char c1 = 0;
    std::string loss, acc, time;
    if (!(ls >> r.epoch >> c1) || c1 != ',') throw DataError("bad metrics row " + std::to_string(line_no));
    std::getline(ls, loss, ',');
    std::getline(ls, acc, ',');
    std::getline(ls, time, ',');
    if (!(ls >> r.flops)) throw DataError("bad metrics row " + std::to_string(line_no));
    try {
      r.train_loss = std::stod(loss);
      r.test_accuracy = std::stod(acc);
      r.epoch_time_s = std::stod(time);
    } catch (const std::exception&) {
      throw DataError("bad metrics row " + std::to_string(line_no));
    }
    run.epochs.push_back(r);
    run.per_epoch_time_s.push_back(r.epoch_time_s);
    run.total_time_s += r.epoch_time_s;
    run.final_accuracy = r.test_accuracy;
    run.flop_count += r.flops;
  }
  return run;
}

}  // namespace motifset
