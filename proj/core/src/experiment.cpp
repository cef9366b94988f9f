#include "motifset/experiment.hpp"

#include <sys/utsname.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <thread>

#include "motifset/checkpoint.hpp"
#include "motifset/errors.hpp"
#include "motifset/evolution.hpp"
#include "motifset/network.hpp"

namespace motifset {

namespace fs = std::filesystem;

Dataset load_dataset(const ExperimentConfig& config) {
  const DataConfig& d = config.data;
  const PreprocessOptions options{d.standardize, d.train_limit, d.test_limit};
  switch (d.source) {
    case DataConfig::Source::fmnist:
      return make_idx_dataset(IdxDatasetPaths::in_directory(d.dir), options);
    case DataConfig::Source::labeled_csv:
      return make_csv_dataset(d.csv, d.label_column, d.test_fraction, config.seeds.split, options);
    case DataConfig::Source::cache:
      return load_dataset_cache(d.cache);
  }
  throw ConfigError("unknown data source");
}

std::vector<std::size_t> layer_sizes_for(const ExperimentConfig& config, std::size_t n_features,
                                         std::size_t n_classes) {
  std::vector<std::size_t> sizes{n_features};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(n_classes);
  return sizes;
}

MotifTopology topology_for(const ExperimentConfig& config, std::size_t n_features, std::size_t n_classes) {
  const auto sizes = layer_sizes_for(config, n_features, n_classes);
  return build_topology(sizes, config.motif_size, config.density, config.seeds.topology,
                        config.output_granularity);
}

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write " + path.string());
  return out;
}

template <typename T>
TrainResult train_impl(const ExperimentConfig& config, const Dataset& dataset, std::ostream* log) {
  using clock = std::chrono::steady_clock;

  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir);

  const MotifTopology topology = topology_for(config, dataset.n_features, dataset.n_classes);
  const NetworkOptions options{config.activation, config.init, config.weight_mode};
  BasicNetwork<T> network = init_network<T>(topology, options, config.seeds.init);

  const Matrix<T> x_train = dataset.x_train.cast<T>();
  const Matrix<T> y_train = dataset.y_train.cast<T>();
  const Matrix<T> x_test = dataset.x_test.cast<T>();
  const Matrix<T> y_test = dataset.y_test.cast<T>();
  const std::size_t n = x_train.rows();
  const std::size_t batch = config.batch_size == 0 ? n : std::min(config.batch_size, n);

  EvolutionPolicy policy = config.evolution;
  policy.rng_seed = config.seeds.evolution;
  std::optional<Evolver<T>> evolver;
  if (config.evolution_enabled) evolver.emplace(policy, network.layer_count());
  const ScheduleConfig schedule{config.epochs, config.evolution_period};

  std::ofstream metrics = open_output(out_dir / kMetricsFile);
  metrics << kMetricsCsvHeader << '\n' << std::flush;
  std::ofstream evolution = open_output(out_dir / kEvolutionFile);
  evolution << kEvolutionCsvHeader << '\n' << std::flush;

  Rng shuffle_rng(config.seeds.shuffle);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.out_dir = out_dir;
  RunMeasurement& run = result.measurement;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = clock::now();
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
    }

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(begin + batch, n);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const Matrix<T> xb = x_train.gather_rows(idx);
      const Matrix<T> yb = y_train.gather_rows(idx);
      const ForwardCache<T> cache = forward(network, xb);
      const double batch_loss = loss(cache, yb);
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch + 1));
      }
      loss_sum += batch_loss * static_cast<double>(end - begin);
      sgd_step(network, backward(network, cache, yb), static_cast<T>(config.learning_rate));
    }
    const std::uint64_t flops = flop_counter(network.topology(), config.weight_mode, n);
    const double accuracy = predict_accuracy(network, x_test, y_test);

    if (evolver && evolution_schedule(epoch, schedule)) {
      write_evolution_rows(evolution, epoch + 1, evolver->evolve(network));
      evolution.flush();
    }
    const double seconds = std::chrono::duration<double>(clock::now() - start).count();

    record_epoch(run, seconds, loss_sum / static_cast<double>(n), accuracy, flops);
    metrics << metrics_csv_row(run.epochs.back()) << '\n' << std::flush;
    if (log) {
      *log << "epoch " << epoch + 1 << '/' << config.epochs << " loss " << run.epochs.back().train_loss
           << " acc " << accuracy << " time " << seconds << "s" << std::endl;
    }
  }

  result.parameter_count = network.parameter_count();
  result.inference_flops = inference_flops(network.topology(), config.weight_mode, x_test.rows());
  save_checkpoint(out_dir / kCheckpointFile, network);

  std::ofstream manifest = open_output(out_dir / kManifestFile);
  write_manifest(manifest, config, result);
  if (!manifest) throw FileError("failed writing manifest in " + out_dir.string());
  return result;
}

std::string compiler_description() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

double required_number(const boost::property_tree::ptree& tree, const std::string& key) {
  const auto text = tree.get_optional<std::string>(key);
  if (!text || text->empty()) throw MissingFieldError("manifest lacks " + key);
  try {
    std::size_t used = 0;
    const double v = std::stod(*text, &used);
    if (used != text->size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::logic_error&) {
    throw MissingFieldError("manifest field " + key + " is not a number: '" + *text + "'");
  }
}

std::pair<double, double> time_channel(const ManifestSummary& baseline, const ManifestSummary& variant,
                                       bool use_flops) {
  if (use_flops) {
    if (baseline.total_flops == 0 || variant.total_flops == 0) {
      throw MissingFieldError("manifest lacks a nonzero total_flops");
    }
    return {static_cast<double>(baseline.total_flops), static_cast<double>(variant.total_flops)};
  }
  return {baseline.total_time_s, variant.total_time_s};
}

}  // namespace

TrainResult run_train(const ExperimentConfig& config, const Dataset& dataset, std::ostream* log) {
  config.validate();
  dataset.validate();
  if (config.precision == 32) return train_impl<float>(config, dataset, log);
  return train_impl<double>(config, dataset, log);
}

TrainResult run_train(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  return run_train(config, load_dataset(config), log);
}

Dataset run_prepare(const ExperimentConfig& config, const fs::path& cache_path) {
  Dataset dataset = load_dataset(config);
  dataset.validate();
  if (cache_path.has_parent_path()) fs::create_directories(cache_path.parent_path());
  save_dataset_cache(cache_path, dataset);
  return dataset;
}

std::vector<std::pair<std::string, std::string>> environment_description() {
  std::vector<std::pair<std::string, std::string>> env;
  utsname info{};
  if (uname(&info) == 0) {
    env.emplace_back("os", std::string(info.sysname) + " " + info.release);
    env.emplace_back("machine", info.machine);
  }
  env.emplace_back("compiler", compiler_description());
#ifdef NDEBUG
  env.emplace_back("build", "release");
#else
  env.emplace_back("build", "debug");
#endif
  env.emplace_back("hardware_threads", std::to_string(std::thread::hardware_concurrency()));
  env.emplace_back("compute_threads", "1");
  return env;
}

void write_manifest(std::ostream& os, const ExperimentConfig& config, const TrainResult& result) {
  write_config(os, config);
  os << "\n[environment]\n";
  for (const auto& [key, value] : environment_description()) os << key << " = " << value << '\n';

  const RunMeasurement& run = result.measurement;
  os << "\n[result]\n"
     << "epochs_completed = " << run.epochs.size() << '\n'
     << "final_accuracy = " << format_double(run.final_accuracy) << '\n'
     << "total_time_s = " << format_double(run.total_time_s) << '\n'
     << "total_flops = " << run.flop_count << '\n'
     << "inference_flops = " << result.inference_flops << '\n'
     << "parameter_count = " << result.parameter_count << '\n';
}

ManifestSummary read_manifest_summary(std::istream& is) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("manifest syntax: ") + e.what());
  }
  ManifestSummary s;
  s.final_accuracy = required_number(tree, "result.final_accuracy");
  s.total_time_s = required_number(tree, "result.total_time_s");
  if (const auto flops = tree.get_optional<std::string>("result.total_flops")) {
    s.total_flops = std::strtoull(flops->c_str(), nullptr, 10);
  }
  return s;
}

ManifestSummary read_manifest_summary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open manifest " + path.string());
  return read_manifest_summary(in);
}

void write_score_csv(std::ostream& os, const ScoreReport& report) {
  write_sweep_csv(os, std::span<const ScoreReport>(&report, 1));
}

ScoreReport run_score(const ManifestSummary& baseline, const ManifestSummary& variant, double w_eff,
                      bool use_flops, const fs::path& out_dir) {
  const auto [t_base, t] = time_channel(baseline, variant, use_flops);
  const ScoreReport report =
      comprehensive_score(t_base, t, baseline.final_accuracy, variant.final_accuracy, w_eff, 1.0 - w_eff);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out = open_output(out_dir / kScoreFile);
    write_score_csv(out, report);
  }
  return report;
}

SweepResult run_sweep(const ManifestSummary& baseline, const ManifestSummary& variant, std::span<const double> grid,
                      bool use_flops, const fs::path& out_dir) {
  const auto [t_base, t] = time_channel(baseline, variant, use_flops);
  SweepResult result = tradeoff_sweep(t_base, t, baseline.final_accuracy, variant.final_accuracy, grid);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream csv = open_output(out_dir / kSweepFile);
    write_sweep_csv(csv, result.points);
    std::ofstream cross = open_output(out_dir / kCrossoverFile);
    cross << "grid_crossover = " << (result.grid_crossover ? format_double(*result.grid_crossover) : "none") << '\n'
          << "analytic_crossover = "
          << (result.analytic_crossover ? format_double(*result.analytic_crossover) : "none") << '\n';
  }
  return result;
}

}  // namespace motifset
