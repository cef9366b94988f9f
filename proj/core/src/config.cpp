#include "motifset/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "motifset/errors.hpp"
#include "motifset/metrics.hpp"

namespace motifset {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment", {"name", "seed"}},
      {"data",
       {"source", "dir", "csv", "cache", "label_column", "test_fraction", "standardize", "train_limit",
        "test_limit"}},
      {"model",
       {"hidden", "motif_size", "weight_mode", "output_granularity", "activation", "init", "density_mode",
        "density", "precision"}},
      {"train", {"epochs", "learning_rate", "batch_size", "deterministic"}},
      {"evolution", {"enabled", "mode", "zeta", "epsilon_prune", "noise_scale", "period"}},
      {"seeds", {"topology", "init", "evolution", "split", "shuffle"}},
      {"score", {"w_eff", "w_acc"}},
      {"output", {"dir"}},
  };
  return keys;
}

std::string source_name(DataConfig::Source s) {
  switch (s) {
    case DataConfig::Source::fmnist: return "fmnist";
    case DataConfig::Source::labeled_csv: return "labeled_csv";
    case DataConfig::Source::cache: return "cache";
  }
  return "fmnist";
}

DataConfig::Source parse_source(const std::string& s) {
  if (s == "fmnist") return DataConfig::Source::fmnist;
  if (s == "labeled_csv") return DataConfig::Source::labeled_csv;
  if (s == "cache") return DataConfig::Source::cache;
  throw ConfigError("unknown data source '" + s + "'");
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  std::string str(const std::string& key, const std::string& fallback) const {
    return tree_.get<std::string>(key, fallback);
  }

  template <typename T>
  T num(const std::string& key, T fallback) const {
    const auto text = tree_.get_optional<std::string>(key);
    if (!text) return fallback;
    T v{};
    const char* b = text->data();
    const char* e = b + text->size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw ConfigError(key + ": cannot parse '" + *text + "'");
    return v;
  }

  bool flag(const std::string& key, bool fallback) const {
    const auto text = tree_.get_optional<std::string>(key);
    if (!text) return fallback;
    if (*text == "true" || *text == "1" || *text == "yes") return true;
    if (*text == "false" || *text == "0" || *text == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + *text + "'");
  }

  std::vector<std::size_t> sizes(const std::string& key, const std::vector<std::size_t>& fallback) const {
    const auto text = tree_.get_optional<std::string>(key);
    if (!text) return fallback;
    std::vector<std::size_t> out;
    std::stringstream ss(*text);
    for (std::string item; std::getline(ss, item, ',');) {
      const auto first = item.find_first_not_of(' ');
      const auto last = item.find_last_not_of(' ');
      if (first == std::string::npos) continue;
      item = item.substr(first, last - first + 1);
      std::size_t v = 0;
      const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
      if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
        throw ConfigError(key + ": cannot parse '" + *text + "'");
      }
      out.push_back(v);
    }
    return out;
  }

 private:
  const pt::ptree& tree_;
};

void check_keys(const pt::ptree& tree) {
  const auto& known = known_keys();
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) continue;
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
    }
  }
}

ExperimentConfig from_tree(const pt::ptree& tree) {
  check_keys(tree);
  const Reader r(tree);
  ExperimentConfig c;
  c.name = r.str("experiment.name", c.name);
  c.seed = r.num<std::uint64_t>("experiment.seed", c.seed);

  DataConfig& d = c.data;
  d.source = parse_source(r.str("data.source", source_name(d.source)));
  d.dir = r.str("data.dir", d.dir);
  d.csv = r.str("data.csv", d.csv);
  d.cache = r.str("data.cache", d.cache);
  d.label_column = r.num<int>("data.label_column", d.label_column);
  d.test_fraction = r.num<double>("data.test_fraction", d.test_fraction);
  d.standardize = r.flag("data.standardize", d.standardize);
  d.train_limit = r.num<std::size_t>("data.train_limit", d.train_limit);
  d.test_limit = r.num<std::size_t>("data.test_limit", d.test_limit);

  c.hidden = r.sizes("model.hidden", c.hidden);
  c.motif_size = r.num<std::size_t>("model.motif_size", c.motif_size);
  c.weight_mode = parse_weight_mode(r.str("model.weight_mode", std::string(to_string(c.weight_mode))));
  const std::string granularity = r.str("model.output_granularity", "neuron");
  if (granularity == "neuron") {
    c.output_granularity = OutputGranularity::neuron;
  } else if (granularity == "motif") {
    c.output_granularity = OutputGranularity::motif;
  } else {
    throw ConfigError("unknown output granularity '" + granularity + "'");
  }
  c.activation = parse_activation(r.str("model.activation", std::string(to_string(c.activation))));
  c.init = parse_init_scheme(r.str("model.init", std::string(to_string(c.init))));
  const std::string density_mode = r.str("model.density_mode", "erdos_renyi_set");
  if (density_mode == "erdos_renyi_set") {
    c.density.mode = BlockDensitySpec::Mode::erdos_renyi_set;
  } else if (density_mode == "fixed_density") {
    c.density.mode = BlockDensitySpec::Mode::fixed_density;
  } else {
    throw ConfigError("unknown density mode '" + density_mode + "'");
  }
  c.density.value = r.num<double>("model.density", c.density.value);
  c.precision = r.num<int>("model.precision", c.precision);

  c.epochs = r.num<std::size_t>("train.epochs", c.epochs);
  c.learning_rate = r.num<double>("train.learning_rate", c.learning_rate);
  c.batch_size = r.num<std::size_t>("train.batch_size", c.batch_size);
  c.deterministic = r.flag("train.deterministic", c.deterministic);

  c.evolution_enabled = r.flag("evolution.enabled", c.evolution_enabled);
  c.evolution.mode = parse_evolution_mode(r.str("evolution.mode", std::string(to_string(c.evolution.mode))));
  c.evolution.zeta = r.num<double>("evolution.zeta", c.evolution.zeta);
  c.evolution.epsilon_prune = r.num<double>("evolution.epsilon_prune", c.evolution.epsilon_prune);
  c.evolution.noise_scale = r.num<double>("evolution.noise_scale", c.evolution.noise_scale);
  c.evolution_period = r.num<std::size_t>("evolution.period", c.evolution_period);

  c.seeds.topology = r.num<std::uint64_t>("seeds.topology", c.seed);
  c.seeds.init = r.num<std::uint64_t>("seeds.init", c.seed + 1);
  c.seeds.evolution = r.num<std::uint64_t>("seeds.evolution", c.seed + 2);
  c.seeds.split = r.num<std::uint64_t>("seeds.split", c.seed + 3);
  c.seeds.shuffle = r.num<std::uint64_t>("seeds.shuffle", c.seed + 4);
  c.evolution.rng_seed = c.seeds.evolution;

  c.w_eff = r.num<double>("score.w_eff", c.w_eff);
  c.w_acc = r.num<double>("score.w_acc", r.has("score.w_eff") ? 1.0 - c.w_eff : c.w_acc);

  c.out_dir = r.str("output.dir", c.out_dir);
  c.validate();
  return c;
}

pt::ptree read_tree(std::istream& is, const std::vector<ConfigOverride>& overrides) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (const auto& o : overrides) tree.put(o.key, o.value);
  return tree;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (motif_size < 1) throw ConfigError("model.motif_size must be at least 1");
  if (precision != 32 && precision != 64) throw ConfigError("model.precision must be 32 or 64");
  if (!(density.value > 0.0)) throw ConfigError("model.density must be positive");
  if (density.mode == BlockDensitySpec::Mode::fixed_density && density.value > 1.0) {
    throw ConfigError("model.density must not exceed 1 in fixed_density mode");
  }
  if (evolution_enabled) evolution.validate();
  if (w_eff < 0.0 || w_acc < 0.0 || std::abs(w_eff + w_acc - 1.0) > 1e-12) {
    throw ConfigError("score weights must be non-negative and sum to 1");
  }
  for (const std::size_t h : hidden) {
    if (h == 0) throw ConfigError("model.hidden sizes must be positive");
  }
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return config_to_string(a) == config_to_string(b);
}

ConfigOverride parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || text.find('.') > eq) {
    throw ConfigError("override '" + text + "' is not section.key=value");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

ExperimentConfig parse_config(std::istream& is, const std::vector<ConfigOverride>& overrides) {
  return from_tree(read_tree(is, overrides));
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<ConfigOverride>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, overrides);
}

ExperimentConfig config_from_overrides(const std::vector<ConfigOverride>& overrides) {
  std::istringstream empty;
  return parse_config(empty, overrides);
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
  auto num = [](double v) { return format_double(v); };
  std::string hidden;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) hidden += (i ? "," : "") + std::to_string(c.hidden[i]);

  os << "[experiment]\n"
     << "name = " << c.name << '\n'
     << "seed = " << c.seed << "\n\n";
  os << "[data]\n"
     << "source = " << source_name(c.data.source) << '\n'
     << "dir = " << c.data.dir << '\n'
     << "csv = " << c.data.csv << '\n'
     << "cache = " << c.data.cache << '\n'
     << "label_column = " << c.data.label_column << '\n'
     << "test_fraction = " << num(c.data.test_fraction) << '\n'
     << "standardize = " << (c.data.standardize ? "true" : "false") << '\n'
     << "train_limit = " << c.data.train_limit << '\n'
     << "test_limit = " << c.data.test_limit << "\n\n";
  os << "[model]\n"
     << "hidden = " << hidden << '\n'
     << "motif_size = " << c.motif_size << '\n'
     << "weight_mode = " << to_string(c.weight_mode) << '\n'
     << "output_granularity = " << (c.output_granularity == OutputGranularity::neuron ? "neuron" : "motif") << '\n'
     << "activation = " << to_string(c.activation) << '\n'
     << "init = " << to_string(c.init) << '\n'
     << "density_mode = "
     << (c.density.mode == BlockDensitySpec::Mode::erdos_renyi_set ? "erdos_renyi_set" : "fixed_density") << '\n'
     << "density = " << num(c.density.value) << '\n'
     << "precision = " << c.precision << "\n\n";
  os << "[train]\n"
     << "epochs = " << c.epochs << '\n'
     << "learning_rate = " << num(c.learning_rate) << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "deterministic = " << (c.deterministic ? "true" : "false") << "\n\n";
  os << "[evolution]\n"
     << "enabled = " << (c.evolution_enabled ? "true" : "false") << '\n'
     << "mode = " << to_string(c.evolution.mode) << '\n'
     << "zeta = " << num(c.evolution.zeta) << '\n'
     << "epsilon_prune = " << num(c.evolution.epsilon_prune) << '\n'
     << "noise_scale = " << num(c.evolution.noise_scale) << '\n'
     << "period = " << c.evolution_period << "\n\n";
  os << "[seeds]\n"
     << "topology = " << c.seeds.topology << '\n'
     << "init = " << c.seeds.init << '\n'
     << "evolution = " << c.seeds.evolution << '\n'
     << "split = " << c.seeds.split << '\n'
     << "shuffle = " << c.seeds.shuffle << "\n\n";
  os << "[score]\n"
     << "w_eff = " << num(c.w_eff) << '\n'
     << "w_acc = " << num(c.w_acc) << "\n\n";
  os << "[output]\n"
     << "dir = " << c.out_dir << '\n';
}

std::string config_to_string(const ExperimentConfig& config) {
  std::ostringstream os;
  write_config(os, config);
  return os.str();
}

}  // namespace motifset
