#include "motifset/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "motifset/errors.hpp"

namespace motifset {

std::string_view to_string(EvolutionMode m) noexcept {
  return m == EvolutionMode::magnitude_set ? "magnitude_set" : "listing4";
}

EvolutionMode parse_evolution_mode(std::string_view s) {
  if (s == "magnitude_set") return EvolutionMode::magnitude_set;
  if (s == "listing4") return EvolutionMode::listing4;
  throw ConfigError("unknown evolution mode '" + std::string(s) + "'");
}

void EvolutionPolicy::validate() const {
  if (!(zeta > 0.0 && zeta < 1.0)) throw ConfigError("zeta must lie in (0, 1)");
  if (!(epsilon_prune > 0.0 && epsilon_prune < 1.0)) throw ConfigError("epsilon_prune must lie in (0, 1)");
  if (!(noise_scale >= 0.0)) throw ConfigError("noise_scale must be non-negative");
}

EvolutionRngs::EvolutionRngs(std::uint64_t seed, std::size_t layers) {
  rngs_.reserve(layers);
  for (std::size_t i = 0; i < layers; ++i) rngs_.emplace_back(derive_seed(seed, i));
}

template <typename T>
std::vector<std::size_t> select_prune_set(const BasicNetwork<T>& network, std::size_t layer, double zeta) {
  const SparseLayer<T>& l = network.layer(layer);
  const std::size_t bc = l.shape.block_cols();
  struct Candidate {
    double magnitude;
    std::size_t index;
  };
  std::vector<Candidate> active;
  active.reserve(l.active_blocks());
  for (std::size_t j = 0; j < l.shape.block_rows(); ++j) {
    for (std::size_t t = l.row_start[j]; t < l.row_start[j + 1]; ++t) {
      const std::size_t k = l.active_cols[t];
      active.push_back({network.block_magnitude(layer, j, k), j * bc + k});
    }
  }
  const auto count = static_cast<std::size_t>(std::floor(zeta * static_cast<double>(active.size())));
  if (count == 0) return {};
  auto less = [](const Candidate& a, const Candidate& b) {
    return a.magnitude != b.magnitude ? a.magnitude < b.magnitude : a.index < b.index;
  };
  std::nth_element(active.begin(), active.begin() + static_cast<std::ptrdiff_t>(count - 1), active.end(), less);
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(active[i].index);
  std::sort(out.begin(), out.end());
  return out;
}

template <typename T>
EvolutionStats evolve_magnitude(BasicNetwork<T>& network, const EvolutionPolicy& policy, EvolutionRngs& rngs) {
  if (policy.mode != EvolutionMode::magnitude_set) throw ConfigError("policy mode is not magnitude_set");
  if (rngs.size() != network.layer_count()) throw ConfigError("one evolution stream per layer is required");
  EvolutionStats stats;
  stats.layers.resize(network.layer_count());
  for (std::size_t i = 0; i < network.layer_count(); ++i) {
    LayerEvolutionStats& st = stats.layers[i];
    const SparseLayer<T>& l = network.layer(i);
    const std::size_t total = l.shape.block_count();
    const std::size_t bc = l.shape.block_cols();
    st.active_blocks = l.active_blocks();
    if (st.active_blocks == total) {
      st.saturated = true;
      continue;
    }
    const std::vector<std::size_t> pruned = select_prune_set(network, i, policy.zeta);
    if (pruned.empty()) continue;

    for (const std::size_t idx : pruned) network.deactivate_block(i, idx / bc, idx % bc);

    // uniform draw among all currently inactive blocks, just-pruned ones included
    const BitMatrix& mask = network.topology().mask(i);
    std::vector<std::size_t> inactive;
    inactive.reserve(total - st.active_blocks + pruned.size());
    for (std::size_t idx = 0; idx < total; ++idx) {
      if (!mask.test_flat(idx)) inactive.push_back(idx);
    }
    Rng& rng = rngs.layer(i);
    for (std::size_t r = 0; r < pruned.size(); ++r) {
      const std::size_t pick = r + rng.uniform_index(inactive.size() - r);
      std::swap(inactive[r], inactive[pick]);
      network.activate_block(i, inactive[r] / bc, inactive[r] % bc, rng);
    }
    network.rebuild_index(i);
    st.pruned = pruned.size();
    st.regrown = pruned.size();
    st.active_blocks = network.layer(i).active_blocks();
  }
  return stats;
}

template <typename T>
EvolutionStats evolve_listing4(BasicNetwork<T>& network, const EvolutionPolicy& policy, EvolutionRngs& rngs) {
  if (policy.mode != EvolutionMode::listing4) throw ConfigError("policy mode is not listing4");
  if (rngs.size() != network.layer_count()) throw ConfigError("one evolution stream per layer is required");
  EvolutionStats stats;
  stats.layers.resize(network.layer_count());
  for (std::size_t i = 0; i < network.layer_count(); ++i) {
    SparseLayer<T>& l = network.layer(i);
    Rng& rng = rngs.layer(i);
    LayerEvolutionStats& st = stats.layers[i];
    auto visit = [&](T& w) {
      if (rng.uniform01() < policy.epsilon_prune) {
        w = T{0};
        ++st.pruned;
      }
      w += static_cast<T>(rng.normal() * policy.noise_scale);
    };
    const std::size_t m = l.shape.motif;
    for (std::size_t j = 0; j < l.shape.block_rows(); ++j) {
      for (std::size_t t = l.row_start[j]; t < l.row_start[j + 1]; ++t) {
        const std::size_t k = l.active_cols[t];
        if (l.mode == WeightMode::shared) {
          visit(l.weights(j, k));
          continue;
        }
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < m; ++c) visit(l.weights(j * m + r, k * m + c));
        }
      }
    }
    st.active_blocks = l.active_blocks();
  }
  return stats;
}

template <typename T>
Evolver<T>::Evolver(EvolutionPolicy policy, std::size_t layers)
    : policy_(policy), rngs_(policy.rng_seed, layers) {
  policy_.validate();
}

template <typename T>
EvolutionStats Evolver<T>::evolve(BasicNetwork<T>& network) {
  if (policy_.mode == EvolutionMode::magnitude_set) return evolve_magnitude(network, policy_, rngs_);
  return evolve_listing4(network, policy_, rngs_);
}

bool evolution_schedule(std::size_t epoch, const ScheduleConfig& config) {
  if (config.period == 0 || epoch + 1 >= config.total_epochs) return false;
  return (epoch + 1) % config.period == 0;
}

void write_evolution_rows(std::ostream& os, std::size_t epoch, const EvolutionStats& stats) {
  for (std::size_t i = 0; i < stats.layers.size(); ++i) {
    const LayerEvolutionStats& s = stats.layers[i];
    os << epoch << ',' << i << ',' << s.pruned << ',' << s.regrown << ',' << s.active_blocks << '\n';
  }
}

#define MOTIFSET_INSTANTIATE(T)                                                                        \
  template std::vector<std::size_t> select_prune_set<T>(const BasicNetwork<T>&, std::size_t, double); \
  template EvolutionStats evolve_magnitude<T>(BasicNetwork<T>&, const EvolutionPolicy&, EvolutionRngs&); \
  template EvolutionStats evolve_listing4<T>(BasicNetwork<T>&, const EvolutionPolicy&, EvolutionRngs&);  \
  template class Evolver<T>;

MOTIFSET_INSTANTIATE(double)
MOTIFSET_INSTANTIATE(float)

#undef MOTIFSET_INSTANTIATE

}  // namespace motifset
