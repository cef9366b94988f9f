#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "motifset/network.hpp"
#include "motifset/random.hpp"

namespace motifset {

enum class EvolutionMode {
  magnitude_set,  ///< prune the smallest |w| blocks, regrow as many at random
  listing4,       ///< zero each active weight with probability p, then add noise to it
};

std::string_view to_string(EvolutionMode m) noexcept;
EvolutionMode parse_evolution_mode(std::string_view s);

struct EvolutionPolicy {
  EvolutionMode mode = EvolutionMode::magnitude_set;
  double zeta = 0.3;           ///< fraction of active blocks pruned per event
  double epsilon_prune = 0.1;  ///< per-weight zeroing probability (listing4)
  double noise_scale = 0.0;    ///< std of the additive noise (listing4)
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError unless zeta and epsilon_prune lie in (0, 1) and
  /// noise_scale >= 0.
  void validate() const;
};

struct LayerEvolutionStats {
  std::size_t pruned = 0;  ///< blocks deactivated (magnitude_set) or weights zeroed (listing4)
  std::size_t regrown = 0;
  std::size_t active_blocks = 0;
  bool saturated = false;  ///< no inactive block to regrow into; layer left untouched
};

struct EvolutionStats {
  std::vector<LayerEvolutionStats> layers;
};

/// Per-layer generators, stream i seeded with derive_seed(rng_seed, i). The
/// streams persist across events so a trajectory is reproducible from the seed.
class EvolutionRngs {
 public:
  EvolutionRngs(std::uint64_t seed, std::size_t layers);
  Rng& layer(std::size_t i) { return rngs_.at(i); }
  std::size_t size() const noexcept { return rngs_.size(); }

 private:
  std::vector<Rng> rngs_;
};

/// Blocks that magnitude pruning removes from a layer: the floor(zeta * active)
/// smallest by block magnitude, ties to the lower (row, col). Row-major flat
/// block indices, ascending.
template <typename T>
std::vector<std::size_t> select_prune_set(const BasicNetwork<T>& network, std::size_t layer, double zeta);

template <typename T>
EvolutionStats evolve_magnitude(BasicNetwork<T>& network, const EvolutionPolicy& policy, EvolutionRngs& rngs);

/// Literal transcription: for each active weight, with probability
/// epsilon_prune set it to 0, then add normal() * noise_scale to it. The mask
/// is never touched.
template <typename T>
EvolutionStats evolve_listing4(BasicNetwork<T>& network, const EvolutionPolicy& policy, EvolutionRngs& rngs);

/// Dispatches on policy.mode and keeps the generator state between events.
template <typename T>
class Evolver {
 public:
  Evolver(EvolutionPolicy policy, std::size_t layers);
  EvolutionStats evolve(BasicNetwork<T>& network);
  const EvolutionPolicy& policy() const noexcept { return policy_; }

 private:
  EvolutionPolicy policy_;
  EvolutionRngs rngs_;
};

struct ScheduleConfig {
  std::size_t total_epochs = 1;
  std::size_t period = 1;
};

/// True when evolution runs after `epoch` (0-based): every `period` epochs,
/// never after the final one.
bool evolution_schedule(std::size_t epoch, const ScheduleConfig& config);

/// Appends `epoch,layer,pruned,regrown,active_blocks` rows.
void write_evolution_rows(std::ostream& os, std::size_t epoch, const EvolutionStats& stats);
inline constexpr std::string_view kEvolutionCsvHeader = "epoch,layer,pruned,regrown,active_blocks";

}  // namespace motifset
