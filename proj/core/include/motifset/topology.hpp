#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "motifset/matrix.hpp"

namespace motifset {

/// How the density of each block mask is chosen.
struct BlockDensitySpec {
  enum class Mode { erdos_renyi_set, fixed_density };

  Mode mode = Mode::erdos_renyi_set;
  double value = 20.0;  ///< epsilon for erdos_renyi_set, density for fixed_density

  static BlockDensitySpec erdos_renyi(double epsilon) { return {Mode::erdos_renyi_set, epsilon}; }
  static BlockDensitySpec fixed(double density) { return {Mode::fixed_density, density}; }

  /// Target density for a block mask of the given shape.
  /// erdos_renyi_set: min(1, eps * (rows + cols) / (rows * cols)).
  double density_for(std::size_t block_rows, std::size_t block_cols) const;
};

/// Granularity of the weight layer that produces the network output.
enum class OutputGranularity {
  neuron,  ///< output layer always at motif size 1
  motif,   ///< output layer at the network motif size (requires divisibility)
};

/// Shape of one weight layer at neuron and block granularity.
struct LayerShape {
  std::size_t in_neurons = 0;
  std::size_t out_neurons = 0;
  std::size_t motif = 1;

  std::size_t block_rows() const noexcept { return in_neurons / motif; }
  std::size_t block_cols() const noexcept { return out_neurons / motif; }
  std::size_t block_count() const noexcept { return block_rows() * block_cols(); }
};

/// Block-sparse connectivity of an MLP. Mask (j, k) connects input motif j
/// with output motif k of that layer.
class MotifTopology {
 public:
  MotifTopology() = default;
  MotifTopology(std::vector<std::size_t> layer_sizes, std::size_t motif_size,
                BlockDensitySpec density, std::vector<std::size_t> layer_motifs,
                std::vector<BitMatrix> masks);

  const std::vector<std::size_t>& layer_sizes() const noexcept { return layer_sizes_; }
  std::size_t motif_size() const noexcept { return motif_size_; }
  const BlockDensitySpec& density_spec() const noexcept { return density_; }
  void set_density_spec(const BlockDensitySpec& density) noexcept { density_ = density; }

  /// Number of weight layers (layer_sizes().size() - 1).
  std::size_t layer_count() const noexcept { return masks_.size(); }
  LayerShape shape(std::size_t layer) const;

  const BitMatrix& mask(std::size_t layer) const;
  BitMatrix& mask(std::size_t layer);

  friend bool operator==(const MotifTopology&, const MotifTopology&) = default;

 private:
  std::vector<std::size_t> layer_sizes_;
  std::size_t motif_size_ = 1;
  BlockDensitySpec density_;
  std::vector<std::size_t> layer_motifs_;
  std::vector<BitMatrix> masks_;
};

inline bool operator==(const BlockDensitySpec& a, const BlockDensitySpec& b) {
  return a.mode == b.mode && a.value == b.value;
}

/// Samples one block mask per weight layer. Each layer draws exactly
/// round(p * blocks) active blocks uniformly without replacement from its own
/// stream derive_seed(seed, layer), then every empty output-motif column gets
/// one random block switched on.
MotifTopology build_topology(std::span<const std::size_t> layer_sizes, std::size_t motif_size,
                             const BlockDensitySpec& density, std::uint64_t seed,
                             OutputGranularity output = OutputGranularity::neuron);

/// Active blocks per weight layer.
std::vector<std::size_t> active_block_count(const MotifTopology& topology);

/// Neuron-granularity view of one layer mask: each active block becomes an
/// m x m tile of true entries.
BitMatrix expand_mask(const MotifTopology& topology, std::size_t layer_index);

// Line-based text export:
//   motif-topology v1
//   layer <i> <rows> <cols> <m>
//   <row> <col>            (one line per active block)
void write_topology(std::ostream& os, const MotifTopology& topology);
std::string topology_to_string(const MotifTopology& topology);
/// Parses the export format. The density spec is not part of the format and
/// is left at its default.
MotifTopology read_topology(std::istream& is);

}  // namespace motifset
