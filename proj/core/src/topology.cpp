#include "motifset/topology.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "motifset/errors.hpp"
#include "motifset/random.hpp"

namespace motifset {

double BlockDensitySpec::density_for(std::size_t block_rows, std::size_t block_cols) const {
  if (mode == Mode::fixed_density) return value;
  const double rows = static_cast<double>(block_rows);
  const double cols = static_cast<double>(block_cols);
  return std::min(1.0, value * (rows + cols) / (rows * cols));
}

MotifTopology::MotifTopology(std::vector<std::size_t> layer_sizes, std::size_t motif_size,
                             BlockDensitySpec density, std::vector<std::size_t> layer_motifs,
                             std::vector<BitMatrix> masks)
    : layer_sizes_(std::move(layer_sizes)),
      motif_size_(motif_size),
      density_(density),
      layer_motifs_(std::move(layer_motifs)),
      masks_(std::move(masks)) {
  if (layer_sizes_.size() < 2) throw EmptyNetworkError("need at least an input and an output layer");
  if (layer_motifs_.size() != layer_sizes_.size() - 1 || masks_.size() != layer_motifs_.size()) {
    throw ConfigError("topology layer count mismatch");
  }
  for (std::size_t i = 0; i < masks_.size(); ++i) {
    const LayerShape s = shape(i);
    if (s.motif == 0 || s.in_neurons % s.motif != 0 || s.out_neurons % s.motif != 0) {
      throw DivisibilityError("layer " + std::to_string(i) + " is not divisible by its motif size");
    }
    if (masks_[i].rows() != s.block_rows() || masks_[i].cols() != s.block_cols()) {
      throw ConfigError("mask shape of layer " + std::to_string(i) + " does not match layer sizes");
    }
  }
}

LayerShape MotifTopology::shape(std::size_t layer) const {
  if (layer >= layer_motifs_.size()) {
    throw IndexError("layer " + std::to_string(layer) + " out of range");
  }
  return {layer_sizes_[layer], layer_sizes_[layer + 1], layer_motifs_[layer]};
}

const BitMatrix& MotifTopology::mask(std::size_t layer) const {
  if (layer >= masks_.size()) throw IndexError("layer " + std::to_string(layer) + " out of range");
  return masks_[layer];
}

BitMatrix& MotifTopology::mask(std::size_t layer) {
  if (layer >= masks_.size()) throw IndexError("layer " + std::to_string(layer) + " out of range");
  return masks_[layer];
}

namespace {

BitMatrix sample_mask(std::size_t rows, std::size_t cols, double density, Rng& rng) {
  const std::size_t total = rows * cols;
  const auto target = static_cast<std::size_t>(std::llround(density * static_cast<double>(total)));
  const std::size_t k = std::min(target, total);
  if (k == total) return BitMatrix(rows, cols, true);

  BitMatrix mask(rows, cols);
  // partial Fisher-Yates: the first k slots end up a uniform k-subset
  std::vector<std::uint32_t> slots(total);
  std::iota(slots.begin(), slots.end(), 0U);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(total - i);
    std::swap(slots[i], slots[j]);
    mask.set_flat(slots[i]);
  }

  for (std::size_t c = 0; c < cols; ++c) {
    bool any = false;
    for (std::size_t r = 0; r < rows && !any; ++r) any = mask.test(r, c);
    if (!any) mask.set(rng.uniform_index(rows), c);
  }
  return mask;
}

}  // namespace

MotifTopology build_topology(std::span<const std::size_t> layer_sizes, std::size_t motif_size,
                             const BlockDensitySpec& density, std::uint64_t seed,
                             OutputGranularity output) {
  if (layer_sizes.size() < 2) {
    throw EmptyNetworkError("layer_sizes needs at least 2 entries, got " +
                            std::to_string(layer_sizes.size()));
  }
  if (motif_size == 0) throw DivisibilityError("motif size must be positive");
  if (density.value <= 0.0 || (density.mode == BlockDensitySpec::Mode::fixed_density && density.value > 1.0)) {
    throw ConfigError("density value out of range");
  }
  const std::size_t n_weight_layers = layer_sizes.size() - 1;
  const bool motif_output = output == OutputGranularity::motif;

  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    if (layer_sizes[i] == 0) throw ConfigError("layer sizes must be positive");
    const bool is_output = i == layer_sizes.size() - 1;
    if ((!is_output || motif_output) && layer_sizes[i] % motif_size != 0) {
      throw DivisibilityError("motif size " + std::to_string(motif_size) + " does not divide layer " +
                              std::to_string(i) + " of size " + std::to_string(layer_sizes[i]));
    }
  }

  std::vector<std::size_t> motifs(n_weight_layers, motif_size);
  if (!motif_output) motifs.back() = 1;

  std::vector<BitMatrix> masks;
  masks.reserve(n_weight_layers);
  for (std::size_t i = 0; i < n_weight_layers; ++i) {
    const std::size_t rows = layer_sizes[i] / motifs[i];
    const std::size_t cols = layer_sizes[i + 1] / motifs[i];
    Rng rng(derive_seed(seed, i));
    masks.push_back(sample_mask(rows, cols, density.density_for(rows, cols), rng));
  }
  return MotifTopology({layer_sizes.begin(), layer_sizes.end()}, motif_size, density, std::move(motifs),
                       std::move(masks));
}

std::vector<std::size_t> active_block_count(const MotifTopology& topology) {
  std::vector<std::size_t> out;
  out.reserve(topology.layer_count());
  for (std::size_t i = 0; i < topology.layer_count(); ++i) out.push_back(topology.mask(i).count());
  return out;
}

BitMatrix expand_mask(const MotifTopology& topology, std::size_t layer_index) {
  const LayerShape s = topology.shape(layer_index);
  const BitMatrix& blocks = topology.mask(layer_index);
  BitMatrix out(s.in_neurons, s.out_neurons);
  for (std::size_t j = 0; j < blocks.rows(); ++j) {
    for (std::size_t k = 0; k < blocks.cols(); ++k) {
      if (!blocks.test(j, k)) continue;
      for (std::size_t r = 0; r < s.motif; ++r) {
        for (std::size_t c = 0; c < s.motif; ++c) out.set(j * s.motif + r, k * s.motif + c);
      }
    }
  }
  return out;
}

void write_topology(std::ostream& os, const MotifTopology& topology) {
  os << "motif-topology v1\n";
  for (std::size_t i = 0; i < topology.layer_count(); ++i) {
    const LayerShape s = topology.shape(i);
    const BitMatrix& mask = topology.mask(i);
    os << "layer " << i << ' ' << mask.rows() << ' ' << mask.cols() << ' ' << s.motif << '\n';
    for (std::size_t r = 0; r < mask.rows(); ++r) {
      for (std::size_t c = 0; c < mask.cols(); ++c) {
        if (mask.test(r, c)) os << r << ' ' << c << '\n';
      }
    }
  }
}

std::string topology_to_string(const MotifTopology& topology) {
  std::ostringstream os;
  write_topology(os, topology);
  return os.str();
}

MotifTopology read_topology(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "motif-topology v1") {
    throw DataError("not a motif-topology v1 stream");
  }
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> motifs;
  std::vector<BitMatrix> masks;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line.rfind("layer", 0) == 0) {
      std::string tag;
      std::size_t index = 0, rows = 0, cols = 0, m = 0;
      if (!(ls >> tag >> index >> rows >> cols >> m) || index != masks.size() || m == 0) {
        throw DataError("bad layer header at line " + std::to_string(line_no));
      }
      const std::size_t in = rows * m;
      if (sizes.empty()) {
        sizes.push_back(in);
      } else if (sizes.back() != in) {
        throw DataError("layer " + std::to_string(index) + " input size does not chain");
      }
      sizes.push_back(cols * m);
      motifs.push_back(m);
      masks.emplace_back(rows, cols);
      continue;
    }
    std::size_t r = 0, c = 0;
    if (masks.empty() || !(ls >> r >> c) || r >= masks.back().rows() || c >= masks.back().cols()) {
      throw DataError("bad block entry at line " + std::to_string(line_no));
    }
    masks.back().set(r, c);
  }
  if (masks.empty()) throw EmptyNetworkError("topology stream has no layers");
  const std::size_t motif_size = motifs.front();
  return MotifTopology(std::move(sizes), motif_size, BlockDensitySpec{}, std::move(motifs), std::move(masks));
}

}  // namespace motifset
