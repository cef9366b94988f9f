#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "motifset/matrix.hpp"
#include "motifset/random.hpp"
#include "motifset/topology.hpp"

namespace motifset {

enum class Activation { relu, sigmoid };
enum class InitScheme { he_uniform, he_normal };

/// shared: one scalar per active m x m block. independent: every neuron pair
/// inside an active block has its own weight.
enum class WeightMode { shared, independent };

struct NetworkOptions {
  Activation activation = Activation::relu;
  InitScheme init = InitScheme::he_uniform;
  WeightMode weight_mode = WeightMode::shared;
};

std::string_view to_string(Activation a) noexcept;
std::string_view to_string(InitScheme s) noexcept;
std::string_view to_string(WeightMode m) noexcept;
Activation parse_activation(std::string_view s);
InitScheme parse_init_scheme(std::string_view s);
WeightMode parse_weight_mode(std::string_view s);

/// Parameters of one weight layer.
///
/// In shared mode `weights` is (in/m) x (out/m); in independent mode it is
/// in x out at neuron granularity. Entries outside active blocks are zero.
template <typename T>
struct SparseLayer {
  LayerShape shape;
  WeightMode mode = WeightMode::shared;
  Matrix<T> weights;
  std::vector<T> bias;

  // active blocks in compressed-row form, rebuilt whenever the mask changes
  std::vector<std::size_t> row_start;
  std::vector<std::uint32_t> active_cols;

  std::size_t active_blocks() const noexcept { return active_cols.size(); }
};

template <typename T>
struct ForwardCache {
  std::vector<Matrix<T>> z_list;  ///< pre-activations, one per weight layer
  std::vector<Matrix<T>> a_list;  ///< a_list[0] is the input batch, last is softmax output
};

template <typename T>
struct Gradients {
  std::vector<Matrix<T>> weights;  ///< same shape as SparseLayer::weights
  std::vector<std::vector<T>> bias;
};

template <typename T>
class BasicNetwork {
 public:
  using value_type = T;

  BasicNetwork() = default;
  /// All weights and biases zero.
  BasicNetwork(MotifTopology topology, NetworkOptions options);

  const MotifTopology& topology() const noexcept { return topology_; }
  const NetworkOptions& options() const noexcept { return options_; }
  Activation activation() const noexcept { return options_.activation; }
  WeightMode weight_mode() const noexcept { return options_.weight_mode; }

  std::size_t layer_count() const noexcept { return layers_.size(); }
  std::size_t input_size() const noexcept { return topology_.layer_sizes().front(); }
  std::size_t output_size() const noexcept { return topology_.layer_sizes().back(); }

  const SparseLayer<T>& layer(std::size_t i) const { return layers_.at(i); }
  SparseLayer<T>& layer(std::size_t i) { return layers_.at(i); }

  bool block_active(std::size_t layer, std::size_t j, std::size_t k) const {
    return topology_.mask(layer).test(j, k);
  }
  /// |w| in shared mode, L1 norm of the tile in independent mode.
  double block_magnitude(std::size_t layer, std::size_t j, std::size_t k) const;
  /// Switches a block on and draws fresh weights from the init distribution.
  /// The caller must rebuild_index(layer) once done editing.
  void activate_block(std::size_t layer, std::size_t j, std::size_t k, Rng& rng);
  /// Switches a block off and zeroes its weights.
  void deactivate_block(std::size_t layer, std::size_t j, std::size_t k);
  void draw_block(std::size_t layer, std::size_t j, std::size_t k, Rng& rng);
  void rebuild_index(std::size_t layer);

  /// Distinct trainable weights (excluding biases) over all layers.
  std::size_t parameter_count() const;

  /// Neuron-granularity in x out weight matrix with shared scalars tiled.
  Matrix<T> expanded_weights(std::size_t layer) const;

  friend bool operator==(const BasicNetwork& a, const BasicNetwork& b) {
    if (!(a.topology_ == b.topology_) || a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
      if (!(a.layers_[i].weights == b.layers_[i].weights) || a.layers_[i].bias != b.layers_[i].bias) return false;
    }
    return true;
  }

 private:
  MotifTopology topology_;
  NetworkOptions options_;
  std::vector<SparseLayer<T>> layers_;
};

using Network = BasicNetwork<double>;
using NetworkF32 = BasicNetwork<float>;

/// Active weights from He uniform (bound sqrt(6 / fan_in)) or He normal
/// (std sqrt(2 / fan_in)), fan_in counted in neurons; biases zero. Layer i
/// draws from derive_seed(seed, i).
template <typename T = double>
BasicNetwork<T> init_network(const MotifTopology& topology, const NetworkOptions& options, std::uint64_t seed);

template <typename T>
ForwardCache<T> forward(const BasicNetwork<T>& network, const Matrix<T>& batch);

/// Mean cross-entropy, probabilities floored at 1e-12.
template <typename T>
double loss(const ForwardCache<T>& cache, const Matrix<T>& y_true);

template <typename T>
Gradients<T> backward(const BasicNetwork<T>& network, const ForwardCache<T>& cache, const Matrix<T>& y_true);

template <typename T>
void sgd_step(BasicNetwork<T>& network, const Gradients<T>& gradients, T learning_rate);

/// Argmax class per row, ties to the lowest index.
template <typename T>
std::vector<std::size_t> predict(const BasicNetwork<T>& network, const Matrix<T>& x);

template <typename T>
double predict_accuracy(const BasicNetwork<T>& network, const Matrix<T>& x, const Matrix<T>& y_true);

/// Lowest index of the row maximum.
template <typename T>
std::size_t argmax(std::span<const T> row) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

}  // namespace motifset
