#include "motifset/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "motifset/errors.hpp"

namespace motifset {

std::string_view to_string(Activation a) noexcept { return a == Activation::relu ? "relu" : "sigmoid"; }
std::string_view to_string(InitScheme s) noexcept {
  return s == InitScheme::he_uniform ? "he_uniform" : "he_normal";
}
std::string_view to_string(WeightMode m) noexcept { return m == WeightMode::shared ? "shared" : "independent"; }

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

InitScheme parse_init_scheme(std::string_view s) {
  if (s == "he_uniform") return InitScheme::he_uniform;
  if (s == "he_normal") return InitScheme::he_normal;
  throw ConfigError("unknown init scheme '" + std::string(s) + "'");
}

WeightMode parse_weight_mode(std::string_view s) {
  if (s == "shared") return WeightMode::shared;
  if (s == "independent") return WeightMode::independent;
  throw ConfigError("unknown weight mode '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// BasicNetwork

template <typename T>
BasicNetwork<T>::BasicNetwork(MotifTopology topology, NetworkOptions options)
    : topology_(std::move(topology)), options_(options) {
  layers_.resize(topology_.layer_count());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    SparseLayer<T>& l = layers_[i];
    l.shape = topology_.shape(i);
    l.mode = options_.weight_mode;
    if (l.mode == WeightMode::shared) {
      l.weights = Matrix<T>(l.shape.block_rows(), l.shape.block_cols());
    } else {
      l.weights = Matrix<T>(l.shape.in_neurons, l.shape.out_neurons);
    }
    l.bias.assign(l.shape.out_neurons, T{0});
    rebuild_index(i);
  }
}

template <typename T>
void BasicNetwork<T>::rebuild_index(std::size_t layer) {
  SparseLayer<T>& l = layers_.at(layer);
  const BitMatrix& mask = topology_.mask(layer);
  l.row_start.assign(mask.rows() + 1, 0);
  l.active_cols.clear();
  l.active_cols.reserve(mask.count());
  for (std::size_t j = 0; j < mask.rows(); ++j) {
    for (std::size_t k = 0; k < mask.cols(); ++k) {
      if (mask.test(j, k)) l.active_cols.push_back(static_cast<std::uint32_t>(k));
    }
    l.row_start[j + 1] = l.active_cols.size();
  }
}

template <typename T>
double BasicNetwork<T>::block_magnitude(std::size_t layer, std::size_t j, std::size_t k) const {
  const SparseLayer<T>& l = layers_.at(layer);
  if (l.mode == WeightMode::shared) return std::abs(static_cast<double>(l.weights(j, k)));
  const std::size_t m = l.shape.motif;
  double sum = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) sum += std::abs(static_cast<double>(l.weights(j * m + r, k * m + c)));
  }
  return sum;
}

template <typename T>
void BasicNetwork<T>::draw_block(std::size_t layer, std::size_t j, std::size_t k, Rng& rng) {
  SparseLayer<T>& l = layers_.at(layer);
  const double fan_in = static_cast<double>(l.shape.in_neurons);
  auto draw = [&]() -> T {
    if (options_.init == InitScheme::he_uniform) {
      const double bound = std::sqrt(6.0 / fan_in);
      return static_cast<T>(rng.uniform(-bound, bound));
    }
    return static_cast<T>(rng.normal() * std::sqrt(2.0 / fan_in));
  };
  if (l.mode == WeightMode::shared) {
    l.weights(j, k) = draw();
    return;
  }
  const std::size_t m = l.shape.motif;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) l.weights(j * m + r, k * m + c) = draw();
  }
}

template <typename T>
void BasicNetwork<T>::activate_block(std::size_t layer, std::size_t j, std::size_t k, Rng& rng) {
  topology_.mask(layer).set(j, k, true);
  draw_block(layer, j, k, rng);
}

template <typename T>
void BasicNetwork<T>::deactivate_block(std::size_t layer, std::size_t j, std::size_t k) {
  topology_.mask(layer).set(j, k, false);
  SparseLayer<T>& l = layers_.at(layer);
  if (l.mode == WeightMode::shared) {
    l.weights(j, k) = T{0};
    return;
  }
  const std::size_t m = l.shape.motif;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) l.weights(j * m + r, k * m + c) = T{0};
  }
}

template <typename T>
std::size_t BasicNetwork<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    const std::size_t per_block = l.mode == WeightMode::shared ? 1 : l.shape.motif * l.shape.motif;
    n += l.active_blocks() * per_block;
  }
  return n;
}

template <typename T>
Matrix<T> BasicNetwork<T>::expanded_weights(std::size_t layer) const {
  const SparseLayer<T>& l = layers_.at(layer);
  if (l.mode == WeightMode::independent) return l.weights;
  const std::size_t m = l.shape.motif;
  Matrix<T> out(l.shape.in_neurons, l.shape.out_neurons);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = l.weights(r / m, c / m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// initialisation

template <typename T>
BasicNetwork<T> init_network(const MotifTopology& topology, const NetworkOptions& options, std::uint64_t seed) {
  BasicNetwork<T> net(topology, options);
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    Rng rng(derive_seed(seed, i));
    const SparseLayer<T>& l = net.layer(i);
    for (std::size_t j = 0; j < l.shape.block_rows(); ++j) {
      for (std::size_t t = l.row_start[j]; t < l.row_start[j + 1]; ++t) net.draw_block(i, j, l.active_cols[t], rng);
    }
  }
  return net;
}

// ---------------------------------------------------------------------------
// kernels

namespace {

template <typename T>
void pool_motifs(const T* a, std::size_t blocks, std::size_t m, T* out) {
  for (std::size_t j = 0; j < blocks; ++j) {
    T s{0};
    for (std::size_t r = 0; r < m; ++r) s += a[j * m + r];
    out[j] = s;
  }
}

template <typename T>
void layer_forward(const SparseLayer<T>& l, const Matrix<T>& in, Matrix<T>& z) {
  const std::size_t m = l.shape.motif;
  const std::size_t br = l.shape.block_rows();
  const std::size_t bc = l.shape.block_cols();
  const std::size_t n = in.rows();
  z.resize(n, l.shape.out_neurons);
  const std::uint32_t* cols = l.active_cols.data();

  if (l.mode == WeightMode::shared) {
    std::vector<T> pooled(m == 1 ? 0 : br);
    std::vector<T> q(bc);
    for (std::size_t s = 0; s < n; ++s) {
      const T* a = in.row(s).data();
      const T* p = a;
      if (m != 1) {
        pool_motifs(a, br, m, pooled.data());
        p = pooled.data();
      }
      std::fill(q.begin(), q.end(), T{0});
      for (std::size_t j = 0; j < br; ++j) {
        const T pj = p[j];
        if (pj == T{0}) continue;
        const T* w = l.weights.data() + j * bc;
        for (std::size_t t = l.row_start[j]; t < l.row_start[j + 1]; ++t) q[cols[t]] += pj * w[cols[t]];
      }
      T* zr = z.row(s).data();
      for (std::size_t k = 0; k < bc; ++k) {
        for (std::size_t c = 0; c < m; ++c) zr[k * m + c] = q[k] + l.bias[k * m + c];
      }
    }
    return;
  }

  const std::size_t out = l.shape.out_neurons;
  for (std::size_t s = 0; s < n; ++s) {
    const T* a = in.row(s).data();
    T* zr = z.row(s).data();
    std::copy(l.bias.begin(), l.bias.end(), zr);
    for (std::size_t j = 0; j < br; ++j) {
      for (std::size_t r = 0; r < m; ++r) {
        const T ar = a[j * m + r];
        if (ar == T{0}) continue;
        const T* wrow = l.weights.data() + (j * m + r) * out;
        for (std::size_t t = l.row_start[j]; t < l.row_start[j + 1]; ++t) {
          const std::size_t base = std::size_t{cols[t]} * m;
          for (std::size_t c = 0; c < m; ++c) zr[base + c] += ar * wrow[base + c];
        }
      }
    }
  }
}

template <typename T>
void activate(Activation act, const Matrix<T>& z, Matrix<T>& a) {
  a.resize(z.rows(), z.cols());
  const T* src = z.data();
  T* dst = a.data();
  const std::size_t n = z.size();
  if (act == Activation::relu) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] > T{0} ? src[i] : T{0};
  } else {
    for (std::size_t i = 0; i < n; ++i) dst[i] = T{1} / (T{1} + std::exp(-src[i]));
  }
}

template <typename T>
void softmax_rows(const Matrix<T>& z, Matrix<T>& a) {
  a.resize(z.rows(), z.cols());
  for (std::size_t s = 0; s < z.rows(); ++s) {
    const auto zr = z.row(s);
    auto ar = a.row(s);
    const T mx = *std::max_element(zr.begin(), zr.end());
    T sum{0};
    for (std::size_t c = 0; c < zr.size(); ++c) {
      ar[c] = std::exp(zr[c] - mx);
      sum += ar[c];
    }
    for (auto& v : ar) v /= sum;
  }
}

// multiplies the back-propagated signal in place by f'(z)
template <typename T>
void apply_activation_derivative(Activation act, const Matrix<T>& z, const Matrix<T>& a, Matrix<T>& delta) {
  const std::size_t n = delta.size();
  T* d = delta.data();
  if (act == Activation::relu) {
    const T* zz = z.data();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(zz[i] > T{0})) d[i] = T{0};
    }
  } else {
    const T* aa = a.data();
    for (std::size_t i = 0; i < n; ++i) d[i] *= aa[i] * (T{1} - aa[i]);
  }
}

// Accumulates weight and bias gradients of one layer and, when prev_delta is
// non-null, the signal passed to the layer below (before f').
template <typename T>
void layer_backward(const SparseLayer<T>& l, const Matrix<T>& a_prev, const Matrix<T>& delta, Matrix<T>& grad_w,
                    std::vector<T>& grad_b, Matrix<T>* prev_delta) {
  const std::size_t m = l.shape.motif;
  const std::size_t br = l.shape.block_rows();
  const std::size_t bc = l.shape.block_cols();
  const std::size_t n = delta.rows();
  const std::size_t out = l.shape.out_neurons;
  const std::uint32_t* cols = l.active_cols.data();

  grad_w = Matrix<T>(l.weights.rows(), l.weights.cols());
  grad_b.assign(out, T{0});
  if (prev_delta != nullptr) prev_delta->resize(n, l.shape.in_neurons);

  for (std::size_t s = 0; s < n; ++s) {
    const T* d = delta.row(s).data();
    for (std::size_t c = 0; c < out; ++c) grad_b[c] += d[c];
  }

  if (l.mode == WeightMode::shared) {
    std::vector<T> pooled(m == 1 ? 0 : br);
    std::vector<T> pooled_delta(m == 1 ? 0 : bc);
    for (std::size_t s = 0; s < n; ++s) {
      const T* a = a_prev.row(s).data();
      const T* p = a;
      const T* dd = delta.row(s).data();
      if (m != 1) {
        pool_motifs(a, br, m, pooled.data());
        pool_motifs(dd, bc, m, pooled_delta.data());
        p = pooled.data();
        dd = pooled_delta.data();
      }
      T* pd = prev_delta != nullptr ? prev_delta->row(s).data() : nullptr;
      for (std::size_t j = 0; j < br; ++j) {
        const T pj = p[j];
        const std::size_t begin = l.row_start[j];
        const std::size_t end = l.row_start[j + 1];
        T* g = grad_w.data() + j * bc;
        if (pj != T{0}) {
          for (std::size_t t = begin; t < end; ++t) g[cols[t]] += pj * dd[cols[t]];
        }
        if (pd != nullptr) {
          const T* w = l.weights.data() + j * bc;
          T acc{0};
          for (std::size_t t = begin; t < end; ++t) acc += w[cols[t]] * dd[cols[t]];
          for (std::size_t r = 0; r < m; ++r) pd[j * m + r] = acc;
        }
      }
    }
  } else {
    for (std::size_t s = 0; s < n; ++s) {
      const T* a = a_prev.row(s).data();
      const T* dd = delta.row(s).data();
      T* pd = prev_delta != nullptr ? prev_delta->row(s).data() : nullptr;
      for (std::size_t j = 0; j < br; ++j) {
        for (std::size_t r = 0; r < m; ++r) {
          const std::size_t row = j * m + r;
          const T ar = a[row];
          T* g = grad_w.data() + row * out;
          const T* w = l.weights.data() + row * out;
          T acc{0};
          for (std::size_t t = l.row_start[j]; t < l.row_start[j + 1]; ++t) {
            const std::size_t base = std::size_t{cols[t]} * m;
            for (std::size_t c = 0; c < m; ++c) {
              g[base + c] += ar * dd[base + c];
              acc += w[base + c] * dd[base + c];
            }
          }
          if (pd != nullptr) pd[row] = acc;
        }
      }
    }
  }

  const T inv_n = T{1} / static_cast<T>(n);
  for (auto& v : grad_w.values()) v *= inv_n;
  for (auto& v : grad_b) v *= inv_n;
}

template <typename T>
void check_batch(const Matrix<T>& x, std::size_t cols, const char* what) {
  if (x.rows() == 0) throw ShapeError(std::string(what) + " is empty");
  if (x.cols() != cols) {
    throw ShapeError(std::string(what) + " has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(cols));
  }
}

}  // namespace

template <typename T>
ForwardCache<T> forward(const BasicNetwork<T>& network, const Matrix<T>& batch) {
  check_batch(batch, network.input_size(), "batch");
  const std::size_t layers = network.layer_count();
  ForwardCache<T> cache;
  cache.z_list.resize(layers);
  cache.a_list.resize(layers + 1);
  cache.a_list[0] = batch;
  for (std::size_t i = 0; i < layers; ++i) {
    layer_forward(network.layer(i), cache.a_list[i], cache.z_list[i]);
    if (i + 1 == layers) {
      softmax_rows(cache.z_list[i], cache.a_list[i + 1]);
    } else {
      activate(network.activation(), cache.z_list[i], cache.a_list[i + 1]);
    }
  }
  return cache;
}

template <typename T>
double loss(const ForwardCache<T>& cache, const Matrix<T>& y_true) {
  if (cache.a_list.empty()) throw ShapeError("empty forward cache");
  const Matrix<T>& p = cache.a_list.back();
  if (p.rows() != y_true.rows() || p.cols() != y_true.cols()) throw ShapeError("prediction and label shapes differ");
  double total = 0.0;
  for (std::size_t s = 0; s < p.rows(); ++s) {
    for (std::size_t c = 0; c < p.cols(); ++c) {
      const double y = static_cast<double>(y_true(s, c));
      if (y != 0.0) total -= y * std::log(std::max(static_cast<double>(p(s, c)), 1e-12));
    }
  }
  return total / static_cast<double>(p.rows());
}

template <typename T>
Gradients<T> backward(const BasicNetwork<T>& network, const ForwardCache<T>& cache, const Matrix<T>& y_true) {
  const std::size_t layers = network.layer_count();
  if (cache.z_list.size() != layers || cache.a_list.size() != layers + 1) {
    throw StaleCacheError("cache layer count does not match the network");
  }
  const std::size_t n = cache.a_list[0].rows();
  for (std::size_t i = 0; i < layers; ++i) {
    const LayerShape s = network.layer(i).shape;
    if (cache.a_list[i].cols() != s.in_neurons || cache.z_list[i].cols() != s.out_neurons ||
        cache.a_list[i].rows() != n || cache.z_list[i].rows() != n || cache.a_list[i + 1].rows() != n ||
        cache.a_list[i + 1].cols() != s.out_neurons) {
      throw StaleCacheError("cache shapes do not match layer " + std::to_string(i));
    }
  }
  const Matrix<T>& out = cache.a_list.back();
  if (y_true.rows() != out.rows() || y_true.cols() != out.cols()) {
    throw ShapeError("label shape does not match network output");
  }

  Gradients<T> grads;
  grads.weights.resize(layers);
  grads.bias.resize(layers);

  Matrix<T> delta = out;
  for (std::size_t k = 0; k < delta.size(); ++k) delta.values()[k] -= y_true.values()[k];

  Matrix<T> prev;
  for (std::size_t i = layers; i-- > 0;) {
    const bool propagate = i > 0;
    layer_backward(network.layer(i), cache.a_list[i], delta, grads.weights[i], grads.bias[i],
                   propagate ? &prev : nullptr);
    if (propagate) {
      apply_activation_derivative(network.activation(), cache.z_list[i - 1], cache.a_list[i], prev);
      std::swap(delta, prev);
    }
  }
  return grads;
}

template <typename T>
void sgd_step(BasicNetwork<T>& network, const Gradients<T>& gradients, T learning_rate) {
  if (gradients.weights.size() != network.layer_count() || gradients.bias.size() != network.layer_count()) {
    throw ShapeError("gradient layer count does not match the network");
  }
  for (std::size_t i = 0; i < network.layer_count(); ++i) {
    SparseLayer<T>& l = network.layer(i);
    const Matrix<T>& g = gradients.weights[i];
    if (g.rows() != l.weights.rows() || g.cols() != l.weights.cols() || gradients.bias[i].size() != l.bias.size()) {
      throw ShapeError("gradient shape does not match layer " + std::to_string(i));
    }
    const std::size_t m = l.shape.motif;
    const std::size_t cols = l.weights.cols();
    for (std::size_t j = 0; j < l.shape.block_rows(); ++j) {
      for (std::size_t t = l.row_start[j]; t < l.row_start[j + 1]; ++t) {
        const std::size_t k = l.active_cols[t];
        if (l.mode == WeightMode::shared) {
          l.weights(j, k) -= learning_rate * g(j, k);
          continue;
        }
        for (std::size_t r = 0; r < m; ++r) {
          T* w = l.weights.data() + (j * m + r) * cols + k * m;
          const T* gr = g.data() + (j * m + r) * cols + k * m;
          for (std::size_t c = 0; c < m; ++c) w[c] -= learning_rate * gr[c];
        }
      }
    }
    for (std::size_t c = 0; c < l.bias.size(); ++c) l.bias[c] -= learning_rate * gradients.bias[i][c];
  }
}

template <typename T>
std::vector<std::size_t> predict(const BasicNetwork<T>& network, const Matrix<T>& x) {
  check_batch(x, network.input_size(), "input");
  constexpr std::size_t chunk = 1024;
  std::vector<std::size_t> labels;
  labels.reserve(x.rows());
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < x.rows(); begin += chunk) {
    const std::size_t end = std::min(x.rows(), begin + chunk);
    idx.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) idx[i - begin] = i;
    const ForwardCache<T> cache = forward(network, x.gather_rows(idx));
    const Matrix<T>& p = cache.a_list.back();
    for (std::size_t s = 0; s < p.rows(); ++s) labels.push_back(argmax(p.row(s)));
  }
  return labels;
}

template <typename T>
double predict_accuracy(const BasicNetwork<T>& network, const Matrix<T>& x, const Matrix<T>& y_true) {
  if (y_true.rows() != x.rows() || y_true.cols() != network.output_size()) {
    throw ShapeError("label shape does not match inputs or network output");
  }
  const std::vector<std::size_t> labels = predict(network, x);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < labels.size(); ++s) hits += labels[s] == argmax(y_true.row(s)) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

#define MOTIFSET_INSTANTIATE(T)                                                                          \
  template class BasicNetwork<T>;                                                                        \
  template BasicNetwork<T> init_network<T>(const MotifTopology&, const NetworkOptions&, std::uint64_t); \
  template ForwardCache<T> forward<T>(const BasicNetwork<T>&, const Matrix<T>&);                         \
  template double loss<T>(const ForwardCache<T>&, const Matrix<T>&);                                     \
  template Gradients<T> backward<T>(const BasicNetwork<T>&, const ForwardCache<T>&, const Matrix<T>&);   \
  template void sgd_step<T>(BasicNetwork<T>&, const Gradients<T>&, T);                                   \
  template std::vector<std::size_t> predict<T>(const BasicNetwork<T>&, const Matrix<T>&);                \
  template double predict_accuracy<T>(const BasicNetwork<T>&, const Matrix<T>&, const Matrix<T>&);

MOTIFSET_INSTANTIATE(double)
MOTIFSET_INSTANTIATE(float)

#undef MOTIFSET_INSTANTIATE

}  // namespace motifset
