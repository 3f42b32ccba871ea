#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "meshspec/nn/graph.hpp"
#include "meshspec/nn/tensor.hpp"

namespace meshspec::nn {

/// Architecture description. Three graph-convolution blocks feed a global
/// mean pool and a 5-layer MLP; only the MLP widths differ between the
/// desk preset and the full-width one.
struct ModelConfig {
  int in_dim = 8;
  std::array<int, 3> conv_channels{64, 128, 256};
  std::vector<int> mlp_hidden{256, 128, 64, 32};  // output layer appended
  int out_dim = 49;
  double leaky_slope = 0.01;
  // optional per-column affine input transform (x - mean) / scale, applied
  // inside forward(); empty means identity. Travels with the checkpoint.
  std::vector<double> input_mean, input_scale;

  static ModelConfig desk(int out_dim = 49) {
    ModelConfig c;
    c.mlp_hidden = {256, 128, 64, 32};
    c.out_dim = out_dim;
    return c;
  }
  static ModelConfig full(int out_dim = 49) {
    ModelConfig c;
    c.mlp_hidden = {8192, 4096, 2048, 1024};
    c.out_dim = out_dim;
    return c;
  }

  /// Exact trainable-parameter count for this configuration.
  std::size_t parameter_count() const;
  std::string preset_name() const;
};

template <typename S>
struct LinearLayer {
  Tensor<S> weight;  // in x out
  Tensor<S> bias;    // 1 x out

  Tensor<S> forward(const Tensor<S>& x) const { return add_rowvec(matmul(x, weight), bias); }
};

/// x' = x W1 + (weighted neighbor sum of x) W2 + bias. The aggregation is a
/// weighted sum over incoming edges, not a mean.
template <typename S>
struct GraphConvLayer {
  Tensor<S> weight_self;   // in x out
  Tensor<S> weight_neigh;  // in x out
  Tensor<S> bias;          // 1 x out

  Tensor<S> forward(const Tensor<S>& x, const std::shared_ptr<const EdgeData<S>>& edges) const {
    Tensor<S> self_term = matmul(x, weight_self);
    Tensor<S> neigh_term = matmul(weighted_neighbor_sum(x, edges), weight_neigh);
    return add_rowvec(add(self_term, neigh_term), bias);
  }
};

template <typename S>
struct GcnBlock {
  GraphConvLayer<S> conv;
  LinearLayer<S> lin;  // width -> same width
};

/// The spectrum predictor. Parameters are created once (seeded uniform
/// +-1/sqrt(fan_in)) and shared across forward passes; each forward builds
/// a fresh autodiff graph over them.
template <typename S>
class GcnModel {
 public:
  GcnModel(ModelConfig config, std::uint64_t seed);

  Tensor<S> forward(const GraphBatch<S>& batch) const;

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  int& epoch() { return epoch_; }
  int epoch() const { return epoch_; }

  /// Install the input transform (sizes must match in_dim).
  void set_input_transform(std::vector<double> mean, std::vector<double> scale);

  /// Name -> tensor in the documented checkpoint order.
  std::vector<std::pair<std::string, Tensor<S>>> parameters() const;
  std::size_t parameter_count() const;

 private:
  ModelConfig config_;
  std::uint64_t seed_ = 0;
  int epoch_ = 0;
  std::array<GcnBlock<S>, 3> blocks_;
  std::vector<LinearLayer<S>> mlp_;
};

/// JSON checkpoint: format version, config, seed, epoch, and the flat
/// parameter arrays in parameters() order.
template <typename S>
void save_checkpoint(const GcnModel<S>& model, const std::filesystem::path& path);
template <typename S>
GcnModel<S> load_checkpoint(const std::filesystem::path& path);

extern template class GcnModel<float>;
extern template class GcnModel<double>;
extern template void save_checkpoint<float>(const GcnModel<float>&,
                                            const std::filesystem::path&);
extern template void save_checkpoint<double>(const GcnModel<double>&,
                                             const std::filesystem::path&);
extern template GcnModel<float> load_checkpoint<float>(const std::filesystem::path&);
extern template GcnModel<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace meshspec::nn
