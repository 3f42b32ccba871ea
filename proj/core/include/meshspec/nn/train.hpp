#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "meshspec/nn/model.hpp"

namespace meshspec::nn {

enum class OptimizerKind { adam, sgd };
enum class LossKind { l1, l2, rpd };

struct LrSpan {
  int epochs = 0;
  double lr = 0.0;
};

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  std::vector<LrSpan> schedule{{500, 1e-4}, {500, 1e-5}};  // spans partition [0, epochs)
  double weight_decay = 1e-5;
  int batch_size = 16;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::rpd;
  double rpd_epsilon = 1e-8;
  int checkpoint_every = 0;  // 0 disables checkpoints
  std::filesystem::path checkpoint_dir;

  int total_epochs() const {
    int n = 0;
    for (const auto& s : schedule) n += s.epochs;
    return n;
  }
  double lr_at(int epoch) const;
  void validate() const;  // throws on empty/invalid schedule or lr <= 0
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  float train_loss = 0;
  float val_loss = 0;
  double lr = 0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
};

/// Plain SGD / Adam with classic L2-coupled weight decay (decay added to
/// the gradient before the moment updates). State is per-parameter.
template <typename S>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double weight_decay);

  void step(std::vector<std::pair<std::string, Tensor<S>>>& params, double lr);

 private:
  OptimizerKind kind_;
  double weight_decay_;
  long t_ = 0;
  std::vector<std::vector<S>> first_moment_, second_moment_;
};

/// Labeled graphs split before training; indices refer to `samples`.
struct DatasetSplit {
  std::vector<int> train, val, test;
};

/// Deterministic 80:10:10 index split.
DatasetSplit split_dataset(int count, std::uint64_t seed, double train_frac = 0.8,
                           double val_frac = 0.1);

/// Regression warm start: set the output-layer bias to the per-entry mean
/// of the training targets. The RPD loss is flat wherever prediction and
/// target differ in sign, so heads starting at the target scale matter.
template <typename S>
void initialize_output_bias(GcnModel<S>& model, const std::vector<GraphData<S>>& samples,
                            const std::vector<int>& indices);

/// Install a per-column z-score input transform computed over the training
/// split's node features. The raw feature columns span several orders of
/// magnitude, which stalls optimization at small learning rates.
template <typename S>
void standardize_inputs(GcnModel<S>& model, const std::vector<GraphData<S>>& samples,
                        const std::vector<int>& indices);

template <typename S>
TrainResult train(GcnModel<S>& model, const std::vector<GraphData<S>>& samples,
                  const DatasetSplit& split, const TrainConfig& config);

/// Batched no-grad evaluation of the configured loss over `indices`.
template <typename S>
double evaluate_loss(const GcnModel<S>& model, const std::vector<GraphData<S>>& samples,
                     const std::vector<int>& indices, const TrainConfig& config);

/// Per-sample predictions (no grad), rows aligned with `indices`.
template <typename S>
MatX<S> predict(const GcnModel<S>& model, const std::vector<GraphData<S>>& samples,
                const std::vector<int>& indices, int batch_size = 16);

void write_history_csv(const std::vector<EpochRecord>& history,
                       const std::filesystem::path& path);

extern template class Optimizer<float>;
extern template class Optimizer<double>;
extern template void initialize_output_bias<float>(GcnModel<float>&,
                                                   const std::vector<GraphData<float>>&,
                                                   const std::vector<int>&);
extern template void initialize_output_bias<double>(GcnModel<double>&,
                                                    const std::vector<GraphData<double>>&,
                                                    const std::vector<int>&);
extern template void standardize_inputs<float>(GcnModel<float>&,
                                               const std::vector<GraphData<float>>&,
                                               const std::vector<int>&);
extern template void standardize_inputs<double>(GcnModel<double>&,
                                                const std::vector<GraphData<double>>&,
                                                const std::vector<int>&);
extern template TrainResult train<float>(GcnModel<float>&, const std::vector<GraphData<float>>&,
                                         const DatasetSplit&, const TrainConfig&);
extern template TrainResult train<double>(GcnModel<double>&,
                                          const std::vector<GraphData<double>>&,
                                          const DatasetSplit&, const TrainConfig&);
extern template double evaluate_loss<float>(const GcnModel<float>&,
                                            const std::vector<GraphData<float>>&,
                                            const std::vector<int>&, const TrainConfig&);
extern template double evaluate_loss<double>(const GcnModel<double>&,
                                             const std::vector<GraphData<double>>&,
                                             const std::vector<int>&, const TrainConfig&);
extern template MatX<float> predict<float>(const GcnModel<float>&,
                                           const std::vector<GraphData<float>>&,
                                           const std::vector<int>&, int);
extern template MatX<double> predict<double>(const GcnModel<double>&,
                                             const std::vector<GraphData<double>>&,
                                             const std::vector<int>&, int);

}  // namespace meshspec::nn
