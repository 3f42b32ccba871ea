#include "meshspec/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "meshspec/errors.hpp"

namespace meshspec::nn {

double TrainConfig::lr_at(int epoch) const {
  int at = 0;
  for (const auto& s : schedule) {
    at += s.epochs;
    if (epoch < at) return s.lr;
  }
  return schedule.empty() ? 0.0 : schedule.back().lr;
}

void TrainConfig::validate() const {
  if (schedule.empty()) throw NumericalError("empty learning-rate schedule");
  for (const auto& s : schedule) {
    if (s.epochs <= 0) throw NumericalError("schedule span must cover at least one epoch");
    if (!(s.lr >= 0)) throw NumericalError("learning rate must be non-negative");
  }
  if (batch_size <= 0) throw NumericalError("batch size must be positive");
}

template <typename S>
Optimizer<S>::Optimizer(OptimizerKind kind, double weight_decay)
    : kind_(kind), weight_decay_(weight_decay) {}

template <typename S>
void Optimizer<S>::step(std::vector<std::pair<std::string, Tensor<S>>>& params, double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  if (first_moment_.empty()) {
    first_moment_.resize(params.size());
    second_moment_.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      std::size_t n = params[p].second.value().size();
      first_moment_[p].assign(n, S(0));
      second_moment_[p].assign(n, S(0));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));

  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& tensor = params[p].second;
    auto value = tensor.value();
    auto grad = tensor.grad();
    S* v = value.data();
    S* g = grad.data();
    const std::size_t n = value.size();
    if (kind_ == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < n; ++i) {
        S gi = g[i] + static_cast<S>(weight_decay_) * v[i];
        v[i] -= static_cast<S>(lr) * gi;
      }
      continue;
    }
    S* m = first_moment_[p].data();
    S* s2 = second_moment_[p].data();
    for (std::size_t i = 0; i < n; ++i) {
      S gi = g[i] + static_cast<S>(weight_decay_) * v[i];
      m[i] = static_cast<S>(beta1) * m[i] + static_cast<S>(1.0 - beta1) * gi;
      s2[i] = static_cast<S>(beta2) * s2[i] + static_cast<S>(1.0 - beta2) * gi * gi;
      double mhat = m[i] / bc1;
      double vhat = s2[i] / bc2;
      v[i] -= static_cast<S>(lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
}

template <typename S>
void initialize_output_bias(GcnModel<S>& model, const std::vector<GraphData<S>>& samples,
                            const std::vector<int>& indices) {
  if (indices.empty()) return;
  Eigen::Matrix<double, 1, Eigen::Dynamic> mean =
      Eigen::Matrix<double, 1, Eigen::Dynamic>::Zero(model.config().out_dim);
  for (int idx : indices) {
    if (samples[idx].target.size() != model.config().out_dim)
      throw NumericalError("sample target width does not match model output");
    mean += samples[idx].target.template cast<double>();
  }
  mean /= static_cast<double>(indices.size());
  auto params = model.parameters();
  auto& bias = params.back();  // output layer bias is last in checkpoint order
  for (int j = 0; j < model.config().out_dim; ++j)
    bias.second.value()(0, j) = static_cast<S>(mean(j));
}

template <typename S>
void standardize_inputs(GcnModel<S>& model, const std::vector<GraphData<S>>& samples,
                        const std::vector<int>& indices) {
  if (indices.empty()) return;
  const int dim = model.config().in_dim;
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  long rows = 0;
  for (int idx : indices) {
    const auto& x = samples[idx].node_features;
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      for (int c = 0; c < dim; ++c) mean[c] += static_cast<double>(x(r, c));
    rows += x.rows();
  }
  for (int c = 0; c < dim; ++c) mean[c] /= static_cast<double>(rows);
  for (int idx : indices) {
    const auto& x = samples[idx].node_features;
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      for (int c = 0; c < dim; ++c) {
        double d = static_cast<double>(x(r, c)) - mean[c];
        var[c] += d * d;
      }
  }
  std::vector<double> scale(dim);
  for (int c = 0; c < dim; ++c)
    scale[c] = std::max(std::sqrt(var[c] / static_cast<double>(rows)), 1e-8);
  model.set_input_transform(std::move(mean), std::move(scale));
}

DatasetSplit split_dataset(int count, std::uint64_t seed, double train_frac, double val_frac) {
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  DatasetSplit split;
  int n_train = static_cast<int>(std::lround(train_frac * count));
  int n_val = static_cast<int>(std::lround(val_frac * count));
  n_train = std::min(n_train, count);
  n_val = std::min(n_val, count - n_train);
  split.train.assign(order.begin(), order.begin() + n_train);
  split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  return split;
}

namespace {

template <typename S>
GraphBatch<S> batch_of(const std::vector<GraphData<S>>& samples, const std::vector<int>& indices,
                       std::size_t begin, std::size_t end) {
  std::vector<const GraphData<S>*> ptrs;
  ptrs.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) ptrs.push_back(&samples[indices[i]]);
  return make_batch<S>(ptrs);
}

template <typename S>
Tensor<S> loss_of(const TrainConfig& config, const Tensor<S>& pred, const MatX<S>& target) {
  switch (config.loss) {
    case LossKind::l1: return l1_loss(pred, target);
    case LossKind::l2: return l2_loss(pred, target);
    case LossKind::rpd: return rpd_loss(pred, target, static_cast<S>(config.rpd_epsilon));
  }
  throw NumericalError("unknown loss kind");
}

}  // namespace

template <typename S>
double evaluate_loss(const GcnModel<S>& model, const std::vector<GraphData<S>>& samples,
                     const std::vector<int>& indices, const TrainConfig& config) {
  NoGradGuard no_grad;
  double total = 0.0;
  std::size_t b = static_cast<std::size_t>(config.batch_size);
  for (std::size_t at = 0; at < indices.size(); at += b) {
    std::size_t hi = std::min(at + b, indices.size());
    GraphBatch<S> batch = batch_of(samples, indices, at, hi);
    Tensor<S> pred = model.forward(batch);
    total += static_cast<double>(loss_of(config, pred, batch.targets).scalar()) *
             static_cast<double>(hi - at);
  }
  return indices.empty() ? 0.0 : total / static_cast<double>(indices.size());
}

template <typename S>
MatX<S> predict(const GcnModel<S>& model, const std::vector<GraphData<S>>& samples,
                const std::vector<int>& indices, int batch_size) {
  NoGradGuard no_grad;
  MatX<S> out(indices.size(), model.config().out_dim);
  std::size_t b = static_cast<std::size_t>(batch_size);
  for (std::size_t at = 0; at < indices.size(); at += b) {
    std::size_t hi = std::min(at + b, indices.size());
    GraphBatch<S> batch = batch_of(samples, indices, at, hi);
    Tensor<S> pred = model.forward(batch);
    out.middleRows(at, hi - at) = pred.value();
  }
  return out;
}

template <typename S>
TrainResult train(GcnModel<S>& model, const std::vector<GraphData<S>>& samples,
                  const DatasetSplit& split, const TrainConfig& config) {
  config.validate();
  if (split.train.empty()) throw NumericalError("empty training split");
  for (int idx : split.train)
    if (samples[idx].target.size() != model.config().out_dim)
      throw NumericalError("sample target width does not match model output");

  auto params = model.parameters();
  Optimizer<S> opt(config.optimizer, config.weight_decay);
  std::mt19937_64 rng(config.seed);

  TrainResult result;
  const int epochs = config.total_epochs();
  std::vector<int> order = split.train;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double lr = config.lr_at(epoch);
    std::shuffle(order.begin(), order.end(), rng);

    double train_total = 0.0;
    std::size_t b = static_cast<std::size_t>(config.batch_size);
    for (std::size_t at = 0; at < order.size(); at += b) {
      std::size_t hi = std::min(at + b, order.size());
      GraphBatch<S> batch = batch_of(samples, order, at, hi);
      Tensor<S> pred = model.forward(batch);
      Tensor<S> loss = loss_of(config, pred, batch.targets);
      const double loss_value = static_cast<double>(loss.scalar());
      if (!std::isfinite(loss_value))
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                             ", batch " + std::to_string(at / b));
      train_total += loss_value * static_cast<double>(hi - at);

      for (auto& [name, t] : params) t.zero_grad();
      loss.backward();
      opt.step(params, lr);
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    rec.train_loss = static_cast<float>(train_total / static_cast<double>(order.size()));
    rec.val_loss = static_cast<float>(evaluate_loss(model, samples, split.val, config));
    result.history.push_back(rec);
    model.epoch() = epoch + 1;

    if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty() &&
        ((epoch + 1) % config.checkpoint_every == 0 || epoch + 1 == epochs)) {
      std::filesystem::create_directories(config.checkpoint_dir);
      save_checkpoint(model,
                      config.checkpoint_dir / ("checkpoint_" + std::to_string(epoch + 1) + ".json"));
    }
  }
  return result;
}

void write_history_csv(const std::vector<EpochRecord>& history,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,train_loss,val_loss,lr\n";
  char buf[128];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss, r.val_loss, r.lr);
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path.string());
}

template class Optimizer<float>;
template class Optimizer<double>;
template void initialize_output_bias<float>(GcnModel<float>&,
                                            const std::vector<GraphData<float>>&,
                                            const std::vector<int>&);
template void initialize_output_bias<double>(GcnModel<double>&,
                                             const std::vector<GraphData<double>>&,
                                             const std::vector<int>&);
template void standardize_inputs<float>(GcnModel<float>&, const std::vector<GraphData<float>>&,
                                        const std::vector<int>&);
template void standardize_inputs<double>(GcnModel<double>&,
                                         const std::vector<GraphData<double>>&,
                                         const std::vector<int>&);
template TrainResult train<float>(GcnModel<float>&, const std::vector<GraphData<float>>&,
                                  const DatasetSplit&, const TrainConfig&);
template TrainResult train<double>(GcnModel<double>&, const std::vector<GraphData<double>>&,
                                   const DatasetSplit&, const TrainConfig&);
template double evaluate_loss<float>(const GcnModel<float>&, const std::vector<GraphData<float>>&,
                                     const std::vector<int>&, const TrainConfig&);
template double evaluate_loss<double>(const GcnModel<double>&,
                                      const std::vector<GraphData<double>>&,
                                      const std::vector<int>&, const TrainConfig&);
template MatX<float> predict<float>(const GcnModel<float>&, const std::vector<GraphData<float>>&,
                                    const std::vector<int>&, int);
template MatX<double> predict<double>(const GcnModel<double>&,
                                      const std::vector<GraphData<double>>&,
                                      const std::vector<int>&, int);

}  // namespace meshspec::nn
