#include "meshspec/nn/model.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "meshspec/errors.hpp"

namespace meshspec::nn {

using json = nlohmann::json;

std::size_t ModelConfig::parameter_count() const {
  std::size_t n = 0;
  auto dense = [](int in, int out) {
    return static_cast<std::size_t>(in) * out + out;  // weight + bias
  };
  int width = in_dim;
  for (int ch : conv_channels) {
    n += 2 * static_cast<std::size_t>(width) * ch + ch;  // conv: W1, W2, bias
    n += dense(ch, ch);                                  // block linear
    width = ch;
  }
  for (int h : mlp_hidden) {
    n += dense(width, h);
    width = h;
  }
  n += dense(width, out_dim);
  return n;
}

std::string ModelConfig::preset_name() const {
  if (mlp_hidden == std::vector<int>{8192, 4096, 2048, 1024}) return "full";
  if (mlp_hidden == std::vector<int>{256, 128, 64, 32}) return "desk";
  return "custom";
}

namespace {

template <typename S>
Tensor<S> init_param(int rows, int cols, int fan_in, std::mt19937_64& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<S> t = Tensor<S>::zeros(rows, cols, /*requires_grad=*/true);
  auto v = t.value();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) v(i, j) = static_cast<S>(dist(rng));
  return t;
}

template <typename S>
LinearLayer<S> init_linear(int in, int out, std::mt19937_64& rng) {
  LinearLayer<S> l;
  l.weight = init_param<S>(in, out, in, rng);
  l.bias = init_param<S>(1, out, in, rng);
  return l;
}

template <typename S>
GraphConvLayer<S> init_conv(int in, int out, std::mt19937_64& rng) {
  GraphConvLayer<S> c;
  c.weight_self = init_param<S>(in, out, in, rng);
  c.weight_neigh = init_param<S>(in, out, in, rng);
  c.bias = init_param<S>(1, out, in, rng);
  return c;
}

}  // namespace

template <typename S>
GcnModel<S>::GcnModel(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  std::mt19937_64 rng(seed);
  int width = config_.in_dim;
  for (int b = 0; b < 3; ++b) {
    int ch = config_.conv_channels[b];
    blocks_[b].conv = init_conv<S>(width, ch, rng);
    blocks_[b].lin = init_linear<S>(ch, ch, rng);
    width = ch;
  }
  for (int h : config_.mlp_hidden) {
    mlp_.push_back(init_linear<S>(width, h, rng));
    width = h;
  }
  mlp_.push_back(init_linear<S>(width, config_.out_dim, rng));
}

template <typename S>
void GcnModel<S>::set_input_transform(std::vector<double> mean, std::vector<double> scale) {
  if (mean.size() != static_cast<std::size_t>(config_.in_dim) || mean.size() != scale.size())
    throw NumericalError("input transform width does not match in_dim");
  for (double s : scale)
    if (!(s > 0)) throw NumericalError("input transform scale must be positive");
  config_.input_mean = std::move(mean);
  config_.input_scale = std::move(scale);
}

template <typename S>
Tensor<S> GcnModel<S>::forward(const GraphBatch<S>& batch) const {
  const S slope = static_cast<S>(config_.leaky_slope);
  Tensor<S> x = [&] {
    if (config_.input_mean.empty()) return Tensor<S>::from_matrix(batch.node_features);
    MatX<S> transformed = batch.node_features;
    for (int c = 0; c < config_.in_dim; ++c) {
      const S mean = static_cast<S>(config_.input_mean[c]);
      const S inv = static_cast<S>(1.0 / config_.input_scale[c]);
      transformed.col(c) = (transformed.col(c).array() - mean) * inv;
    }
    return Tensor<S>::from_matrix(transformed);
  }();
  for (const auto& block : blocks_) {
    x = block.conv.forward(x, batch.edges);
    x = leaky_relu(x, slope);
    x = block.lin.forward(x);
  }
  Tensor<S> pooled = segment_mean(x, batch.graph_assignment, batch.batch_size);
  Tensor<S> h = pooled;
  for (std::size_t i = 0; i + 1 < mlp_.size(); ++i)
    h = leaky_relu(mlp_[i].forward(h), slope);
  return mlp_.back().forward(h);
}

template <typename S>
std::vector<std::pair<std::string, Tensor<S>>> GcnModel<S>::parameters() const {
  std::vector<std::pair<std::string, Tensor<S>>> out;
  for (int b = 0; b < 3; ++b) {
    std::string p = "block" + std::to_string(b);
    out.emplace_back(p + ".conv.weight_self", blocks_[b].conv.weight_self);
    out.emplace_back(p + ".conv.weight_neigh", blocks_[b].conv.weight_neigh);
    out.emplace_back(p + ".conv.bias", blocks_[b].conv.bias);
    out.emplace_back(p + ".lin.weight", blocks_[b].lin.weight);
    out.emplace_back(p + ".lin.bias", blocks_[b].lin.bias);
  }
  for (std::size_t i = 0; i < mlp_.size(); ++i) {
    std::string p = "mlp" + std::to_string(i);
    out.emplace_back(p + ".weight", mlp_[i].weight);
    out.emplace_back(p + ".bias", mlp_[i].bias);
  }
  return out;
}

template <typename S>
std::size_t GcnModel<S>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : parameters()) n += static_cast<std::size_t>(t.rows()) * t.cols();
  return n;
}

template <typename S>
void save_checkpoint(const GcnModel<S>& model, const std::filesystem::path& path) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "gcn-spectrum-model";
  j["scalar"] = sizeof(S) == 4 ? "float32" : "float64";
  j["seed"] = model.seed();
  j["epoch"] = model.epoch();
  const auto& cfg = model.config();
  j["config"] = {{"in_dim", cfg.in_dim},
                 {"conv_channels", cfg.conv_channels},
                 {"mlp_hidden", cfg.mlp_hidden},
                 {"out_dim", cfg.out_dim},
                 {"leaky_slope", cfg.leaky_slope},
                 {"preset", cfg.preset_name()}};
  if (!cfg.input_mean.empty()) {
    j["config"]["input_mean"] = cfg.input_mean;
    j["config"]["input_scale"] = cfg.input_scale;
  }
  json params = json::array();
  for (const auto& [name, t] : model.parameters()) {
    json p;
    p["name"] = name;
    p["shape"] = {t.rows(), t.cols()};
    const auto v = t.value();
    std::vector<double> data(v.size());
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (Eigen::Index c = 0; c < v.cols(); ++c)
        data[static_cast<std::size_t>(i) * v.cols() + c] = static_cast<double>(v(i, c));
    p["data"] = std::move(data);
    params.push_back(std::move(p));
  }
  j["parameters"] = std::move(params);

  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("checkpoint write failed for " + path.string());
}

template <typename S>
GcnModel<S> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, std::string("invalid checkpoint JSON: ") + e.what());
  }
  if (j.value("kind", "") != "gcn-spectrum-model" || j.value("format_version", 0) != 1)
    throw ParseError(path.string(), 0, "not a version-1 model checkpoint");

  ModelConfig cfg;
  const auto& jc = j.at("config");
  cfg.in_dim = jc.at("in_dim").get<int>();
  auto ch = jc.at("conv_channels").get<std::vector<int>>();
  if (ch.size() != 3) throw ParseError(path.string(), 0, "expected 3 conv channel widths");
  std::copy(ch.begin(), ch.end(), cfg.conv_channels.begin());
  cfg.mlp_hidden = jc.at("mlp_hidden").get<std::vector<int>>();
  cfg.out_dim = jc.at("out_dim").get<int>();
  cfg.leaky_slope = jc.value("leaky_slope", 0.01);
  if (jc.contains("input_mean")) {
    cfg.input_mean = jc["input_mean"].get<std::vector<double>>();
    cfg.input_scale = jc["input_scale"].get<std::vector<double>>();
  }

  GcnModel<S> model(cfg, j.value("seed", std::uint64_t{0}));
  model.epoch() = j.value("epoch", 0);

  auto params = model.parameters();
  const auto& jp = j.at("parameters");
  if (jp.size() != params.size())
    throw ParseError(path.string(), 0,
                     "checkpoint has " + std::to_string(jp.size()) + " tensors, model needs " +
                         std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = jp[i];
    auto& [name, tensor] = params[i];
    if (p.at("name").get<std::string>() != name)
      throw ParseError(path.string(), 0, "parameter order mismatch at " + name);
    auto shape = p.at("shape").get<std::vector<int>>();
    if (shape.size() != 2 || shape[0] != tensor.rows() || shape[1] != tensor.cols())
      throw ParseError(path.string(), 0, "shape mismatch for " + name);
    const auto& data = p.at("data");
    if (static_cast<Eigen::Index>(data.size()) !=
        static_cast<Eigen::Index>(tensor.rows()) * tensor.cols())
      throw ParseError(path.string(), 0, "data length mismatch for " + name);
    auto v = tensor.value();
    for (int r = 0; r < tensor.rows(); ++r)
      for (int c = 0; c < tensor.cols(); ++c) {
        double dv = data[static_cast<std::size_t>(r) * tensor.cols() + c];
        v(r, c) = static_cast<S>(dv);
      }
  }
  return model;
}

template class GcnModel<float>;
template class GcnModel<double>;
template void save_checkpoint<float>(const GcnModel<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const GcnModel<double>&, const std::filesystem::path&);
template GcnModel<float> load_checkpoint<float>(const std::filesystem::path&);
template GcnModel<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace meshspec::nn
