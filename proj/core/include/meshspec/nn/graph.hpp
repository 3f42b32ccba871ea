#pragma once

#include <memory>
#include <vector>

#include "meshspec/features.hpp"
#include "meshspec/nn/tensor.hpp"

namespace meshspec::nn {

/// One graph in network precision: casted feature matrix, directed edges,
/// optional regression target.
template <typename S>
struct GraphData {
  MatX<S> node_features;          // N x in_dim
  std::vector<int> src, dst;      // directed edges
  std::vector<S> edge_weight;
  Eigen::Matrix<S, 1, Eigen::Dynamic> target;  // may be empty

  static GraphData from_features(const FeatureSet& fs) {
    GraphData g;
    g.node_features = fs.node_features.cast<S>();
    const auto cols = fs.edge_index.cols();
    g.src.resize(cols);
    g.dst.resize(cols);
    g.edge_weight.resize(cols);
    for (Eigen::Index e = 0; e < cols; ++e) {
      g.src[e] = fs.edge_index(0, e);
      g.dst[e] = fs.edge_index(1, e);
      g.edge_weight[e] = static_cast<S>(fs.edge_weights(e));
    }
    return g;
  }
};

/// Concatenation of B graphs with batch-local vertex offsets. Every edge
/// stays inside its own graph's node range and the assignment covers
/// 0..B-1; the builder enforces both.
template <typename S>
struct GraphBatch {
  MatX<S> node_features;  // (sum N_b) x in_dim
  std::shared_ptr<EdgeData<S>> edges;
  std::shared_ptr<std::vector<int>> graph_assignment;
  int batch_size = 0;
  MatX<S> targets;  // B x out_dim, zero rows when unlabeled
};

template <typename S>
GraphBatch<S> make_batch(const std::vector<const GraphData<S>*>& graphs) {
  GraphBatch<S> batch;
  batch.batch_size = static_cast<int>(graphs.size());
  if (graphs.empty()) throw std::invalid_argument("empty batch");

  int total_nodes = 0;
  std::size_t total_edges = 0;
  for (const auto* g : graphs) {
    total_nodes += static_cast<int>(g->node_features.rows());
    total_edges += g->src.size();
  }
  const int in_dim = static_cast<int>(graphs.front()->node_features.cols());
  batch.node_features.resize(total_nodes, in_dim);
  batch.edges = std::make_shared<EdgeData<S>>();
  batch.edges->src.reserve(total_edges);
  batch.edges->dst.reserve(total_edges);
  batch.edges->weight.reserve(total_edges);
  batch.graph_assignment = std::make_shared<std::vector<int>>();
  batch.graph_assignment->reserve(total_nodes);

  const bool labeled = graphs.front()->target.size() > 0;
  if (labeled) batch.targets.resize(batch.batch_size, graphs.front()->target.size());

  int offset = 0;
  for (int b = 0; b < batch.batch_size; ++b) {
    const GraphData<S>& g = *graphs[b];
    const int n = static_cast<int>(g.node_features.rows());
    if (g.node_features.cols() != in_dim) throw std::invalid_argument("mixed feature widths");
    batch.node_features.middleRows(offset, n) = g.node_features;
    for (std::size_t e = 0; e < g.src.size(); ++e) {
      if (g.src[e] < 0 || g.src[e] >= n || g.dst[e] < 0 || g.dst[e] >= n)
        throw std::invalid_argument("edge endpoint outside its graph");
      batch.edges->src.push_back(g.src[e] + offset);
      batch.edges->dst.push_back(g.dst[e] + offset);
      batch.edges->weight.push_back(g.edge_weight[e]);
    }
    for (int i = 0; i < n; ++i) batch.graph_assignment->push_back(b);
    if (labeled) {
      if (g.target.size() != batch.targets.cols())
        throw std::invalid_argument("mixed target widths");
      batch.targets.row(b) = g.target;
    }
    offset += n;
  }
  return batch;
}

}  // namespace meshspec::nn
