#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "meshspec/nn/graph.hpp"

namespace meshspec::cli {

struct LabeledMesh {
  std::string id;
  std::filesystem::path mesh_path;
  std::vector<double> eigenvalues;  // normalized-mesh spectrum, lambda_1 first
  double scale_factor = 1.0;
  std::string split;  // empty when the dataset carries no split
};

/// Reads either a curation output directory (manifest.jsonl + meshes/ +
/// spectra/) or a synth directory (labels.jsonl + meshes/). Augmented
/// copies share their source's spectrum and split.
std::vector<LabeledMesh> load_labeled_dataset(const std::filesystem::path& dir);

/// Feature extraction for a labeled mesh; target = eigenvalues 2..out+1
/// (the leading zero eigenvalue is never a training target).
nn::GraphData<float> to_graph(const LabeledMesh& entry, int out_dim);

/// Graphs for every entry, extracted in parallel.
std::vector<nn::GraphData<float>> to_graphs(const std::vector<LabeledMesh>& entries, int out_dim);

}  // namespace meshspec::cli
