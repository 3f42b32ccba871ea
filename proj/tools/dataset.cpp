#include "dataset.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "meshspec/curation.hpp"
#include "meshspec/features.hpp"
#include "meshspec/mesh_io.hpp"
#include "meshspec/parallel.hpp"

namespace meshspec::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<LabeledMesh> load_synth_dir(const fs::path& dir) {
  std::ifstream in(dir / "labels.jsonl");
  if (!in) throw IoError("cannot open " + (dir / "labels.jsonl").string());
  std::vector<LabeledMesh> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError((dir / "labels.jsonl").string(), lineno, e.what());
    }
    if (j.value("kind", "") == "synth-labels") continue;  // header
    LabeledMesh entry;
    entry.id = j.at("id").get<std::string>();
    entry.mesh_path = dir / "meshes" / (entry.id + ".off");
    entry.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    entry.scale_factor = j.value("scale_factor", 1.0);
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<LabeledMesh> load_curated_dir(const fs::path& dir) {
  DatasetManifest manifest = load_manifest(dir / "manifest.jsonl");
  std::vector<LabeledMesh> out;
  for (const auto& rec : manifest.records) {
    if (rec.status != "accepted") continue;
    std::string id;
    Spectrum spectrum = load_spectrum_json(dir / rec.spectrum_file, &id);
    LabeledMesh source;
    source.id = rec.id;
    source.mesh_path = dir / rec.mesh_file;
    source.eigenvalues = spectrum.eigenvalues;
    source.scale_factor = rec.scale_factor;
    source.split = rec.split;
    for (const auto& aug : rec.augmentations) {
      LabeledMesh copy = source;
      copy.id = aug;
      copy.mesh_path = dir / ("meshes/" + aug + ".off");
      out.push_back(std::move(copy));
    }
    out.push_back(std::move(source));
  }
  return out;
}

}  // namespace

std::vector<LabeledMesh> load_labeled_dataset(const fs::path& dir) {
  if (fs::exists(dir / "manifest.jsonl")) return load_curated_dir(dir);
  if (fs::exists(dir / "labels.jsonl")) return load_synth_dir(dir);
  throw IoError("no manifest.jsonl or labels.jsonl under " + dir.string());
}

nn::GraphData<float> to_graph(const LabeledMesh& entry, int out_dim) {
  if (static_cast<int>(entry.eigenvalues.size()) < out_dim + 1)
    throw NumericalError("dataset entry " + entry.id + " has " +
                         std::to_string(entry.eigenvalues.size()) +
                         " eigenvalues, need " + std::to_string(out_dim + 1));
  TriMesh mesh = load_mesh(entry.mesh_path);
  nn::GraphData<float> g = nn::GraphData<float>::from_features(assemble_features(mesh));
  g.target.resize(out_dim);
  for (int j = 0; j < out_dim; ++j)
    g.target(j) = static_cast<float>(entry.eigenvalues[j + 1]);
  return g;
}

std::vector<nn::GraphData<float>> to_graphs(const std::vector<LabeledMesh>& entries,
                                            int out_dim) {
  std::vector<nn::GraphData<float>> graphs(entries.size());
  parallel_for(0, static_cast<int>(entries.size()),
               [&](int i) { graphs[i] = to_graph(entries[i], out_dim); });
  return graphs;
}

}  // namespace meshspec::cli
