#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "meshspec/fem.hpp"
#include "meshspec/mesh.hpp"
#include "meshspec/remesh.hpp"

namespace meshspec {

enum class RejectReason {
  multi_component,
  boundary,
  non_manifold,
  genus_exceeded,
  remesh_failure,
  duplicate,
  numerical_anomaly,
  parse_error,
};

const char* to_string(RejectReason reason);

struct CurationPolicy {
  bool require_single_component = true;
  bool require_closed = true;
  int max_genus = 2;
  int target_vertex_min = 1750;
  int target_vertex_max = 2250;
  double dedupe_threshold = 1e-8;  // absolute max |lambda_i^A - lambda_i^B|
  bool dedupe_relative = false;    // optional per-component relative mode
  int rotations_per_mesh = 5;
  std::uint64_t rng_seed = 0;
  int spectrum_k = 50;
  int remesh_max_iterations = 12;
};

/// Pure predicate over the validation report. nullopt means accepted.
std::optional<RejectReason> filter(const MeshReport& report, const CurationPolicy& policy);

/// Groups of spectra equal under the threshold relation (transitive
/// closure). Every returned group has >= 2 members, listed ascending; the
/// first member is the kept representative. All spectra must share k.
std::vector<std::vector<int>> dedupe_groups(const std::vector<std::vector<double>>& spectra,
                                            double threshold, bool relative = false);

/// Uniformly distributed random rotation (Shoemake quaternion sampling).
Eigen::Quaterniond random_rotation(std::mt19937_64& rng);

/// n rotated copies of a (normalized) mesh. The FEM spectrum is rotation
/// invariant, so every copy shares the source's label.
std::vector<TriMesh> augment(const TriMesh& mesh, int n_rotations, std::uint64_t seed);

// --- synthetic dataset -----------------------------------------------------

enum class ShapeClass {
  box,
  sphere,
  ellipsoid,
  cylinder,
  cone,
  capsule,
  torus,
  square_pyramid,
  triangular_prism,
  hexagonal_prism,
};

const std::vector<ShapeClass>& all_shape_classes();
const char* to_string(ShapeClass cls);
std::optional<ShapeClass> shape_class_from_string(const std::string& name);

struct SynthSample {
  std::string id;
  ShapeClass shape_class;
  TriMesh mesh;
  std::vector<double> eigenvalues;  // first k, from the FEM solver
};

struct SynthOptions {
  int eigenvalue_count = 10;
  bool normalize = true;  // unit-cube normalize before labeling
  int resolution = 1;     // generator refinement level (>= 0)
};

/// Seeded primitives with random per-axis dimensions in [0.5, 2] and a
/// random orientation, labeled with their FEM spectrum.
std::vector<SynthSample> synth_dataset(const std::vector<ShapeClass>& classes, int n_per_class,
                                       std::uint64_t seed, const SynthOptions& options = {});

/// Generator only (no labels); exposed for tests and the CLI.
TriMesh synth_mesh(ShapeClass cls, std::mt19937_64& rng, int resolution);

// --- corpus manifest -------------------------------------------------------

struct ManifestRecord {
  std::string id;
  std::string source;  // input file path
  std::string status;  // "accepted" | "rejected"
  std::optional<RejectReason> reason;
  std::string duplicate_of;  // set when reason == duplicate
  std::string detail;        // free-form diagnostics (parse errors etc.)
  MeshReport report;
  double scale_factor = 0.0;
  std::string mesh_file;      // normalized remeshed mesh, relative to out dir
  std::string spectrum_file;  // spectrum JSON, relative to out dir
  std::vector<std::string> augmentations;
  std::string split;  // "train" | "val" | "test" for accepted sources
};

struct DatasetManifest {
  int schema_version = 1;
  CurationPolicy policy;
  std::vector<ManifestRecord> records;  // ordered by id
  int processed_this_run = 0;           // 0 on a resumed no-op run

  const ManifestRecord* find(const std::string& id) const;
  std::map<std::string, int> rejection_tally() const;
};

/// Filter -> remesh -> spectrum -> dedupe -> normalize -> augment -> split
/// over every mesh file in `corpus_dir` (sorted by filename). Re-running
/// over an existing manifest skips completed records. Per-record failures
/// are recorded, never fatal.
DatasetManifest build_manifest(const std::filesystem::path& corpus_dir,
                               const std::filesystem::path& out_dir,
                               const CurationPolicy& policy);

DatasetManifest load_manifest(const std::filesystem::path& manifest_path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& manifest_path);

/// Spectrum record written next to the manifest; also the training-label
/// format ({id, k, eigenvalues, scale_factor, solve_ms}).
void save_spectrum_json(const Spectrum& spectrum, const std::string& id,
                        const std::filesystem::path& path);
Spectrum load_spectrum_json(const std::filesystem::path& path, std::string* id = nullptr);

}  // namespace meshspec
