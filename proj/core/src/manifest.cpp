#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "meshspec/curation.hpp"
#include "meshspec/mesh_io.hpp"
#include "meshspec/parallel.hpp"

namespace meshspec {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

json report_to_json(const MeshReport& r) {
  json j = {{"vertices", r.vertex_count},
            {"edges", r.edge_count},
            {"faces", r.face_count},
            {"components", r.component_count},
            {"boundary_edges", r.boundary_edge_count},
            {"closed", r.is_closed},
            {"manifold", r.is_manifold},
            {"oriented", r.is_oriented},
            {"euler_characteristic", r.euler_characteristic},
            {"total_area", r.total_area}};
  if (r.genus) j["genus"] = *r.genus;
  return j;
}

MeshReport report_from_json(const json& j) {
  MeshReport r;
  r.vertex_count = j.value("vertices", 0);
  r.edge_count = j.value("edges", 0);
  r.face_count = j.value("faces", 0);
  r.component_count = j.value("components", 0);
  r.boundary_edge_count = j.value("boundary_edges", 0);
  r.is_closed = j.value("closed", false);
  r.is_manifold = j.value("manifold", false);
  r.is_oriented = j.value("oriented", false);
  r.euler_characteristic = j.value("euler_characteristic", 0);
  r.total_area = j.value("total_area", 0.0);
  if (j.contains("genus")) r.genus = j["genus"].get<int>();
  return r;
}

std::optional<RejectReason> reason_from_string(const std::string& s) {
  for (RejectReason r :
       {RejectReason::multi_component, RejectReason::boundary, RejectReason::non_manifold,
        RejectReason::genus_exceeded, RejectReason::remesh_failure, RejectReason::duplicate,
        RejectReason::numerical_anomaly, RejectReason::parse_error}) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

json record_to_json(const ManifestRecord& r) {
  json j = {{"id", r.id}, {"source", r.source}, {"status", r.status}};
  if (r.reason) j["reason"] = to_string(*r.reason);
  if (!r.duplicate_of.empty()) j["duplicate_of"] = r.duplicate_of;
  if (!r.detail.empty()) j["detail"] = r.detail;
  j["report"] = report_to_json(r.report);
  if (r.scale_factor > 0) j["scale_factor"] = r.scale_factor;
  if (!r.mesh_file.empty()) j["mesh_file"] = r.mesh_file;
  if (!r.spectrum_file.empty()) j["spectrum_file"] = r.spectrum_file;
  if (!r.augmentations.empty()) j["augmentations"] = r.augmentations;
  if (!r.split.empty()) j["split"] = r.split;
  return j;
}

ManifestRecord record_from_json(const json& j) {
  ManifestRecord r;
  r.id = j.value("id", "");
  r.source = j.value("source", "");
  r.status = j.value("status", "");
  if (j.contains("reason")) r.reason = reason_from_string(j["reason"].get<std::string>());
  r.duplicate_of = j.value("duplicate_of", "");
  r.detail = j.value("detail", "");
  if (j.contains("report")) r.report = report_from_json(j["report"]);
  r.scale_factor = j.value("scale_factor", 0.0);
  r.mesh_file = j.value("mesh_file", "");
  r.spectrum_file = j.value("spectrum_file", "");
  if (j.contains("augmentations"))
    r.augmentations = j["augmentations"].get<std::vector<std::string>>();
  r.split = j.value("split", "");
  return r;
}

json policy_to_json(const CurationPolicy& p) {
  return {{"require_single_component", p.require_single_component},
          {"require_closed", p.require_closed},
          {"max_genus", p.max_genus},
          {"target_vertex_min", p.target_vertex_min},
          {"target_vertex_max", p.target_vertex_max},
          {"dedupe_threshold", p.dedupe_threshold},
          {"dedupe_relative", p.dedupe_relative},
          {"rotations_per_mesh", p.rotations_per_mesh},
          {"rng_seed", p.rng_seed},
          {"spectrum_k", p.spectrum_k},
          {"remesh_max_iterations", p.remesh_max_iterations}};
}

CurationPolicy policy_from_json(const json& j) {
  CurationPolicy p;
  p.require_single_component = j.value("require_single_component", true);
  p.require_closed = j.value("require_closed", true);
  p.max_genus = j.value("max_genus", 2);
  p.target_vertex_min = j.value("target_vertex_min", 1750);
  p.target_vertex_max = j.value("target_vertex_max", 2250);
  p.dedupe_threshold = j.value("dedupe_threshold", 1e-8);
  p.dedupe_relative = j.value("dedupe_relative", false);
  p.rotations_per_mesh = j.value("rotations_per_mesh", 5);
  p.rng_seed = j.value("rng_seed", std::uint64_t{0});
  p.spectrum_k = j.value("spectrum_k", 50);
  p.remesh_max_iterations = j.value("remesh_max_iterations", 12);
  return p;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

const ManifestRecord* DatasetManifest::find(const std::string& id) const {
  for (const auto& r : records)
    if (r.id == id) return &r;
  return nullptr;
}

std::map<std::string, int> DatasetManifest::rejection_tally() const {
  std::map<std::string, int> tally;
  for (const auto& r : records)
    if (r.reason) ++tally[to_string(*r.reason)];
  return tally;
}

void save_spectrum_json(const Spectrum& spectrum, const std::string& id,
                        const std::filesystem::path& path) {
  json j = {{"id", id},
            {"k", spectrum.k},
            {"eigenvalues", spectrum.eigenvalues},
            {"scale_factor", spectrum.scale ? spectrum.scale->scale_factor : 1.0},
            {"solve_ms", spectrum.stats.solve_ms}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
}

Spectrum load_spectrum_json(const std::filesystem::path& path, std::string* id) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, std::string("invalid spectrum JSON: ") + e.what());
  }
  Spectrum s;
  s.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  s.k = j.value("k", static_cast<int>(s.eigenvalues.size()));
  double sf = j.value("scale_factor", 1.0);
  if (sf != 1.0) {
    ScaleRecord rec;
    rec.scale_factor = sf;
    s.scale = rec;
  }
  s.stats.solve_ms = j.value("solve_ms", 0.0);
  if (id) *id = j.value("id", "");
  return s;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    json header = {{"schema_version", manifest.schema_version},
                   {"kind", "curation-manifest"},
                   {"policy", policy_to_json(manifest.policy)}};
    out << header.dump() << '\n';
    for (const auto& r : manifest.records) out << record_to_json(r).dump() << '\n';
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  DatasetManifest m;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string(), lineno, std::string("invalid manifest line: ") + e.what());
    }
    if (lineno == 1 && j.value("kind", "") == "curation-manifest") {
      m.schema_version = j.value("schema_version", 1);
      if (j.contains("policy")) m.policy = policy_from_json(j["policy"]);
      continue;
    }
    m.records.push_back(record_from_json(j));
  }
  return m;
}

DatasetManifest build_manifest(const std::filesystem::path& corpus_dir,
                               const std::filesystem::path& out_dir,
                               const CurationPolicy& policy) {
  if (!fs::is_directory(corpus_dir)) throw IoError("corpus dir not found: " + corpus_dir.string());
  fs::create_directories(out_dir / "meshes");
  fs::create_directories(out_dir / "spectra");

  // Previous records keyed by id; a record is reusable when terminal.
  std::map<std::string, ManifestRecord> previous;
  fs::path manifest_path = out_dir / "manifest.jsonl";
  if (fs::exists(manifest_path)) {
    for (auto& r : load_manifest(manifest_path).records) previous.emplace(r.id, std::move(r));
  }

  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(corpus_dir)) {
    if (!entry.is_regular_file()) continue;
    if (format_from_extension(entry.path()) == MeshFormat::autodetect) continue;
    inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());

  DatasetManifest manifest;
  manifest.policy = policy;

  struct Pending {
    ManifestRecord record;
    std::vector<double> raw_eigenvalues;  // pre-normalization, dedupe input
    bool reused = false;
  };
  std::vector<Pending> pending(inputs.size());

  parallel_for(0, static_cast<int>(inputs.size()), [&](int i) {
    const fs::path& path = inputs[i];
    ManifestRecord rec;
    rec.id = path.stem().string();
    rec.source = path.string();

    auto prev = previous.find(rec.id);
    if (prev != previous.end() && !prev->second.status.empty()) {
      // terminal record from an earlier run; dedupe still needs the raw
      // spectrum, recovered from the stored (normalized) one
      try {
        if (prev->second.status == "accepted" ||
            (prev->second.reason && *prev->second.reason == RejectReason::duplicate)) {
          Spectrum s = load_spectrum_json(out_dir / prev->second.spectrum_file);
          double s2 = prev->second.scale_factor * prev->second.scale_factor;
          pending[i].raw_eigenvalues = s.eigenvalues;
          for (double& v : pending[i].raw_eigenvalues) v *= s2;
        }
        pending[i].record = prev->second;
        pending[i].reused = true;
        return;
      } catch (const std::exception&) {
        pending[i].raw_eigenvalues.clear();  // cache unusable, reprocess
      }
    }

    try {
      TriMesh mesh = load_mesh(path);
      rec.report = validate(mesh);
      if (auto reason = filter(rec.report, policy)) {
        rec.status = "rejected";
        rec.reason = reason;
        pending[i].record = std::move(rec);
        return;
      }

      RemeshOptions ropt;
      ropt.target_vertex_min = policy.target_vertex_min;
      ropt.target_vertex_max = policy.target_vertex_max;
      ropt.max_outer_iterations = policy.remesh_max_iterations;
      TriMesh remeshed = isotropic_remesh(mesh, ropt);

      auto [normalized, scale] = normalize_unit_cube(remeshed);
      Spectrum raw = lb_spectrum(remeshed, std::min(policy.spectrum_k, remeshed.vertex_count()));
      pending[i].raw_eigenvalues = raw.eigenvalues;

      // normalized eigenvalues: lambda / s^2 (spectrum scales as 1/c^2)
      Spectrum normalized_spectrum = raw;
      const double s2 = scale.scale_factor * scale.scale_factor;
      for (double& v : normalized_spectrum.eigenvalues) v /= s2;
      normalized_spectrum.scale = scale;

      rec.scale_factor = scale.scale_factor;
      rec.mesh_file = "meshes/" + rec.id + ".off";
      rec.spectrum_file = "spectra/" + rec.id + ".json";
      save_mesh(normalized, out_dir / rec.mesh_file);
      save_spectrum_json(normalized_spectrum, rec.id, out_dir / rec.spectrum_file);

      std::uint64_t aug_seed = policy.rng_seed ^ fnv1a(rec.id);
      auto rotations = augment(normalized, policy.rotations_per_mesh, aug_seed);
      for (std::size_t a = 0; a < rotations.size(); ++a) {
        std::string aug_id = rec.id + "_rot" + std::to_string(a);
        save_mesh(rotations[a], out_dir / ("meshes/" + aug_id + ".off"));
        rec.augmentations.push_back(aug_id);
      }

      rec.status = "accepted";
      pending[i].record = std::move(rec);
    } catch (const RemeshFailure& e) {
      rec.status = "rejected";
      rec.reason = RejectReason::remesh_failure;
      rec.detail = e.what();
      pending[i].record = std::move(rec);
    } catch (const ParseError& e) {
      rec.status = "rejected";
      rec.reason = RejectReason::parse_error;
      rec.detail = e.what();
      pending[i].record = std::move(rec);
    } catch (const NumericalError& e) {
      rec.status = "rejected";
      rec.reason = RejectReason::numerical_anomaly;
      rec.detail = e.what();
      pending[i].record = std::move(rec);
    } catch (const std::exception& e) {
      rec.status = "rejected";
      rec.reason = RejectReason::parse_error;
      rec.detail = e.what();
      pending[i].record = std::move(rec);
    }
  });

  int processed = 0;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (!pending[i].reused) ++processed;
    manifest.records.push_back(std::move(pending[i].record));
  }
  manifest.processed_this_run = processed;

  // Dedupe over raw (pre-normalization) spectra of accepted meshes.
  std::vector<int> accepted_idx;
  std::vector<std::vector<double>> raw;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    auto& rec = manifest.records[i];
    bool was_dup = rec.reason && *rec.reason == RejectReason::duplicate;
    if (rec.status == "accepted" || was_dup) {
      // duplicates re-enter the pool so the grouping stays stable on re-runs
      if (pending[i].raw_eigenvalues.empty()) continue;
      accepted_idx.push_back(static_cast<int>(i));
      raw.push_back(pending[i].raw_eigenvalues);
      if (was_dup) {
        rec.status = "accepted";
        rec.reason.reset();
        rec.duplicate_of.clear();
      }
    }
  }
  for (const auto& group : dedupe_groups(raw, policy.dedupe_threshold, policy.dedupe_relative)) {
    const std::string& keeper = manifest.records[accepted_idx[group[0]]].id;
    for (std::size_t g = 1; g < group.size(); ++g) {
      auto& rec = manifest.records[accepted_idx[group[g]]];
      rec.status = "rejected";
      rec.reason = RejectReason::duplicate;
      rec.duplicate_of = keeper;
      rec.split.clear();
    }
  }

  // 80:10:10 split of accepted source ids; augmentations inherit it.
  std::vector<int> accepted_final;
  for (std::size_t i = 0; i < manifest.records.size(); ++i)
    if (manifest.records[i].status == "accepted") accepted_final.push_back(static_cast<int>(i));
  std::vector<int> order(accepted_final.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::mt19937_64 rng(policy.rng_seed);
  std::shuffle(order.begin(), order.end(), rng);
  int n = static_cast<int>(order.size());
  int n_train = static_cast<int>(std::lround(0.8 * n));
  int n_val = static_cast<int>(std::lround(0.1 * n));
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);
  for (int i = 0; i < n; ++i) {
    auto& rec = manifest.records[accepted_final[order[i]]];
    rec.split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
  }

  save_manifest(manifest, manifest_path);
  return manifest;
}

}  // namespace meshspec
