#include "meshspec/curation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "meshspec/parallel.hpp"
#include "meshspec/shapes.hpp"

namespace meshspec {

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::multi_component: return "MULTI_COMPONENT";
    case RejectReason::boundary: return "BOUNDARY";
    case RejectReason::non_manifold: return "NON_MANIFOLD";
    case RejectReason::genus_exceeded: return "GENUS_EXCEEDED";
    case RejectReason::remesh_failure: return "REMESH_FAILURE";
    case RejectReason::duplicate: return "DUPLICATE";
    case RejectReason::numerical_anomaly: return "NUMERICAL";
    case RejectReason::parse_error: return "PARSE_ERROR";
  }
  return "UNKNOWN";
}

std::optional<RejectReason> filter(const MeshReport& report, const CurationPolicy& policy) {
  if (policy.require_single_component && report.component_count != 1)
    return RejectReason::multi_component;
  if (policy.require_closed && report.boundary_edge_count > 0) return RejectReason::boundary;
  if (!report.is_manifold || !report.is_oriented) return RejectReason::non_manifold;
  // genus is absent for anything that is not a closed orientable manifold
  if (report.is_closed && !report.genus.has_value()) return RejectReason::non_manifold;
  if (report.genus.has_value() && *report.genus > policy.max_genus)
    return RejectReason::genus_exceeded;
  return std::nullopt;
}

namespace {

bool spectra_equal(const std::vector<double>& a, const std::vector<double>& b, double threshold,
                   bool relative) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = std::abs(a[i] - b[i]);
    double bound = relative ? threshold * std::max({std::abs(a[i]), std::abs(b[i]), 1.0})
                            : threshold;
    if (diff >= bound) return false;
  }
  return true;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<std::vector<int>> dedupe_groups(const std::vector<std::vector<double>>& spectra,
                                            double threshold, bool relative) {
  const int n = static_cast<int>(spectra.size());
  for (int i = 1; i < n; ++i)
    if (spectra[i].size() != spectra[0].size())
      throw MeshError("dedupe: spectra have mixed eigenvalue counts");

  UnionFind uf(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (spectra_equal(spectra[i], spectra[j], threshold, relative)) uf.unite(i, j);

  std::map<int, std::vector<int>> by_root;
  for (int i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
  std::vector<std::vector<int>> groups;
  for (auto& [root, members] : by_root)
    if (members.size() > 1) groups.push_back(std::move(members));
  return groups;
}

Eigen::Quaterniond random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  // Shoemake's subgroup algorithm: uniform over SO(3)
  double u1 = uni(rng), u2 = uni(rng), u3 = uni(rng);
  double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  double t1 = 2.0 * std::numbers::pi * u2, t2 = 2.0 * std::numbers::pi * u3;
  return Eigen::Quaterniond(b * std::cos(t2), a * std::sin(t1), a * std::cos(t1),
                            b * std::sin(t2));
}

std::vector<TriMesh> augment(const TriMesh& mesh, int n_rotations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TriMesh> out;
  out.reserve(std::max(n_rotations, 0));
  for (int i = 0; i < n_rotations; ++i) out.push_back(rotate(mesh, random_rotation(rng)));
  return out;
}

const std::vector<ShapeClass>& all_shape_classes() {
  static const std::vector<ShapeClass> classes = {
      ShapeClass::box,          ShapeClass::sphere,          ShapeClass::ellipsoid,
      ShapeClass::cylinder,     ShapeClass::cone,            ShapeClass::capsule,
      ShapeClass::torus,        ShapeClass::square_pyramid,  ShapeClass::triangular_prism,
      ShapeClass::hexagonal_prism,
  };
  return classes;
}

const char* to_string(ShapeClass cls) {
  switch (cls) {
    case ShapeClass::box: return "box";
    case ShapeClass::sphere: return "sphere";
    case ShapeClass::ellipsoid: return "ellipsoid";
    case ShapeClass::cylinder: return "cylinder";
    case ShapeClass::cone: return "cone";
    case ShapeClass::capsule: return "capsule";
    case ShapeClass::torus: return "torus";
    case ShapeClass::square_pyramid: return "square_pyramid";
    case ShapeClass::triangular_prism: return "triangular_prism";
    case ShapeClass::hexagonal_prism: return "hexagonal_prism";
  }
  return "unknown";
}

std::optional<ShapeClass> shape_class_from_string(const std::string& name) {
  for (ShapeClass c : all_shape_classes())
    if (name == to_string(c)) return c;
  return std::nullopt;
}

TriMesh synth_mesh(ShapeClass cls, std::mt19937_64& rng, int resolution) {
  std::uniform_real_distribution<double> dim(0.5, 2.0);
  const int r = std::max(resolution, 0);
  double a = dim(rng), b = dim(rng), c = dim(rng);
  TriMesh mesh = [&] {
    switch (cls) {
      case ShapeClass::box: return shapes::box(a, b, c, 1 + r);
      case ShapeClass::sphere: return shapes::icosphere(a / 2.0, 1 + r);
      case ShapeClass::ellipsoid: return shapes::ellipsoid(a / 2, b / 2, c / 2, 1 + r);
      case ShapeClass::cylinder:
        return shapes::cylinder(a / 2, b, 8 + 4 * r, 3 + 2 * r);
      case ShapeClass::cone: return shapes::cone(a / 2, b, 8 + 4 * r, 3 + 2 * r);
      case ShapeClass::capsule:
        return shapes::capsule(a / 2, b, 8 + 4 * r, 2 + r, 1 + r);
      case ShapeClass::torus:
        return shapes::torus(a / 2 + b / 4, b / 4, 10 + 6 * r, 6 + 3 * r);
      case ShapeClass::square_pyramid: return shapes::square_pyramid(a, b, c, 1 + r);
      case ShapeClass::triangular_prism: return shapes::triangular_prism(a, b, 1 + r);
      case ShapeClass::hexagonal_prism: return shapes::hexagonal_prism(a / 2, b, 1 + r);
    }
    throw MeshError("unknown shape class");
  }();
  return rotate(mesh, random_rotation(rng));
}

std::vector<SynthSample> synth_dataset(const std::vector<ShapeClass>& classes, int n_per_class,
                                       std::uint64_t seed, const SynthOptions& options) {
  if (classes.empty()) throw MeshError("synth_dataset: empty class list");
  if (options.eigenvalue_count < 1) throw MeshError("synth_dataset: eigenvalue count must be >= 1");

  std::vector<SynthSample> samples;
  std::mt19937_64 rng(seed);
  for (ShapeClass cls : classes) {
    for (int i = 0; i < n_per_class; ++i) {
      TriMesh mesh = synth_mesh(cls, rng, options.resolution);
      if (options.normalize) mesh = normalize_unit_cube(mesh).first;
      samples.push_back(SynthSample{std::string(to_string(cls)) + "_" + std::to_string(i), cls,
                                    std::move(mesh),
                                    {}});
    }
  }
  // labels in parallel across meshes; per-index writes keep this deterministic
  parallel_for(0, static_cast<int>(samples.size()), [&](int i) {
    Spectrum spec = lb_spectrum(samples[i].mesh, options.eigenvalue_count);
    samples[i].eigenvalues = spec.eigenvalues;
  });
  return samples;
}

}  // namespace meshspec
