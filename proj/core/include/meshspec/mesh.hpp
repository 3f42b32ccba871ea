#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "meshspec/errors.hpp"

namespace meshspec {

using Vec3 = Eigen::Vector3d;

/// Undirected edge, endpoints stored with a < b.
struct EdgeRef {
  int a = -1;
  int b = -1;
};

/// Indexed triangle mesh with derived topology. Immutable after
/// construction; all operations on it are pure functions, so instances are
/// safe to share across threads.
///
/// Construction builds the unique undirected edge list, the sorted one-ring
/// neighbor set of every vertex, and the incident-face list of every edge.
/// Faces are expected counterclockwise; orientation problems are reported by
/// validate(), not rejected here.
class TriMesh {
 public:
  TriMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& faces() const { return faces_; }
  const std::vector<EdgeRef>& edges() const { return edges_; }

  /// Sorted one-ring vertex neighbors of vertex i.
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
  /// Faces incident to edge e (any count; 2 for interior manifold edges).
  const std::vector<int>& edge_faces(int e) const { return edge_faces_[e]; }
  /// Faces incident to vertex i.
  const std::vector<int>& vertex_faces(int i) const { return vertex_faces_[i]; }

  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int face_count() const { return static_cast<int>(faces_.size()); }

  /// Index into edges() for the undirected pair {a,b}, or -1.
  int edge_index(int a, int b) const;

  const Vec3& vertex(int i) const { return vertices_[i]; }
  const std::array<int, 3>& face(int f) const { return faces_[f]; }

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<EdgeRef> edges_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<int>> edge_faces_;
  std::vector<std::vector<int>> vertex_faces_;
  // CSR-ish lookup: for each vertex a, edges (a,b) with a < b, b ascending.
  std::vector<int> edge_lookup_offset_;
  std::vector<std::pair<int, int>> edge_lookup_;  // (b, edge id)
};

/// Topology/geometry audit of a mesh. Never throws; every field is always
/// populated except genus, which is defined only for closed orientable
/// manifolds with a single component.
struct MeshReport {
  int vertex_count = 0;
  int edge_count = 0;
  int face_count = 0;
  int component_count = 0;
  int boundary_edge_count = 0;
  bool is_closed = false;
  bool is_manifold = false;
  bool is_oriented = false;
  int euler_characteristic = 0;
  std::optional<int> genus;
  double total_area = 0.0;
};

/// Translation + uniform scale applied by normalize_unit_cube. Eigenvalues
/// of the normalized mesh are restored to the original scale by multiplying
/// with scale_factor^2 (the spectrum scales as 1/c^2 under scaling by c).
struct ScaleRecord {
  Vec3 original_centroid = Vec3::Zero();  // bounding-box center subtracted
  double scale_factor = 1.0;              // s = 1 / max bbox extent, s > 0
};

MeshReport validate(const TriMesh& mesh);

/// Rescale and recenter so the bounding box has max extent 1 and is centered
/// at the origin. Throws MeshError for a zero-extent (all coincident) mesh.
std::pair<TriMesh, ScaleRecord> normalize_unit_cube(const TriMesh& mesh);

/// Rotate every vertex by a unit quaternion. Throws MeshError when the
/// quaternion norm deviates from 1 by more than 1e-9.
TriMesh rotate(const TriMesh& mesh, const Eigen::Quaterniond& rotation);
TriMesh rotate(const TriMesh& mesh, const Vec3& axis, double angle);

/// Sum of triangle areas (cross-product formula, compensated summation).
double total_area(const TriMesh& mesh);

TriMesh scale_uniform(const TriMesh& mesh, double factor);
TriMesh translate(const TriMesh& mesh, const Vec3& offset);

}  // namespace meshspec
