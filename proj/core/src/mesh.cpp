#include "meshspec/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>

#include "meshspec/numeric.hpp"

namespace meshspec {

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  const int nv = static_cast<int>(vertices_.size());
  if (nv == 0) throw MeshError("empty mesh: no vertices");

  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const auto& [i, j, k] = faces_[f];
    if (i < 0 || j < 0 || k < 0 || i >= nv || j >= nv || k >= nv)
      throw MeshError("face " + std::to_string(f) + " references vertex out of range");
    if (i == j || j == k || i == k)
      throw MeshError("degenerate face " + std::to_string(f) + " (repeated vertex index)");
  }

  // Unique undirected edges, each with its incident faces. A map keyed by
  // (min,max) gives a deterministic lexicographic edge order.
  std::map<std::pair<int, int>, std::vector<int>> edge_map;
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const auto& fv = faces_[f];
    for (int c = 0; c < 3; ++c) {
      int a = fv[c], b = fv[(c + 1) % 3];
      edge_map[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(f));
    }
  }

  edges_.reserve(edge_map.size());
  edge_faces_.reserve(edge_map.size());
  neighbors_.assign(nv, {});
  for (auto& [key, fs] : edge_map) {
    edges_.push_back({key.first, key.second});
    edge_faces_.push_back(std::move(fs));
    neighbors_[key.first].push_back(key.second);
    neighbors_[key.second].push_back(key.first);
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());

  vertex_faces_.assign(nv, {});
  for (std::size_t f = 0; f < faces_.size(); ++f)
    for (int v : faces_[f]) vertex_faces_[v].push_back(static_cast<int>(f));

  edge_lookup_offset_.assign(nv + 1, 0);
  for (const auto& e : edges_) ++edge_lookup_offset_[e.a + 1];
  std::partial_sum(edge_lookup_offset_.begin(), edge_lookup_offset_.end(),
                   edge_lookup_offset_.begin());
  edge_lookup_.resize(edges_.size());
  std::vector<int> cursor(edge_lookup_offset_.begin(), edge_lookup_offset_.end() - 1);
  for (std::size_t e = 0; e < edges_.size(); ++e)
    edge_lookup_[cursor[edges_[e].a]++] = {edges_[e].b, static_cast<int>(e)};
}

int TriMesh::edge_index(int a, int b) const {
  if (a > b) std::swap(a, b);
  if (a < 0 || b >= vertex_count()) return -1;
  for (int i = edge_lookup_offset_[a]; i < edge_lookup_offset_[a + 1]; ++i)
    if (edge_lookup_[i].first == b) return edge_lookup_[i].second;
  return -1;
}

namespace {

double triangle_area(const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  return 0.5 * (p1 - p0).cross(p2 - p0).norm();
}

int count_components(const TriMesh& mesh) {
  const int nv = mesh.vertex_count();
  std::vector<int> comp(nv, -1);
  int n = 0;
  for (int s = 0; s < nv; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = n;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int w : mesh.neighbors(v)) {
        if (comp[w] < 0) {
          comp[w] = n;
          q.push(w);
        }
      }
    }
    ++n;
  }
  return n;
}

// A vertex star is a disk when its incident faces form one edge-connected
// fan: a single cycle (interior vertex) or a single path (boundary vertex).
bool vertex_stars_are_disks(const TriMesh& mesh) {
  const int nv = mesh.vertex_count();
  for (int v = 0; v < nv; ++v) {
    const auto& fs = mesh.vertex_faces(v);
    if (fs.empty()) continue;
    // Adjacency between incident faces through edges containing v.
    std::map<int, std::vector<int>> by_edge;  // edge id -> local face ids
    for (std::size_t li = 0; li < fs.size(); ++li) {
      const auto& fv = mesh.face(fs[li]);
      for (int c = 0; c < 3; ++c) {
        int a = fv[c], b = fv[(c + 1) % 3];
        if (a == v || b == v) {
          int e = mesh.edge_index(a, b);
          by_edge[e].push_back(static_cast<int>(li));
        }
      }
    }
    std::vector<std::vector<int>> adj(fs.size());
    for (const auto& [e, locals] : by_edge) {
      if (locals.size() == 2) {
        adj[locals[0]].push_back(locals[1]);
        adj[locals[1]].push_back(locals[0]);
      } else if (locals.size() > 2) {
        return false;  // nonmanifold edge through v
      }
    }
    // Single edge-connected component over the star?
    std::vector<char> seen(fs.size(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
      int f = q.front();
      q.pop();
      for (int g : adj[f]) {
        if (!seen[g]) {
          seen[g] = 1;
          ++reached;
          q.push(g);
        }
      }
    }
    if (reached != fs.size()) return false;
  }
  return true;
}

}  // namespace

MeshReport validate(const TriMesh& mesh) {
  MeshReport r;
  r.vertex_count = mesh.vertex_count();
  r.edge_count = mesh.edge_count();
  r.face_count = mesh.face_count();
  r.euler_characteristic = r.vertex_count - r.edge_count + r.face_count;
  r.component_count = count_components(mesh);
  r.total_area = total_area(mesh);

  bool edges_manifold = true;
  int boundary = 0;
  for (int e = 0; e < mesh.edge_count(); ++e) {
    std::size_t deg = mesh.edge_faces(e).size();
    if (deg == 1) ++boundary;
    if (deg > 2) edges_manifold = false;
  }
  r.boundary_edge_count = boundary;
  r.is_closed = (boundary == 0);
  r.is_manifold = edges_manifold && vertex_stars_are_disks(mesh);

  // Consistent orientation: every directed edge appears at most once.
  std::map<std::pair<int, int>, int> directed;
  r.is_oriented = true;
  for (const auto& fv : mesh.faces()) {
    for (int c = 0; c < 3; ++c) {
      auto key = std::make_pair(fv[c], fv[(c + 1) % 3]);
      if (++directed[key] > 1) r.is_oriented = false;
    }
  }

  if (r.is_closed && r.is_manifold && r.is_oriented && r.component_count == 1) {
    int g2 = 2 - r.euler_characteristic;
    if (g2 >= 0 && g2 % 2 == 0) r.genus = g2 / 2;
  }
  return r;
}

double total_area(const TriMesh& mesh) {
  KahanSum sum;
  for (const auto& fv : mesh.faces())
    sum.add(triangle_area(mesh.vertex(fv[0]), mesh.vertex(fv[1]), mesh.vertex(fv[2])));
  return sum.value();
}

std::pair<TriMesh, ScaleRecord> normalize_unit_cube(const TriMesh& mesh) {
  Vec3 lo = mesh.vertices().front();
  Vec3 hi = lo;
  for (const auto& v : mesh.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0))
    throw MeshError("cannot normalize zero-extent mesh (all vertices coincident)");

  ScaleRecord rec;
  rec.original_centroid = 0.5 * (lo + hi);
  rec.scale_factor = 1.0 / extent;

  std::vector<Vec3> out(mesh.vertices().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (mesh.vertices()[i] - rec.original_centroid) * rec.scale_factor;
  return {TriMesh(std::move(out), mesh.faces()), rec};
}

TriMesh rotate(const TriMesh& mesh, const Eigen::Quaterniond& rotation) {
  if (std::abs(rotation.norm() - 1.0) > 1e-9)
    throw MeshError("rotation quaternion is not unit length");
  Eigen::Matrix3d R = rotation.normalized().toRotationMatrix();
  std::vector<Vec3> out(mesh.vertices().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = R * mesh.vertices()[i];
  return TriMesh(std::move(out), mesh.faces());
}

TriMesh rotate(const TriMesh& mesh, const Vec3& axis, double angle) {
  return rotate(mesh, Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
}

TriMesh scale_uniform(const TriMesh& mesh, double factor) {
  std::vector<Vec3> out(mesh.vertices().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mesh.vertices()[i] * factor;
  return TriMesh(std::move(out), mesh.faces());
}

TriMesh translate(const TriMesh& mesh, const Vec3& offset) {
  std::vector<Vec3> out(mesh.vertices().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mesh.vertices()[i] + offset;
  return TriMesh(std::move(out), mesh.faces());
}

}  // namespace meshspec
