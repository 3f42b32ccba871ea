#include "meshspec/remesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <vector>

namespace meshspec {

namespace {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Ericson, Real-Time Collision Detection, 5.1.5
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }
  double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

// Median-split AABB tree over the reference surface; closest-point queries
// keep every relaxed vertex on the input geometry.
class SurfaceTree {
 public:
  explicit SurfaceTree(const TriMesh& mesh) : mesh_(mesh) {
    const int nf = mesh.face_count();
    items_.resize(nf);
    for (int f = 0; f < nf; ++f) items_[f] = f;
    boxes_.resize(nf);
    centers_.resize(nf);
    for (int f = 0; f < nf; ++f) {
      const auto& fv = mesh.face(f);
      Vec3 lo = mesh.vertex(fv[0]).cwiseMin(mesh.vertex(fv[1])).cwiseMin(mesh.vertex(fv[2]));
      Vec3 hi = mesh.vertex(fv[0]).cwiseMax(mesh.vertex(fv[1])).cwiseMax(mesh.vertex(fv[2]));
      boxes_[f] = {lo, hi};
      centers_[f] = (lo + hi) / 2;
    }
    nodes_.reserve(2 * nf);
    root_ = build(0, nf);
  }

  Vec3 closest_point(const Vec3& p) const {
    double best_d2 = std::numeric_limits<double>::infinity();
    Vec3 best = p;
    search(root_, p, best_d2, best);
    return best;
  }

 private:
  struct Box {
    Vec3 lo, hi;
  };
  struct Node {
    Box box;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into items_
  };

  int build(int begin, int end) {
    Node node;
    node.box = boxes_[items_[begin]];
    for (int i = begin + 1; i < end; ++i) {
      node.box.lo = node.box.lo.cwiseMin(boxes_[items_[i]].lo);
      node.box.hi = node.box.hi.cwiseMax(boxes_[items_[i]].hi);
    }
    if (end - begin <= 4) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    Vec3 extent = node.box.hi - node.box.lo;
    int axis = 0;
    if (extent.y() > extent.x()) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;
    int mid = (begin + end) / 2;
    std::nth_element(items_.begin() + begin, items_.begin() + mid, items_.begin() + end,
                     [&](int a, int b) { return centers_[a][axis] < centers_[b][axis]; });
    int left = build(begin, mid);
    int right = build(mid, end);
    node.left = left;
    node.right = right;
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  static double box_dist2(const Box& b, const Vec3& p) {
    Vec3 d = (b.lo - p).cwiseMax(0.0).cwiseMax(p - b.hi);
    return d.squaredNorm();
  }

  void search(int ni, const Vec3& p, double& best_d2, Vec3& best) const {
    const Node& node = nodes_[ni];
    if (box_dist2(node.box, p) >= best_d2) return;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const auto& fv = mesh_.face(items_[i]);
        Vec3 q = closest_point_on_triangle(p, mesh_.vertex(fv[0]), mesh_.vertex(fv[1]),
                                           mesh_.vertex(fv[2]));
        double d2 = (q - p).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best = q;
        }
      }
      return;
    }
    double dl = box_dist2(nodes_[node.left].box, p);
    double dr = box_dist2(nodes_[node.right].box, p);
    if (dl < dr) {
      search(node.left, p, best_d2, best);
      search(node.right, p, best_d2, best);
    } else {
      search(node.right, p, best_d2, best);
      search(node.left, p, best_d2, best);
    }
  }

  const TriMesh& mesh_;
  std::vector<int> items_;
  std::vector<Box> boxes_;
  std::vector<Vec3> centers_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Creases and corners must survive remeshing: crossing them with flips,
// collapsing them to off-crease midpoints, or sliding their vertices
// tangentially all shave the feature off under reprojection.
struct FeatureMap {
  std::vector<char> vertex;  // touches a crease edge
  std::vector<char> edge;    // dihedral above threshold
};

FeatureMap detect_features(const TriMesh& snap, double dihedral_cos) {
  std::vector<Vec3> face_normal(snap.face_count());
  for (int f = 0; f < snap.face_count(); ++f) {
    const auto& fv = snap.face(f);
    face_normal[f] =
        (snap.vertex(fv[1]) - snap.vertex(fv[0])).cross(snap.vertex(fv[2]) - snap.vertex(fv[0]));
    double n = face_normal[f].norm();
    if (n > 1e-300) face_normal[f] /= n;
  }
  FeatureMap map;
  map.vertex.assign(snap.vertex_count(), 0);
  map.edge.assign(snap.edge_count(), 0);
  for (int e = 0; e < snap.edge_count(); ++e) {
    const auto& inc = snap.edge_faces(e);
    if (inc.size() != 2) continue;
    if (face_normal[inc[0]].dot(face_normal[inc[1]]) < dihedral_cos) {
      map.edge[e] = 1;
      map.vertex[snap.edges()[e].a] = 1;
      map.vertex[snap.edges()[e].b] = 1;
    }
  }
  return map;
}

constexpr double kFeatureCos = 0.8191520442889918;  // cos(35 deg)

struct WorkMesh {
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::vector<char> vert_dead;
  std::vector<char> face_dead;

  explicit WorkMesh(const TriMesh& m)
      : verts(m.vertices()),
        faces(m.faces()),
        vert_dead(m.vertex_count(), 0),
        face_dead(m.face_count(), 0) {}

  int live_vertex_count() const {
    int n = 0;
    for (char d : vert_dead) n += !d;
    return n;
  }

  TriMesh compact() const {
    std::vector<int> remap(verts.size(), -1);
    std::vector<Vec3> out_v;
    out_v.reserve(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i)
      if (!vert_dead[i]) {
        remap[i] = static_cast<int>(out_v.size());
        out_v.push_back(verts[i]);
      }
    std::vector<std::array<int, 3>> out_f;
    out_f.reserve(faces.size());
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (!face_dead[f])
        out_f.push_back({remap[faces[f][0]], remap[faces[f][1]], remap[faces[f][2]]});
    return TriMesh(std::move(out_v), std::move(out_f));
  }
};

double face_area(const WorkMesh& m, const std::array<int, 3>& f) {
  return 0.5 * (m.verts[f[1]] - m.verts[f[0]]).cross(m.verts[f[2]] - m.verts[f[0]]).norm();
}

// Face of `mesh` (snapshot adjacency) holding the directed edge a->b, plus
// its corner opposite the edge.
struct SideInfo {
  int face = -1;
  int opposite = -1;
};

bool edge_sides(const TriMesh& mesh, int e, SideInfo& fwd, SideInfo& rev) {
  const EdgeRef edge = mesh.edges()[e];
  const auto& incident = mesh.edge_faces(e);
  if (incident.size() != 2) return false;
  for (int f : incident) {
    const auto& fv = mesh.face(f);
    for (int c = 0; c < 3; ++c) {
      int u = fv[c], v = fv[(c + 1) % 3], w = fv[(c + 2) % 3];
      if (u == edge.a && v == edge.b) fwd = {f, w};
      if (u == edge.b && v == edge.a) rev = {f, w};
    }
  }
  return fwd.face >= 0 && rev.face >= 0 && fwd.face != rev.face;
}

int split_pass(WorkMesh& work, const TriMesh& snap, double max_len) {
  std::vector<char> face_dirty(snap.face_count(), 0);
  int changed = 0;
  for (int e = 0; e < snap.edge_count(); ++e) {
    const EdgeRef edge = snap.edges()[e];
    if ((snap.vertex(edge.a) - snap.vertex(edge.b)).norm() <= max_len) continue;
    SideInfo fwd, rev;
    if (!edge_sides(snap, e, fwd, rev)) continue;
    if (face_dirty[fwd.face] || face_dirty[rev.face]) continue;
    face_dirty[fwd.face] = face_dirty[rev.face] = 1;

    int a = edge.a, b = edge.b, c = fwd.opposite, d = rev.opposite;
    int mid = static_cast<int>(work.verts.size());
    work.verts.push_back(0.5 * (work.verts[a] + work.verts[b]));
    work.vert_dead.push_back(0);

    work.face_dead[fwd.face] = 1;
    work.face_dead[rev.face] = 1;
    work.faces.push_back({a, mid, c});
    work.faces.push_back({mid, b, c});
    work.faces.push_back({b, mid, d});
    work.faces.push_back({mid, a, d});
    work.face_dead.insert(work.face_dead.end(), 4, 0);
    ++changed;
  }
  return changed;
}

// Collapse the given candidate edges (midpoint or feature-endpoint
// placement), guarded by the link condition, one-ring locking, an optional
// long-edge bound, and a result-area floor.
int collapse_edges(WorkMesh& work, const TriMesh& snap, const std::vector<int>& candidates,
                   double max_len, int vertex_floor) {
  std::vector<char> locked(snap.vertex_count(), 0);
  FeatureMap features = detect_features(snap, kFeatureCos);
  int live = work.live_vertex_count();
  int changed = 0;

  for (int e : candidates) {
    if (live <= vertex_floor) break;
    const EdgeRef edge = snap.edges()[e];
    int a = edge.a, b = edge.b;
    if (locked[a] || locked[b]) continue;

    SideInfo fwd, rev;
    if (!edge_sides(snap, e, fwd, rev)) continue;

    // link condition: shared one-ring must be exactly the two opposite
    // corners, and neither may drop to valence 2
    const auto& na = snap.neighbors(a);
    const auto& nb = snap.neighbors(b);
    std::vector<int> common;
    std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(),
                          std::back_inserter(common));
    if (common.size() != 2) continue;
    bool ok = true;
    for (int cvert : common) {
      if (cvert != fwd.opposite && cvert != rev.opposite) ok = false;
      if (snap.neighbors(cvert).size() <= 3) ok = false;
    }
    if (!ok) continue;

    // features constrain the merged position: collapse into the feature
    // endpoint, or along the crease; never pull a crease vertex off it
    bool fa = features.vertex[a], fb = features.vertex[b];
    bool fe = features.edge[e];
    Vec3 mid;
    if (fa && fb && !fe) continue;  // would fuse two distinct creases
    if (fa && !fb) mid = work.verts[a];
    else if (fb && !fa) mid = work.verts[b];
    else mid = 0.5 * (work.verts[a] + work.verts[b]);
    for (int n : na)
      if (n != b && (snap.vertex(n) - mid).norm() > max_len) ok = false;
    for (int n : nb)
      if (n != a && (snap.vertex(n) - mid).norm() > max_len) ok = false;
    if (!ok) continue;

    // surviving faces around the merged vertex must keep usable area
    const double area_floor = 1e-10 * max_len * max_len;
    for (int endpoint : {a, b}) {
      for (int f : snap.vertex_faces(endpoint)) {
        if (f == fwd.face || f == rev.face || work.face_dead[f]) continue;
        std::array<Vec3, 3> p;
        for (int c = 0; c < 3; ++c) {
          int v = work.faces[f][c];
          p[c] = (v == a || v == b) ? mid : work.verts[v];
        }
        if (0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm() < area_floor) ok = false;
      }
    }
    if (!ok) continue;

    // b merges into a
    work.verts[a] = mid;
    work.vert_dead[b] = 1;
    work.face_dead[fwd.face] = 1;
    work.face_dead[rev.face] = 1;
    for (int f : snap.vertex_faces(b)) {
      if (work.face_dead[f]) continue;
      for (int& v : work.faces[f])
        if (v == b) v = a;
    }

    locked[a] = locked[b] = 1;
    for (int n : na) locked[n] = 1;
    for (int n : nb) locked[n] = 1;
    --live;
    ++changed;
  }
  return changed;
}

int collapse_pass(WorkMesh& work, const TriMesh& snap, double min_len, double max_len,
                  int vertex_floor) {
  std::vector<int> candidates;
  for (int e = 0; e < snap.edge_count(); ++e) {
    const EdgeRef edge = snap.edges()[e];
    if ((snap.vertex(edge.a) - snap.vertex(edge.b)).norm() < min_len) candidates.push_back(e);
  }
  return collapse_edges(work, snap, candidates, max_len, vertex_floor);
}

// Near-degenerate faces poison the FEM operators (giant cotangents); take
// them out by collapsing their shortest edge regardless of edge length.
int sliver_pass(WorkMesh& work, const TriMesh& snap, double cot_threshold, double max_len,
                int vertex_floor) {
  std::vector<int> candidates;
  for (int f = 0; f < snap.face_count(); ++f) {
    const auto& fv = snap.face(f);
    double worst = 0;
    for (int c = 0; c < 3; ++c) {
      Vec3 u = snap.vertex(fv[(c + 1) % 3]) - snap.vertex(fv[c]);
      Vec3 v = snap.vertex(fv[(c + 2) % 3]) - snap.vertex(fv[c]);
      double cross = u.cross(v).norm();
      if (cross <= 0) {
        worst = cot_threshold + 1;
        break;
      }
      worst = std::max(worst, std::abs(u.dot(v)) / cross);
    }
    if (worst <= cot_threshold) continue;
    int best_e = -1;
    double best_len = 0;
    for (int c = 0; c < 3; ++c) {
      int e = snap.edge_index(fv[c], fv[(c + 1) % 3]);
      double len = (snap.vertex(fv[c]) - snap.vertex(fv[(c + 1) % 3])).norm();
      if (best_e < 0 || len < best_len) {
        best_e = e;
        best_len = len;
      }
    }
    if (best_e >= 0) candidates.push_back(best_e);
  }
  return collapse_edges(work, snap, candidates, max_len, vertex_floor);
}

int flip_pass(WorkMesh& work, const TriMesh& snap) {
  std::vector<char> face_dirty(snap.face_count(), 0);
  std::vector<int> valence(snap.vertex_count());
  for (int v = 0; v < snap.vertex_count(); ++v)
    valence[v] = static_cast<int>(snap.neighbors(v).size());

  auto dev2 = [](int val) {
    int d = val - 6;
    return d * d;
  };

  FeatureMap features = detect_features(snap, kFeatureCos);
  int changed = 0;
  for (int e = 0; e < snap.edge_count(); ++e) {
    if (features.edge[e]) continue;  // never rotate a crease away
    const EdgeRef edge = snap.edges()[e];
    SideInfo fwd, rev;
    if (!edge_sides(snap, e, fwd, rev)) continue;
    if (face_dirty[fwd.face] || face_dirty[rev.face]) continue;
    int a = edge.a, b = edge.b, c = fwd.opposite, d = rev.opposite;
    if (c == d) continue;
    if (snap.edge_index(c, d) >= 0) continue;  // diagonal already present

    int before = dev2(valence[a]) + dev2(valence[b]) + dev2(valence[c]) + dev2(valence[d]);
    int after = dev2(valence[a] - 1) + dev2(valence[b] - 1) + dev2(valence[c] + 1) +
                dev2(valence[d] + 1);
    if (after >= before) continue;
    if (valence[a] <= 3 || valence[b] <= 3) continue;

    // reject fold-overs and degenerate results
    std::array<int, 3> f0 = {a, d, c}, f1 = {d, b, c};
    Vec3 n_old = (work.verts[b] - work.verts[a]).cross(work.verts[c] - work.verts[a]) +
                 (work.verts[a] - work.verts[b]).cross(work.verts[d] - work.verts[b]);
    Vec3 n0 = (work.verts[d] - work.verts[a]).cross(work.verts[c] - work.verts[a]);
    Vec3 n1 = (work.verts[b] - work.verts[d]).cross(work.verts[c] - work.verts[d]);
    double quad = n_old.norm();
    if (n0.dot(n_old) <= 0 || n1.dot(n_old) <= 0) continue;
    if (n0.norm() < 1e-6 * quad || n1.norm() < 1e-6 * quad) continue;

    work.faces[fwd.face] = f0;
    work.faces[rev.face] = f1;
    face_dirty[fwd.face] = face_dirty[rev.face] = 1;
    valence[a]--;
    valence[b]--;
    valence[c]++;
    valence[d]++;
    ++changed;
  }
  return changed;
}



void relax_pass(WorkMesh& work, const TriMesh& snap, double lambda) {
  std::vector<Vec3> normals(snap.vertex_count(), Vec3::Zero());
  for (const auto& fv : snap.faces())
    for (int c = 0; c < 3; ++c)
      normals[fv[c]] += 0.5 * (snap.vertex(fv[1]) - snap.vertex(fv[0]))
                                  .cross(snap.vertex(fv[2]) - snap.vertex(fv[0]));
  std::vector<char> pinned = detect_features(snap, kFeatureCos).vertex;

  std::vector<Vec3> moved(snap.vertex_count());
  for (int v = 0; v < snap.vertex_count(); ++v) {
    const auto& nb = snap.neighbors(v);
    if (nb.empty() || pinned[v]) {
      moved[v] = snap.vertex(v);
      continue;
    }
    Vec3 centroid = Vec3::Zero();
    for (int n : nb) centroid += snap.vertex(n);
    centroid /= static_cast<double>(nb.size());
    Vec3 delta = lambda * (centroid - snap.vertex(v));
    double nn = normals[v].squaredNorm();
    if (nn > 1e-300) {
      Vec3 unit = normals[v] / std::sqrt(nn);
      delta -= delta.dot(unit) * unit;  // tangential component only
    }
    moved[v] = snap.vertex(v) + delta;
  }
  for (int v = 0; v < snap.vertex_count(); ++v) work.verts[v] = moved[v];
}

}  // namespace

double edge_length_cov(const TriMesh& mesh) {
  double sum = 0, sum2 = 0;
  const int ne = mesh.edge_count();
  for (const auto& e : mesh.edges()) {
    double l = (mesh.vertex(e.a) - mesh.vertex(e.b)).norm();
    sum += l;
    sum2 += l * l;
  }
  double mean = sum / ne;
  double var = std::max(sum2 / ne - mean * mean, 0.0);
  return std::sqrt(var) / mean;
}

TriMesh isotropic_remesh(const TriMesh& input, const RemeshOptions& options) {
  MeshReport report = validate(input);
  if (!report.is_closed || !report.is_manifold)
    throw MeshError("isotropic remeshing requires a closed manifold mesh");
  if (options.target_vertex_min > options.target_vertex_max || options.target_vertex_min < 4)
    throw MeshError("invalid target vertex range");

  const int target_mid = (options.target_vertex_min + options.target_vertex_max) / 2;
  auto in_window = [&](int v) {
    return v >= options.target_vertex_min && v <= options.target_vertex_max;
  };

  if (in_window(input.vertex_count()) && edge_length_cov(input) <= options.uniform_cov_early_exit)
    return input;

  double area = total_area(input);
  // near-regular triangulation: F ~ 2V, per-face area ~ sqrt(3)/4 L^2
  double target_len = std::sqrt(area / (0.866 * target_mid));

  SurfaceTree reference(input);
  TriMesh current = input;
  for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
    int stable_passes = 0;
    for (int pass = 0; pass < options.max_passes_per_iteration; ++pass) {
      WorkMesh work(current);
      int n_split = split_pass(work, current, 4.0 / 3.0 * target_len);
      current = work.compact();

      WorkMesh work2(current);
      int n_collapse =
          collapse_pass(work2, current, 0.8 * target_len, 4.0 / 3.0 * target_len, 4);
      current = work2.compact();

      WorkMesh work3(current);
      int n_flip = flip_pass(work3, current);
      relax_pass(work3, current, options.relax_lambda);
      for (auto& v : work3.verts) v = reference.closest_point(v);
      current = work3.compact();

      WorkMesh work4(current);
      int n_sliver =
          sliver_pass(work4, current, 60.0, 1.6 * target_len, 4);  // ~1 degree floor
      if (n_sliver > 0) current = work4.compact();

      if (n_split + n_collapse + n_flip + n_sliver == 0) {
        if (++stable_passes >= 2) break;
      } else {
        stable_passes = 0;
      }
    }

    int v = current.vertex_count();
    if (in_window(v)) {
      MeshReport out_report = validate(current);
      if (!out_report.is_closed || !out_report.is_manifold ||
          out_report.euler_characteristic != report.euler_characteristic)
        throw RemeshFailure("remeshing corrupted topology");
      return current;
    }
    // count scales as 1/len^2
    double ratio = std::sqrt(static_cast<double>(v) / target_mid);
    target_len *= std::clamp(ratio, 0.5, 2.0);
  }
  throw RemeshFailure("vertex count " + std::to_string(current.vertex_count()) +
                      " outside [" + std::to_string(options.target_vertex_min) + "," +
                      std::to_string(options.target_vertex_max) + "] after " +
                      std::to_string(options.max_outer_iterations) + " iterations");
}

}  // namespace meshspec
