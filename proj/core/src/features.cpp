#include "meshspec/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "meshspec/numeric.hpp"
#include "meshspec/parallel.hpp"

namespace meshspec {

namespace detail {

double cotangent(const Vec3& apex, const Vec3& a, const Vec3& b) {
  Vec3 u = a - apex, v = b - apex;
  double cross = u.cross(v).norm();
  double scale2 = u.squaredNorm() + v.squaredNorm();
  if (cross < 1e-14 * scale2)
    throw NumericalError("degenerate corner angle in cotangent computation");
  return u.dot(v) / cross;
}

}  // namespace detail

namespace {

double corner_angle(const Vec3& apex, const Vec3& a, const Vec3& b) {
  Vec3 u = a - apex, v = b - apex;
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

double face_area(const TriMesh& mesh, int f) {
  const auto& fv = mesh.face(f);
  return 0.5 * (mesh.vertex(fv[1]) - mesh.vertex(fv[0]))
                   .cross(mesh.vertex(fv[2]) - mesh.vertex(fv[0]))
                   .norm();
}

// Opposite-corner vertices of edge e (one per incident face).
std::vector<int> opposite_vertices(const TriMesh& mesh, int e) {
  std::vector<int> out;
  const auto& ef = mesh.edge_faces(e);
  const EdgeRef edge = mesh.edges()[e];
  for (int f : ef) {
    for (int v : mesh.face(f))
      if (v != edge.a && v != edge.b) out.push_back(v);
  }
  return out;
}

}  // namespace

std::vector<double> normalized_edge_lengths(const TriMesh& mesh) {
  if (mesh.edge_count() == 0) throw MeshError("mesh has no edges");
  std::vector<double> lengths(mesh.edge_count());
  double max_len = 0.0;
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const EdgeRef& ed = mesh.edges()[e];
    lengths[e] = (mesh.vertex(ed.a) - mesh.vertex(ed.b)).norm();
    if (lengths[e] == 0.0)
      throw MeshError("zero-length edge (" + std::to_string(ed.a) + "," + std::to_string(ed.b) +
                      ")");
    max_len = std::max(max_len, lengths[e]);
  }
  for (double& l : lengths) l /= max_len;
  return lengths;
}

std::vector<double> mixed_voronoi_areas(const TriMesh& mesh) {
  const double total = total_area(mesh);
  std::vector<double> area(mesh.vertex_count(), 0.0);

  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& fv = mesh.face(f);
    const Vec3& p0 = mesh.vertex(fv[0]);
    const Vec3& p1 = mesh.vertex(fv[1]);
    const Vec3& p2 = mesh.vertex(fv[2]);
    double a = face_area(mesh, f);
    if (a < 1e-14 * total)
      throw NumericalError("degenerate triangle at face " + std::to_string(f));

    double cos0 = (p1 - p0).dot(p2 - p0);
    double cos1 = (p0 - p1).dot(p2 - p1);
    double cos2 = (p0 - p2).dot(p1 - p2);

    if (cos0 < 0 || cos1 < 0 || cos2 < 0) {
      // Obtuse: area/2 at the obtuse corner, area/4 at the others.
      int obtuse = cos0 < 0 ? 0 : (cos1 < 0 ? 1 : 2);
      for (int c = 0; c < 3; ++c) area[fv[c]] += (c == obtuse) ? a / 2 : a / 4;
    } else {
      // Circumcentric piece for corner i: 1/8 (|e_ij|^2 cot(angle_k) +
      // |e_ik|^2 cot(angle_j)).
      double cot0 = detail::cotangent(p0, p1, p2);
      double cot1 = detail::cotangent(p1, p2, p0);
      double cot2 = detail::cotangent(p2, p0, p1);
      double l01 = (p0 - p1).squaredNorm();
      double l12 = (p1 - p2).squaredNorm();
      double l20 = (p2 - p0).squaredNorm();
      area[fv[0]] += (l01 * cot2 + l20 * cot1) / 8;
      area[fv[1]] += (l01 * cot2 + l12 * cot0) / 8;
      area[fv[2]] += (l20 * cot1 + l12 * cot0) / 8;
    }
  }
  return area;
}

std::vector<double> unweighted_gaussian_curvature(const TriMesh& mesh) {
  std::vector<double> deficit(mesh.vertex_count(), 2.0 * std::numbers::pi);
  for (const auto& fv : mesh.faces()) {
    for (int c = 0; c < 3; ++c)
      deficit[fv[c]] -=
          corner_angle(mesh.vertex(fv[c]), mesh.vertex(fv[(c + 1) % 3]), mesh.vertex(fv[(c + 2) % 3]));
  }
  return deficit;
}

std::vector<double> unweighted_mean_curvature(const TriMesh& mesh) {
  // Per-edge cotangent sums, then accumulate into both endpoints.
  std::vector<double> h(mesh.vertex_count(), 0.0);
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const EdgeRef edge = mesh.edges()[e];
    auto opp = opposite_vertices(mesh, e);
    if (opp.size() != 2)
      throw MeshError("edge (" + std::to_string(edge.a) + "," + std::to_string(edge.b) +
                      ") lacks two opposite angles; mean curvature requires a closed mesh");
    double w = detail::cotangent(mesh.vertex(opp[0]), mesh.vertex(edge.a), mesh.vertex(edge.b)) +
               detail::cotangent(mesh.vertex(opp[1]), mesh.vertex(edge.a), mesh.vertex(edge.b));
    double len = (mesh.vertex(edge.a) - mesh.vertex(edge.b)).norm();
    h[edge.a] += w * len;
    h[edge.b] += w * len;
  }
  return h;
}

namespace {

Vec3 area_weighted_normal(const TriMesh& mesh, int v) {
  Vec3 n = Vec3::Zero();
  for (int f : mesh.vertex_faces(v)) {
    const auto& fv = mesh.face(f);
    n += 0.5 * (mesh.vertex(fv[1]) - mesh.vertex(fv[0]))
                   .cross(mesh.vertex(fv[2]) - mesh.vertex(fv[0]));
  }
  double len = n.norm();
  if (len < 1e-300) return Vec3::UnitZ();
  return n / len;
}

std::vector<int> k_ring(const TriMesh& mesh, int v, int k) {
  std::vector<int> ring;
  std::vector<int> depth(mesh.vertex_count(), -1);
  std::queue<int> q;
  q.push(v);
  depth[v] = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    if (u != v) ring.push_back(u);
    if (depth[u] == k) continue;
    for (int w : mesh.neighbors(u))
      if (depth[w] < 0) {
        depth[w] = depth[u] + 1;
        q.push(w);
      }
  }
  return ring;
}

// Fit w = a u^2 + b uv + c v^2 + d u + e v over the neighborhood expressed
// in the tangent frame at `v`; principal curvatures from the Weingarten map
// of the fitted quadric. Returns false while the normal equations stay
// rank-deficient.
bool quadric_curvatures(const TriMesh& mesh, int v, const std::vector<int>& nbrs, double& k1,
                        double& k2) {
  if (nbrs.size() < 5) return false;
  Vec3 n = area_weighted_normal(mesh, v);
  Vec3 t1 = n.cross(std::abs(n.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX()).normalized();
  Vec3 t2 = n.cross(t1);

  Eigen::MatrixXd A(nbrs.size(), 5);
  Eigen::VectorXd rhs(nbrs.size());
  const Vec3& p0 = mesh.vertex(v);
  double scale = 0.0;
  for (std::size_t r = 0; r < nbrs.size(); ++r) {
    Vec3 d = mesh.vertex(nbrs[r]) - p0;
    double u = d.dot(t1), w = d.dot(t2);
    A(r, 0) = u * u;
    A(r, 1) = u * w;
    A(r, 2) = w * w;
    A(r, 3) = u;
    A(r, 4) = w;
    rhs(r) = d.dot(n);
    scale = std::max(scale, u * u + w * w);
  }
  if (scale <= 0) return false;

  Eigen::Matrix<double, 5, 5> ata = A.transpose() * A;
  Eigen::Matrix<double, 5, 1> atb = A.transpose() * rhs;
  auto ldlt = ata.ldlt();
  if (ldlt.info() != Eigen::Success) return false;
  // rank check via the pivoted diagonal
  double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
  if (dmax <= 0 || ldlt.vectorD().cwiseAbs().minCoeff() < 1e-12 * dmax) return false;
  Eigen::Matrix<double, 5, 1> coef = ldlt.solve(atb);

  double a = coef(0), b = coef(1), c = coef(2), d = coef(3), e = coef(4);
  double denom = std::sqrt(1.0 + d * d + e * e);
  double E = 1 + d * d, F = d * e, G = 1 + e * e;
  double L = 2 * a / denom, M = b / denom, N = 2 * c / denom;
  double det = E * G - F * F;
  double gauss = (L * N - M * M) / det;
  // Sign flip: positive curvature for convex regions w.r.t. the outward
  // normal of a counterclockwise mesh.
  double mean = -(E * N - 2 * F * M + G * L) / (2 * det);
  double disc = std::sqrt(std::max(mean * mean - gauss, 0.0));
  k1 = mean + disc;
  k2 = mean - disc;
  return true;
}

}  // namespace

PrincipalCurvatureField principal_curvatures(const TriMesh& mesh) {
  PrincipalCurvatureField out;
  out.kappa1.assign(mesh.vertex_count(), 0.0);
  out.kappa2.assign(mesh.vertex_count(), 0.0);
  std::vector<char> bad(mesh.vertex_count(), 0);

  constexpr int kMaxRing = 4;
  parallel_for(0, mesh.vertex_count(), [&](int v) {
    double k1 = 0, k2 = 0;
    bool ok = false;
    for (int ring = 2; ring <= kMaxRing && !ok; ++ring) {
      auto nbrs = k_ring(mesh, v, ring);
      if (nbrs.size() < 6 && ring < kMaxRing) continue;
      ok = quadric_curvatures(mesh, v, nbrs, k1, k2);
    }
    if (ok) {
      out.kappa1[v] = k1;
      out.kappa2[v] = k2;
    } else {
      bad[v] = 1;
    }
  });
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (bad[v]) out.degenerate.push_back(v);
  return out;
}

FeatureSet assemble_features(const TriMesh& mesh) {
  FeatureSet fs;
  const int n = mesh.vertex_count();

  auto areas = mixed_voronoi_areas(mesh);
  auto gauss = unweighted_gaussian_curvature(mesh);
  auto mean = unweighted_mean_curvature(mesh);
  auto pc = principal_curvatures(mesh);

  fs.node_features.resize(n, FeatureSet::kNodeDim);
  for (int v = 0; v < n; ++v) {
    const Vec3& p = mesh.vertex(v);
    fs.node_features(v, 0) = p.x();
    fs.node_features(v, 1) = p.y();
    fs.node_features(v, 2) = p.z();
    fs.node_features(v, 3) = areas[v];
    fs.node_features(v, 4) = gauss[v];
    fs.node_features(v, 5) = mean[v];
    fs.node_features(v, 6) = pc.kappa1[v];
    fs.node_features(v, 7) = pc.kappa2[v];
  }
  fs.degenerate_fits = pc.degenerate;

  auto weights = normalized_edge_lengths(mesh);
  const int ne = mesh.edge_count();
  fs.edge_index.resize(2, 2 * ne);
  fs.edge_weights.resize(2 * ne);
  for (int e = 0; e < ne; ++e) {
    const EdgeRef& ed = mesh.edges()[e];
    fs.edge_index(0, 2 * e) = ed.a;
    fs.edge_index(1, 2 * e) = ed.b;
    fs.edge_index(0, 2 * e + 1) = ed.b;
    fs.edge_index(1, 2 * e + 1) = ed.a;
    fs.edge_weights(2 * e) = weights[e];
    fs.edge_weights(2 * e + 1) = weights[e];
  }
  return fs;
}

std::vector<double> weighted_gaussian_curvature(const TriMesh& mesh) {
  auto k = unweighted_gaussian_curvature(mesh);
  auto a = mixed_voronoi_areas(mesh);
  for (int v = 0; v < mesh.vertex_count(); ++v) k[v] /= a[v];
  return k;
}

std::vector<double> weighted_mean_curvature(const TriMesh& mesh) {
  auto h = unweighted_mean_curvature(mesh);
  auto a = mixed_voronoi_areas(mesh);
  for (int v = 0; v < mesh.vertex_count(); ++v) h[v] /= 2.0 * a[v];
  return h;
}

}  // namespace meshspec
