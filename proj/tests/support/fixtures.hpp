#pragma once

#include <random>

#include "meshspec/mesh.hpp"
#include "meshspec/shapes.hpp"

namespace meshspec::testing {

/// Two disjoint tetrahedra in one mesh (component_count == 2).
inline TriMesh two_tetrahedra() {
  TriMesh t = shapes::tetrahedron();
  std::vector<Vec3> v = t.vertices();
  std::vector<std::array<int, 3>> f = t.faces();
  const int off = t.vertex_count();
  for (const auto& p : t.vertices()) v.push_back(p + Vec3(10, 0, 0));
  for (const auto& face : t.faces()) f.push_back({face[0] + off, face[1] + off, face[2] + off});
  return TriMesh(std::move(v), std::move(f));
}

/// Two tetrahedra sharing one edge: that edge has 4 incident faces.
inline TriMesh nonmanifold_edge_fixture() {
  TriMesh t = shapes::tetrahedron();
  std::vector<Vec3> v = t.vertices();
  std::vector<std::array<int, 3>> f = t.faces();
  // second tetrahedron reuses vertices 0 and 1
  int a = static_cast<int>(v.size());
  v.push_back(v[0] + Vec3(0, 5, 5));
  int b = static_cast<int>(v.size());
  v.push_back(v[1] + Vec3(0, 5, 5));
  f.push_back({0, 1, a});
  f.push_back({1, b, a});
  f.push_back({0, a, b});
  f.push_back({0, b, 1});
  return TriMesh(std::move(v), std::move(f));
}

/// Small random closed mesh: an icosphere with smooth radial perturbation
/// (stays closed, manifold, genus 0). Vertex counts: 12, 42, 162, 642.
inline TriMesh bumpy_sphere(int subdivisions, std::uint64_t seed, double amplitude = 0.25) {
  TriMesh base = shapes::icosphere(1.0, subdivisions);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-amplitude, amplitude);
  double c1 = coef(rng), c2 = coef(rng), c3 = coef(rng), c4 = coef(rng);
  std::vector<Vec3> v = base.vertices();
  for (auto& p : v) {
    Vec3 n = p.normalized();
    double r = 1.0 + c1 * n.x() * n.y() + c2 * n.z() * n.z() + c3 * std::sin(2 * n.x()) +
               c4 * n.y() * n.z() * n.x();
    p = n * r;
  }
  return TriMesh(std::move(v), base.faces());
}

/// Planar fan of acute triangles around vertex 0 at the origin, slightly
/// irregular radii so the Voronoi cell is nontrivial.
inline TriMesh acute_fan() {
  const int n = 8;
  std::vector<Vec3> v = {{0, 0, 0}};
  for (int s = 0; s < n; ++s) {
    double a = 2.0 * std::numbers::pi * s / n;
    double r = 1.0 + 0.15 * std::cos(3 * a);
    v.push_back({r * std::cos(a), r * std::sin(a), 0.0});
  }
  std::vector<std::array<int, 3>> f;
  for (int s = 0; s < n; ++s) f.push_back({0, 1 + s, 1 + (s + 1) % n});
  return TriMesh(std::move(v), std::move(f));
}

/// Mesh containing an obtuse triangle (flat strip with a wide apex).
inline TriMesh obtuse_strip() {
  std::vector<Vec3> v = {{0, 0, 0}, {4, 0, 0}, {2, 0.5, 0}, {2, -1.5, 0}};
  std::vector<std::array<int, 3>> f = {{0, 1, 2}, {1, 0, 3}};
  return TriMesh(std::move(v), std::move(f));
}

inline TriMesh permute_vertices(const TriMesh& mesh, std::uint64_t seed) {
  std::vector<int> perm(mesh.vertex_count());
  for (int i = 0; i < mesh.vertex_count(); ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);  // perm[old] = new
  std::vector<Vec3> v(mesh.vertex_count(), Vec3::Zero());
  for (int i = 0; i < mesh.vertex_count(); ++i) v[perm[i]] = mesh.vertex(i);
  std::vector<std::array<int, 3>> f;
  f.reserve(mesh.face_count());
  for (const auto& face : mesh.faces())
    f.push_back({perm[face[0]], perm[face[1]], perm[face[2]]});
  return TriMesh(std::move(v), std::move(f));
}

}  // namespace meshspec::testing
