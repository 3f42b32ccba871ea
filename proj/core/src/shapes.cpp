#include "meshspec/shapes.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace meshspec::shapes {

namespace {

constexpr double kPi = std::numbers::pi;

using FaceList = std::vector<std::array<int, 3>>;

// Helper for cap/side builders: welds vertices created more than once.
class VertexPool {
 public:
  int add(const Vec3& p) {
    verts_.push_back(p);
    return static_cast<int>(verts_.size()) - 1;
  }
  std::vector<Vec3> take() { return std::move(verts_); }

 private:
  std::vector<Vec3> verts_;
};

}  // namespace

TriMesh subdivide_midpoint(const TriMesh& mesh, int times) {
  if (times <= 0) return mesh;
  std::vector<Vec3> verts = mesh.vertices();
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    verts.push_back(0.5 * (verts[a] + verts[b]));
    int id = static_cast<int>(verts.size()) - 1;
    midpoint.emplace(key, id);
    return id;
  };
  FaceList faces;
  faces.reserve(mesh.face_count() * 4);
  for (const auto& f : mesh.faces()) {
    int m01 = mid(f[0], f[1]), m12 = mid(f[1], f[2]), m20 = mid(f[2], f[0]);
    faces.push_back({f[0], m01, m20});
    faces.push_back({f[1], m12, m01});
    faces.push_back({f[2], m20, m12});
    faces.push_back({m01, m12, m20});
  }
  TriMesh out(std::move(verts), std::move(faces));
  return subdivide_midpoint(out, times - 1);
}

TriMesh tetrahedron(double s) {
  std::vector<Vec3> v = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
  FaceList f = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return TriMesh(std::move(v), std::move(f));
}

TriMesh box(double ax, double ay, double az, int subdivisions) {
  double hx = ax / 2, hy = ay / 2, hz = az / 2;
  std::vector<Vec3> v = {
      {-hx, -hy, -hz}, {hx, -hy, -hz}, {hx, hy, -hz}, {-hx, hy, -hz},
      {-hx, -hy, hz},  {hx, -hy, hz},  {hx, hy, hz},  {-hx, hy, hz},
  };
  FaceList f = {
      {0, 2, 1}, {0, 3, 2},  // bottom (z = -hz)
      {4, 5, 6}, {4, 6, 7},  // top
      {0, 1, 5}, {0, 5, 4},  // front (y = -hy)
      {2, 3, 7}, {2, 7, 6},  // back
      {1, 2, 6}, {1, 6, 5},  // right
      {3, 0, 4}, {3, 4, 7},  // left
  };
  return subdivide_midpoint(TriMesh(std::move(v), std::move(f)), subdivisions);
}

TriMesh cube(double side, int subdivisions) { return box(side, side, side, subdivisions); }

TriMesh icosahedron(double radius) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
  };
  for (auto& p : v) p = p.normalized() * radius;
  FaceList f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };
  return TriMesh(std::move(v), std::move(f));
}

TriMesh icosphere(double radius, int subdivisions) {
  TriMesh m = icosahedron(1.0);
  for (int s = 0; s < subdivisions; ++s) {
    m = subdivide_midpoint(m, 1);
    std::vector<Vec3> v = m.vertices();
    for (auto& p : v) p.normalize();
    m = TriMesh(std::move(v), m.faces());
  }
  std::vector<Vec3> v = m.vertices();
  for (auto& p : v) p *= radius;
  return TriMesh(std::move(v), m.faces());
}

TriMesh ellipsoid(double rx, double ry, double rz, int subdivisions) {
  TriMesh m = icosphere(1.0, subdivisions);
  std::vector<Vec3> v = m.vertices();
  for (auto& p : v) p = Vec3(p.x() * rx, p.y() * ry, p.z() * rz);
  return TriMesh(std::move(v), m.faces());
}

namespace {

// Lateral surface of revolution between rings[0] (bottom) and rings.back()
// (top), each ring with `segments` vertices; caller closes the ends.
// Returns vertex ids ring-major.
std::vector<int> add_rings(VertexPool& pool, const std::vector<std::pair<double, double>>& rz,
                           int segments) {
  std::vector<int> ids;
  ids.reserve(rz.size() * segments);
  for (auto [r, z] : rz)
    for (int s = 0; s < segments; ++s) {
      double a = 2.0 * kPi * s / segments;
      ids.push_back(pool.add({r * std::cos(a), r * std::sin(a), z}));
    }
  return ids;
}

void stitch_rings(FaceList& faces, const std::vector<int>& ids, int nrings, int segments) {
  for (int r = 0; r + 1 < nrings; ++r)
    for (int s = 0; s < segments; ++s) {
      int s1 = (s + 1) % segments;
      int a = ids[r * segments + s], b = ids[r * segments + s1];
      int c = ids[(r + 1) * segments + s], d = ids[(r + 1) * segments + s1];
      faces.push_back({a, b, d});
      faces.push_back({a, d, c});
    }
}

void cap_fan(FaceList& faces, const std::vector<int>& ring, int center, bool flip) {
  int n = static_cast<int>(ring.size());
  for (int s = 0; s < n; ++s) {
    int a = ring[s], b = ring[(s + 1) % n];
    if (flip) faces.push_back({center, b, a});
    else faces.push_back({center, a, b});
  }
}

}  // namespace

TriMesh cylinder(double radius, double height, int segments, int rings) {
  VertexPool pool;
  std::vector<std::pair<double, double>> rz;
  for (int r = 0; r <= rings; ++r)
    rz.push_back({radius, height * (double(r) / rings - 0.5)});
  auto ids = add_rings(pool, rz, segments);
  FaceList faces;
  stitch_rings(faces, ids, rings + 1, segments);
  int bottom = pool.add({0, 0, -height / 2});
  int top = pool.add({0, 0, height / 2});
  std::vector<int> bring(ids.begin(), ids.begin() + segments);
  std::vector<int> tring(ids.end() - segments, ids.end());
  cap_fan(faces, bring, bottom, /*flip=*/true);
  cap_fan(faces, tring, top, /*flip=*/false);
  return TriMesh(pool.take(), std::move(faces));
}

TriMesh cone(double radius, double height, int segments, int rings) {
  VertexPool pool;
  std::vector<std::pair<double, double>> rz;
  for (int r = 0; r < rings; ++r) {
    double t = double(r) / rings;  // 0 at base, < 1 below apex
    rz.push_back({radius * (1.0 - t), height * (t - 0.5)});
  }
  auto ids = add_rings(pool, rz, segments);
  FaceList faces;
  stitch_rings(faces, ids, rings, segments);
  int apex = pool.add({0, 0, height / 2});
  int base = pool.add({0, 0, -height / 2});
  std::vector<int> top_ring(ids.end() - segments, ids.end());
  std::vector<int> base_ring(ids.begin(), ids.begin() + segments);
  cap_fan(faces, top_ring, apex, /*flip=*/false);
  cap_fan(faces, base_ring, base, /*flip=*/true);
  return TriMesh(pool.take(), std::move(faces));
}

TriMesh capsule(double radius, double mid_height, int segments, int cap_rings, int mid_rings) {
  VertexPool pool;
  std::vector<std::pair<double, double>> rz;
  double h2 = mid_height / 2;
  // bottom hemisphere (from just above the pole), cylinder, top hemisphere
  for (int r = cap_rings - 1; r >= 1; --r) {
    double a = (kPi / 2) * r / cap_rings;  // polar angle from equator
    rz.push_back({radius * std::cos(a), -h2 - radius * std::sin(a)});
  }
  for (int r = 0; r <= mid_rings; ++r)
    rz.push_back({radius, -h2 + mid_height * double(r) / mid_rings});
  for (int r = 1; r < cap_rings; ++r) {
    double a = (kPi / 2) * r / cap_rings;
    rz.push_back({radius * std::cos(a), h2 + radius * std::sin(a)});
  }
  auto ids = add_rings(pool, rz, segments);
  FaceList faces;
  stitch_rings(faces, ids, static_cast<int>(rz.size()), segments);
  int south = pool.add({0, 0, -h2 - radius});
  int north = pool.add({0, 0, h2 + radius});
  std::vector<int> bring(ids.begin(), ids.begin() + segments);
  std::vector<int> tring(ids.end() - segments, ids.end());
  cap_fan(faces, bring, south, /*flip=*/true);
  cap_fan(faces, tring, north, /*flip=*/false);
  return TriMesh(pool.take(), std::move(faces));
}

TriMesh torus(double major_radius, double minor_radius, int major_segments, int minor_segments) {
  std::vector<Vec3> v;
  v.reserve(major_segments * minor_segments);
  for (int i = 0; i < major_segments; ++i) {
    double u = 2.0 * kPi * i / major_segments;
    for (int j = 0; j < minor_segments; ++j) {
      double w = 2.0 * kPi * j / minor_segments;
      double r = major_radius + minor_radius * std::cos(w);
      v.push_back({r * std::cos(u), r * std::sin(u), minor_radius * std::sin(w)});
    }
  }
  FaceList faces;
  auto id = [&](int i, int j) {
    return (i % major_segments) * minor_segments + (j % minor_segments);
  };
  for (int i = 0; i < major_segments; ++i)
    for (int j = 0; j < minor_segments; ++j) {
      int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      faces.push_back({a, b, c});
      faces.push_back({a, c, d});
    }
  return TriMesh(std::move(v), std::move(faces));
}

TriMesh square_pyramid(double base_x, double base_y, double height, int subdivisions) {
  double hx = base_x / 2, hy = base_y / 2;
  std::vector<Vec3> v = {
      {-hx, -hy, 0}, {hx, -hy, 0}, {hx, hy, 0}, {-hx, hy, 0}, {0, 0, height}};
  FaceList f = {
      {0, 2, 1}, {0, 3, 2},                          // base, facing -z
      {0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4},    // sides
  };
  return subdivide_midpoint(TriMesh(std::move(v), std::move(f)), subdivisions);
}

namespace {

TriMesh prism(const std::vector<std::pair<double, double>>& polygon, double height,
              int subdivisions) {
  int n = static_cast<int>(polygon.size());
  std::vector<Vec3> v;
  for (auto [x, y] : polygon) v.push_back({x, y, -height / 2});
  for (auto [x, y] : polygon) v.push_back({x, y, height / 2});
  int cb = static_cast<int>(v.size());
  v.push_back({0, 0, -height / 2});
  int ct = static_cast<int>(v.size());
  v.push_back({0, 0, height / 2});

  FaceList f;
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    f.push_back({i, j, n + j});
    f.push_back({i, n + j, n + i});
    f.push_back({cb, j, i});          // bottom cap
    f.push_back({ct, n + i, n + j});  // top cap
  }
  return subdivide_midpoint(TriMesh(std::move(v), std::move(f)), subdivisions);
}

}  // namespace

TriMesh triangular_prism(double edge, double height, int subdivisions) {
  double r = edge / std::sqrt(3.0);  // circumradius of equilateral triangle
  std::vector<std::pair<double, double>> poly;
  for (int i = 0; i < 3; ++i) {
    double a = 2.0 * kPi * i / 3 + kPi / 2;
    poly.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return prism(poly, height, subdivisions);
}

TriMesh hexagonal_prism(double radius, double height, int subdivisions) {
  std::vector<std::pair<double, double>> poly;
  for (int i = 0; i < 6; ++i) {
    double a = 2.0 * kPi * i / 6;
    poly.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return prism(poly, height, subdivisions);
}

TriMesh genus_plate(int genus, double scale) {
  // Boundary surface of a (2g+1) x 3 x 1 voxel slab with g voxel holes.
  int nx = 2 * genus + 1, ny = 3, nz = 1;
  auto solid = [&](int x, int y, int z) {
    if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz) return false;
    if (y == 1 && x % 2 == 1) return false;  // the holes
    return true;
  };

  std::map<std::array<int, 3>, int> corner_ids;
  std::vector<Vec3> verts;
  auto corner = [&](int x, int y, int z) {
    auto it = corner_ids.find({x, y, z});
    if (it != corner_ids.end()) return it->second;
    verts.push_back(Vec3(x, y, z) * scale);
    int id = static_cast<int>(verts.size()) - 1;
    corner_ids.emplace(std::array<int, 3>{x, y, z}, id);
    return id;
  };

  FaceList faces;
  // For each empty->solid transition, emit the shared square, oriented so
  // the normal points toward the empty cell.
  struct Dir {
    int dx, dy, dz;
    std::array<std::array<int, 3>, 4> quad;  // CCW seen from outside
  };
  const std::vector<Dir> dirs = {
      {+1, 0, 0, {{{1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {1, 0, 1}}}},
      {-1, 0, 0, {{{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, 0}}}},
      {0, +1, 0, {{{0, 1, 0}, {0, 1, 1}, {1, 1, 1}, {1, 1, 0}}}},
      {0, -1, 0, {{{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}}}},
      {0, 0, +1, {{{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}}},
      {0, 0, -1, {{{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}}}},
  };
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z) {
        if (!solid(x, y, z)) continue;
        for (const auto& d : dirs) {
          if (solid(x + d.dx, y + d.dy, z + d.dz)) continue;
          std::array<int, 4> q;
          for (int c = 0; c < 4; ++c)
            q[c] = corner(x + d.quad[c][0], y + d.quad[c][1], z + d.quad[c][2]);
          faces.push_back({q[0], q[1], q[2]});
          faces.push_back({q[0], q[2], q[3]});
        }
      }
  return TriMesh(std::move(verts), std::move(faces));
}

TriMesh grid_patch(int nx, int ny, double spacing) {
  std::vector<Vec3> v;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) v.push_back({i * spacing, j * spacing, 0.0});
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  FaceList f;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return TriMesh(std::move(v), std::move(f));
}

TriMesh disk_fan(int segments, double radius) {
  std::vector<Vec3> v = {{0, 0, 0}};
  for (int s = 0; s < segments; ++s) {
    double a = 2.0 * kPi * s / segments;
    v.push_back({radius * std::cos(a), radius * std::sin(a), 0.0});
  }
  FaceList f;
  for (int s = 0; s < segments; ++s) f.push_back({0, 1 + s, 1 + (s + 1) % segments});
  return TriMesh(std::move(v), std::move(f));
}

}  // namespace meshspec::shapes
