#pragma once

#include "meshspec/mesh.hpp"

namespace meshspec::shapes {

// Closed, consistently oriented primitive generators. These back both the
// synthetic-dataset classes and the test fixtures.

TriMesh tetrahedron(double scale = 1.0);
TriMesh cube(double side = 1.0, int subdivisions = 0);
TriMesh box(double ax, double ay, double az, int subdivisions = 0);
TriMesh icosahedron(double radius = 1.0);
TriMesh icosphere(double radius = 1.0, int subdivisions = 3);
TriMesh ellipsoid(double rx, double ry, double rz, int subdivisions = 2);
TriMesh cylinder(double radius, double height, int segments = 16, int rings = 6);
TriMesh cone(double radius, double height, int segments = 16, int rings = 5);
TriMesh capsule(double radius, double mid_height, int segments = 12, int cap_rings = 4,
                int mid_rings = 2);
TriMesh torus(double major_radius, double minor_radius, int major_segments = 24,
              int minor_segments = 12);
TriMesh square_pyramid(double base_x, double base_y, double height, int subdivisions = 0);
TriMesh triangular_prism(double edge, double height, int subdivisions = 0);
TriMesh hexagonal_prism(double radius, double height, int subdivisions = 0);

/// Closed genus-g surface: the boundary of a voxel slab with g through-holes.
TriMesh genus_plate(int genus, double scale = 1.0);

/// Open planar grid patch on z=0, (nx+1)*(ny+1) vertices. Test fixture.
TriMesh grid_patch(int nx, int ny, double spacing = 1.0);

/// Open triangle fan around a center vertex at the origin. Test fixture.
TriMesh disk_fan(int segments, double radius = 1.0);

/// Midpoint (1-to-4) triangle subdivision; positions untouched, so the
/// polyhedral shape and its topology are preserved.
TriMesh subdivide_midpoint(const TriMesh& mesh, int times = 1);

}  // namespace meshspec::shapes
