#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "meshspec/mesh.hpp"

namespace meshspec {

/// Per-vertex and per-edge geometric features, the network input.
/// Node feature columns are fixed: [x, y, z, voronoi_area,
/// gaussian_curvature, mean_curvature, kappa1, kappa2]. The edge list is
/// directed (both directions of every undirected edge) and each direction
/// carries the same normalized-length weight.
struct FeatureSet {
  static constexpr int kNodeDim = 8;

  Eigen::MatrixXd node_features;                   // N x 8
  Eigen::Matrix<int, 2, Eigen::Dynamic> edge_index;  // 2 x 2|E|, rows: src, dst
  Eigen::VectorXd edge_weights;                    // 2|E|
  std::vector<int> degenerate_fits;                // vertices with failed quadric fit
};

/// l_ij / max l_ij per undirected edge, aligned with mesh.edges().
/// All values in (0,1], the maximal edge maps to exactly 1.
std::vector<double> normalized_edge_lengths(const TriMesh& mesh);

/// Mixed Voronoi cell areas: circumcentric Voronoi pieces in non-obtuse
/// triangles; area/2 at the obtuse corner and area/4 at the others
/// otherwise. Partitions the surface: sums to total_area.
std::vector<double> mixed_voronoi_areas(const TriMesh& mesh);

/// Angle deficit 2*pi - sum of incident interior angles, no area division.
std::vector<double> unweighted_gaussian_curvature(const TriMesh& mesh);

/// sum_j (cot a_ij + cot b_ij) * |v_i - v_j| over the one-ring, using the
/// scalar edge length. Requires every incident edge to have both opposite
/// angles, i.e. a closed mesh.
std::vector<double> unweighted_mean_curvature(const TriMesh& mesh);

struct PrincipalCurvatureField {
  std::vector<double> kappa1;  // kappa1 >= kappa2 everywhere
  std::vector<double> kappa2;
  std::vector<int> degenerate;  // vertices where the fit stayed rank-deficient
};

/// Principal curvatures by quadric fitting over the 2-ring (rings expand
/// until at least 6 usable points). Rank-deficient vertices get (0,0) and
/// are listed in `degenerate`.
PrincipalCurvatureField principal_curvatures(const TriMesh& mesh);

FeatureSet assemble_features(const TriMesh& mesh);

// Area-normalized curvature variants. Test-support only; the FeatureSet
// deliberately carries the unweighted forms.
std::vector<double> weighted_gaussian_curvature(const TriMesh& mesh);
std::vector<double> weighted_mean_curvature(const TriMesh& mesh);

namespace detail {
/// cot of the angle at `apex` in triangle (apex, a, b).
double cotangent(const Vec3& apex, const Vec3& a, const Vec3& b);
}  // namespace detail

}  // namespace meshspec
