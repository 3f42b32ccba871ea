#pragma once

#include "meshspec/mesh.hpp"

namespace meshspec {

struct RemeshOptions {
  int target_vertex_min = 1750;
  int target_vertex_max = 2250;
  int max_outer_iterations = 12;  // target-edge-length adjustments
  int max_passes_per_iteration = 48;
  double relax_lambda = 0.5;
  double uniform_cov_early_exit = 0.20;
};

/// Raised when the vertex count cannot be driven into the target window.
struct RemeshFailure : NumericalError {
  using NumericalError::NumericalError;
};

/// Explicit isotropic remeshing: split long edges, collapse short ones
/// (midpoint, link-condition guarded), flip toward valence 6, tangentially
/// relax. Topology (genus, closedness, orientation) is preserved; the
/// target edge length is adjusted between iterations until the vertex
/// count lands inside the window. Requires a closed manifold input.
TriMesh isotropic_remesh(const TriMesh& input, const RemeshOptions& options = {});

/// Coefficient of variation of edge lengths (stddev / mean).
double edge_length_cov(const TriMesh& mesh);

}  // namespace meshspec
