#pragma once

#include <Eigen/SparseCore>
#include <optional>
#include <vector>

#include "meshspec/mesh.hpp"

namespace meshspec {

enum class MassType { consistent, lumped };

/// Stiffness K and mass M of the linear FEM discretization. K is the
/// positive-semidefinite cotangent operator (rows sum to zero), M the
/// Galerkin mass matrix whose entries sum to the surface area; both are
/// symmetric. Immutable after assembly.
struct SparseOperatorPair {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::SparseMatrix<double> mass;
};

struct SolverStats {
  int iterations = 0;
  double max_residual = 0.0;  // max over pairs of |Ku - lambda Mu| / (|Mu| max(lambda,1))
  double shift = 0.0;
  int factorization_retries = 0;
  double solve_ms = 0.0;
  double assemble_ms = 0.0;
};

/// Non-decreasing eigenvalue sequence with solver metadata. For a closed
/// connected mesh the first entry is numerically zero.
struct Spectrum {
  std::vector<double> eigenvalues;
  int k = 0;
  std::optional<ScaleRecord> scale;
  SolverStats stats;
};

struct SolverOptions {
  double shift = -0.01;
  double tolerance = 1e-10;      // relative Ritz residual target
  int max_iterations_per_k = 10;  // iteration cap = 10 k + 100
  std::uint64_t seed = 0x5eed;   // start-vector seed, fixed for determinism
};

Eigen::SparseMatrix<double> assemble_stiffness(const TriMesh& mesh);
Eigen::SparseMatrix<double> assemble_mass(const TriMesh& mesh,
                                          MassType type = MassType::consistent);
SparseOperatorPair assemble_operators(const TriMesh& mesh,
                                      MassType type = MassType::consistent);

/// k algebraically smallest generalized eigenvalues of K u = lambda M u via
/// shift-invert Lanczos (sparse Cholesky of K - shift*M, full
/// reorthogonalization in the M inner product). Requires k < N.
Spectrum solve_spectrum(const SparseOperatorPair& ops, int k,
                        const SolverOptions& options = {});

/// Assemble + solve, clamping k to the mesh size; records wall-clock times.
Spectrum lb_spectrum(const TriMesh& mesh, int k, const SolverOptions& options = {},
                     MassType mass = MassType::consistent);

/// Map the spectrum of a normalized mesh back to the original scale:
/// lambda_original = lambda_normalized * s^2.
Spectrum denormalize_spectrum(const Spectrum& spectrum, const ScaleRecord& record);

}  // namespace meshspec
