#include "meshspec/fem.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "meshspec/parallel.hpp"

namespace meshspec {

namespace {

using Clock = std::chrono::steady_clock;
using Triplet = Eigen::Triplet<double>;
using SpMat = Eigen::SparseMatrix<double>;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct FaceGeometry {
  std::array<double, 3> cot;  // cotangent at each corner
  double area;
};

FaceGeometry face_geometry(const TriMesh& mesh, int f) {
  const auto& fv = mesh.face(f);
  const Vec3& p0 = mesh.vertex(fv[0]);
  const Vec3& p1 = mesh.vertex(fv[1]);
  const Vec3& p2 = mesh.vertex(fv[2]);
  Vec3 cross = (p1 - p0).cross(p2 - p0);
  double cn = cross.norm();
  double scale2 =
      std::max({(p1 - p0).squaredNorm(), (p2 - p1).squaredNorm(), (p0 - p2).squaredNorm()});
  if (cn < 1e-14 * scale2)
    throw NumericalError("degenerate triangle at face " + std::to_string(f));
  FaceGeometry g;
  g.area = 0.5 * cn;
  g.cot[0] = (p1 - p0).dot(p2 - p0) / cn;
  g.cot[1] = (p2 - p1).dot(p0 - p1) / cn;
  g.cot[2] = (p0 - p2).dot(p1 - p2) / cn;
  return g;
}

// Chunked parallel triplet generation; chunks are concatenated in index
// order so the accumulated matrix is independent of the schedule.
template <typename PerFace>
std::vector<Triplet> gather_triplets(const TriMesh& mesh, int per_face, PerFace emit) {
  const int nf = mesh.face_count();
  const int chunk = 1024;
  const int nchunks = (nf + chunk - 1) / chunk;
  std::vector<std::vector<Triplet>> buffers(nchunks);
  parallel_for(0, nchunks, [&](int c) {
    auto& buf = buffers[c];
    buf.reserve(chunk * per_face);
    for (int f = c * chunk; f < std::min(nf, (c + 1) * chunk); ++f) emit(f, buf);
  });
  std::vector<Triplet> all;
  all.reserve(static_cast<std::size_t>(nf) * per_face);
  for (auto& buf : buffers) all.insert(all.end(), buf.begin(), buf.end());
  return all;
}

}  // namespace

Eigen::SparseMatrix<double> assemble_stiffness(const TriMesh& mesh) {
  auto triplets = gather_triplets(mesh, 12, [&](int f, std::vector<Triplet>& buf) {
    FaceGeometry g = face_geometry(mesh, f);
    const auto& fv = mesh.face(f);
    for (int c = 0; c < 3; ++c) {
      int a = fv[(c + 1) % 3], b = fv[(c + 2) % 3];
      double w = 0.5 * g.cot[c];
      buf.emplace_back(a, a, w);
      buf.emplace_back(b, b, w);
      buf.emplace_back(a, b, -w);
      buf.emplace_back(b, a, -w);
    }
  });
  SpMat k(mesh.vertex_count(), mesh.vertex_count());
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

Eigen::SparseMatrix<double> assemble_mass(const TriMesh& mesh, MassType type) {
  auto triplets = gather_triplets(mesh, 9, [&](int f, std::vector<Triplet>& buf) {
    FaceGeometry g = face_geometry(mesh, f);
    const auto& fv = mesh.face(f);
    if (type == MassType::lumped) {
      for (int c = 0; c < 3; ++c) buf.emplace_back(fv[c], fv[c], g.area / 3.0);
      return;
    }
    for (int c = 0; c < 3; ++c) {
      buf.emplace_back(fv[c], fv[c], g.area / 6.0);
      buf.emplace_back(fv[c], fv[(c + 1) % 3], g.area / 12.0);
      buf.emplace_back(fv[(c + 1) % 3], fv[c], g.area / 12.0);
    }
  });
  SpMat m(mesh.vertex_count(), mesh.vertex_count());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

SparseOperatorPair assemble_operators(const TriMesh& mesh, MassType type) {
  return {assemble_stiffness(mesh), assemble_mass(mesh, type)};
}

namespace {

// Shift-invert block Lanczos in the M inner product with full
// reorthogonalization. The operator (K - shift M)^{-1} M has eigenvalues
// theta = 1/(lambda - shift), so the k largest theta are the k smallest
// lambda. Blocks (rather than single vectors) are required to resolve
// multiple eigenvalues: symmetric meshes carry true multiplicities that a
// rank-1 Krylov space provably misses. Ritz pairs are accepted only after
// their residuals pass on the assembled K and M directly.
class ShiftInvertLanczos {
 public:
  ShiftInvertLanczos(const SparseOperatorPair& ops, int k, const SolverOptions& opt)
      : ops_(ops), k_(k), opt_(opt), n_(static_cast<int>(ops.stiffness.rows())) {}

  Spectrum run() {
    Spectrum out;
    out.k = k_;
    factorize(out.stats);

    const int block = std::min(8, n_);
    max_cols_ = std::min(n_, opt_.max_iterations_per_k * k_ + 100);
    basis_.resize(n_, max_cols_);
    mbasis_.resize(n_, max_cols_);
    tmat_ = Eigen::MatrixXd::Zero(max_cols_, max_cols_);
    rng_.seed(opt_.seed);

    last_lo_ = 0;
    last_sz_ = append_random_columns(block);
    if (last_sz_ == 0) throw NumericalError("Lanczos start block failed");
    cols_ = last_sz_;

    Eigen::VectorXd values;
    int steps = 0;
    while (true) {
      bool progressed = step();
      ++steps;
      bool at_limit = !progressed;
      if ((at_limit || steps % 2 == 0) && try_extract(values, at_limit)) break;
      if (at_limit)
        throw NumericalError("eigensolver did not converge after " + std::to_string(cols_) +
                             " basis columns (max residual " +
                             std::to_string(last_max_residual_) + ")");
    }

    out.eigenvalues.assign(values.data(), values.data() + k_);
    out.stats.iterations = cols_;
    out.stats.max_residual = last_max_residual_;
    out.stats.shift = shift_;
    return out;
  }

 private:
  void factorize(SolverStats& stats) {
    shift_ = opt_.shift;
    int retries = 0;
    while (true) {
      SpMat c = ops_.stiffness - shift_ * ops_.mass;
      ldlt_.compute(c);
      if (ldlt_.info() == Eigen::Success) break;
      if (++retries > 3)
        throw NumericalError("sparse factorization of (K - shift M) failed after 3 shift retries");
      shift_ -= 0.1;
    }
    stats.factorization_retries = retries;
  }

  // M-orthonormalize v against basis columns [0, col); on success store it
  // at `col` and return true.
  bool place_column(Eigen::VectorXd v, int col) {
    for (int pass = 0; pass < 2; ++pass) {
      if (col > 0) {
        Eigen::VectorXd h = mbasis_.leftCols(col).transpose() * v;
        v.noalias() -= basis_.leftCols(col) * h;
      }
    }
    Eigen::VectorXd mv = ops_.mass * v;
    double norm = std::sqrt(std::max(v.dot(mv), 0.0));
    if (norm <= 1e-10 * std::sqrt(mass_scale())) return false;
    basis_.col(col) = v / norm;
    mbasis_.col(col) = mv / norm;
    return true;
  }

  double mass_scale() {
    if (mass_scale_ == 0.0) {
      mass_scale_ = ops_.mass.diagonal().cwiseAbs().maxCoeff();
      if (mass_scale_ <= 0.0) mass_scale_ = 1.0;
    }
    return mass_scale_;
  }

  // Fresh random M-orthonormal columns starting at cols_; returns how many
  // were placed before the complement ran out.
  int append_random_columns(int want) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    int added = 0;
    while (added < want && cols_ + added < max_cols_ && cols_ + added < n_) {
      bool placed = false;
      for (int attempt = 0; attempt < 8 && !placed; ++attempt) {
        Eigen::VectorXd v(n_);
        for (int i = 0; i < n_; ++i) v[i] = gauss(rng_);
        placed = place_column(std::move(v), cols_ + added);
      }
      if (!placed) break;
      ++added;
    }
    return added;
  }

  // One block step. Applies the operator to the newest block, records the
  // diagonal T block, fully reorthogonalizes, and M-orthonormalizes the
  // residual into the next block (coupling written into T). Returns false
  // when no new column could be produced.
  bool step() {
    const int lo = last_lo_, sz = last_sz_;
    if (sz == 0) return false;

    Eigen::MatrixXd w(n_, sz);
    for (int c = 0; c < sz; ++c) w.col(c) = ldlt_.solve(mbasis_.col(lo + c));

    // rank threshold must reflect the operator-output scale before any
    // subtraction: post-reorthogonalization residuals near machine noise
    // would otherwise normalize into garbage basis columns
    double op_scale = 0.0;
    for (int c = 0; c < sz; ++c) {
      Eigen::VectorXd mw = ops_.mass * w.col(c);
      op_scale = std::max(op_scale, std::sqrt(std::max(w.col(c).dot(mw), 0.0)));
    }

    // record the full Galerkin column block T(:, lo..lo+sz) = V^T M Op V_j.
    // Restart columns break the three-term recurrence, so T must be the
    // true projected operator, not the recurrence shadow.
    Eigen::MatrixXd h = mbasis_.leftCols(cols_).transpose() * w;
    tmat_.block(0, lo, cols_, sz) = h;
    tmat_.block(lo, 0, sz, cols_) = h.transpose();
    w.noalias() -= basis_.leftCols(cols_) * h;
    Eigen::MatrixXd h2 = mbasis_.leftCols(cols_).transpose() * w;
    w.noalias() -= basis_.leftCols(cols_) * h2;

    const int room = std::min(n_, max_cols_) - cols_;
    if (room <= 0) return false;

    const int next_lo = cols_;
    const int take = std::min(sz, room);
    int accepted = 0;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int c = 0; c < take; ++c) {
      Eigen::VectorXd v = w.col(c);
      Eigen::VectorXd coef = Eigen::VectorXd::Zero(sz);
      for (int p = 0; p < accepted; ++p) {
        double r = mbasis_.col(next_lo + p).dot(v);
        v.noalias() -= r * basis_.col(next_lo + p);
        coef[p] = r;
      }
      Eigen::VectorXd mv = ops_.mass * v;
      double norm = std::sqrt(std::max(v.dot(mv), 0.0));
      if (norm > 1e-12 * op_scale) {
        basis_.col(next_lo + accepted) = v / norm;
        mbasis_.col(next_lo + accepted) = mv / norm;
        coef[accepted] = norm;
        for (int p = 0; p <= accepted; ++p) {
          tmat_(next_lo + p, lo + c) = coef[p];
          tmat_(lo + c, next_lo + p) = coef[p];
        }
        ++accepted;
      } else {
        // exhausted direction: restart it with a fresh zero-coupled vector
        bool placed = false;
        for (int attempt = 0; attempt < 8 && !placed; ++attempt) {
          Eigen::VectorXd fresh(n_);
          for (int i = 0; i < n_; ++i) fresh[i] = gauss(rng_);
          placed = place_column(std::move(fresh), next_lo + accepted);
        }
        if (placed) ++accepted;
      }
    }
    if (accepted == 0) return false;

    last_lo_ = next_lo;
    last_sz_ = accepted;
    cols_ = next_lo + accepted;
    return true;
  }

  // Ritz extraction. Without `force`, Ritz pairs come from the basis
  // before the newest block, so the coupling rows into that block give the
  // exact residual bound; the assembled-operator residual is then the
  // final gate. With `force`, the full basis is used and only the final
  // gate applies.
  bool try_extract(Eigen::VectorXd& values, bool force) {
    const int m = force ? cols_ : last_lo_;
    if (m < k_) return false;

    Eigen::MatrixXd tsym =
        0.5 * (tmat_.topLeftCorner(m, m) + tmat_.topLeftCorner(m, m).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tsym);
    if (es.info() != Eigen::Success) return false;
    const auto& theta = es.eigenvalues();  // ascending
    const auto& y = es.eigenvectors();

    if (!force) {
      Eigen::MatrixXd coupling = tmat_.block(last_lo_, 0, last_sz_, m);
      for (int r = 0; r < k_; ++r) {
        int idx = m - 1 - r;
        double resid = (coupling * y.col(idx)).norm();
        if (resid > opt_.tolerance * std::max(std::abs(theta[idx]), 1e-30)) return false;
      }
    }

    values.resize(k_);
    Eigen::MatrixXd coeff(m, k_);
    for (int r = 0; r < k_; ++r) coeff.col(r) = y.col(m - 1 - r);  // largest theta first

    // theta selects the pairs; the eigenvalue itself comes from the
    // Rayleigh quotient on the original pencil, which keeps full precision
    // even where 1/theta would amplify T round-off.
    Eigen::MatrixXd u = basis_.leftCols(m) * coeff;
    double worst = 0.0;
    for (int r = 0; r < k_; ++r) {
      Eigen::VectorXd ku = ops_.stiffness * u.col(r);
      Eigen::VectorXd mu = ops_.mass * u.col(r);
      double lambda = u.col(r).dot(ku) / std::max(u.col(r).dot(mu), 1e-300);
      values[r] = lambda;
      double denom = std::max(mu.norm() * std::max(std::abs(lambda), 1.0), 1e-300);
      worst = std::max(worst, (ku - lambda * mu).norm() / denom);
    }
    last_max_residual_ = worst;
    if (worst > 1e-8) return false;

    std::sort(values.data(), values.data() + k_);
    return true;
  }

  const SparseOperatorPair& ops_;
  int k_;
  SolverOptions opt_;
  int n_;
  int max_cols_ = 0;
  int cols_ = 0;
  int last_lo_ = 0, last_sz_ = 0;
  double shift_ = 0.0;
  double mass_scale_ = 0.0;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  Eigen::MatrixXd basis_, mbasis_, tmat_;
  std::mt19937_64 rng_;
  double last_max_residual_ = 0.0;
};

}  // namespace

Spectrum solve_spectrum(const SparseOperatorPair& ops, int k, const SolverOptions& options) {
  const int n = static_cast<int>(ops.stiffness.rows());
  if (k < 1 || k > n)
    throw NumericalError("requested " + std::to_string(k) +
                         " eigenvalues from an operator of size " + std::to_string(n));
  auto t0 = Clock::now();
  ShiftInvertLanczos solver(ops, k, options);
  Spectrum out = solver.run();
  out.stats.solve_ms = elapsed_ms(t0);
  return out;
}

Spectrum lb_spectrum(const TriMesh& mesh, int k, const SolverOptions& options, MassType mass) {
  auto t0 = Clock::now();
  SparseOperatorPair ops = assemble_operators(mesh, mass);
  double assemble_ms = elapsed_ms(t0);
  int k_eff = std::min(k, mesh.vertex_count());
  Spectrum out = solve_spectrum(ops, k_eff, options);
  out.stats.assemble_ms = assemble_ms;
  return out;
}

Spectrum denormalize_spectrum(const Spectrum& spectrum, const ScaleRecord& record) {
  if (!(record.scale_factor > 0)) throw NumericalError("scale factor must be positive");
  Spectrum out = spectrum;
  const double s2 = record.scale_factor * record.scale_factor;
  for (double& v : out.eigenvalues) v *= s2;
  out.scale = record;
  return out;
}

}  // namespace meshspec
