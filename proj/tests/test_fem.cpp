#include <doctest.h>

#include <numbers>
#include <random>

#include "meshspec/fem.hpp"
#include "meshspec/shapes.hpp"
#include "support/dense_oracle.hpp"
#include "support/fixtures.hpp"

using namespace meshspec;

namespace {

// Eigenvalue comparison with a floor for the numerically-zero head of the
// spectrum: relative 1e-8 elsewhere.
void check_spectra_close(const std::vector<double>& got, const std::vector<double>& expect,
                         double rel = 1e-8) {
  REQUIRE(got.size() == expect.size());
  double scale = std::abs(expect.back());
  for (std::size_t i = 0; i < got.size(); ++i) {
    double bound = std::max(rel * std::abs(expect[i]), 1e-10 * std::max(scale, 1.0));
    CHECK(std::abs(got[i] - expect[i]) <= bound);
  }
}

TriMesh single_equilateral_triangle() {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2.0, 0}};
  return TriMesh(std::move(v), {{0, 1, 2}});
}

}  // namespace

TEST_CASE("stiffness assembly") {
  SUBCASE("equilateral triangle off-diagonals are -1/(2 sqrt 3)") {
    auto k = assemble_stiffness(single_equilateral_triangle());
    const double expected = -1.0 / (2.0 * std::sqrt(3.0));
    CHECK(k.coeff(0, 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(k.coeff(1, 2) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(k.coeff(2, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("constant vector lies in the kernel") {
    auto k = assemble_stiffness(testing::bumpy_sphere(2, 21));
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(k.rows());
    Eigen::VectorXd r = k * ones;
    double row_scale = 0;
    for (int i = 0; i < k.outerSize(); ++i)
      for (Eigen::SparseMatrix<double>::InnerIterator it(k, i); it; ++it)
        row_scale = std::max(row_scale, std::abs(it.value()));
    CHECK(r.cwiseAbs().maxCoeff() <= 1e-10 * row_scale);
  }
  SUBCASE("scale invariance") {
    TriMesh m = testing::bumpy_sphere(1, 22);
    auto k1 = assemble_stiffness(m);
    auto k2 = assemble_stiffness(scale_uniform(m, 5.5));
    for (int i = 0; i < k1.outerSize(); ++i)
      for (Eigen::SparseMatrix<double>::InnerIterator it(k1, i); it; ++it)
        CHECK(k2.coeff(it.row(), it.col()) == doctest::Approx(it.value()).epsilon(1e-12));
  }
  SUBCASE("symmetry and positive semidefiniteness") {
    auto k = assemble_stiffness(testing::bumpy_sphere(2, 23));
    Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(k.transpose()) - k;
    CHECK(diff.coeffs().cwiseAbs().maxCoeff() < 1e-12);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd x(k.rows());
      for (int i = 0; i < x.size(); ++i) x[i] = g(rng);
      x.normalize();
      CHECK(x.dot(k * x) >= -1e-10);
    }
  }
  SUBCASE("degenerate triangle reports the face index") {
    std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}};
    TriMesh m(v, {{0, 1, 3}, {0, 2, 1}});
    try {
      assemble_stiffness(m);
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("face 1") != std::string::npos);
    }
  }
}

TEST_CASE("mass assembly") {
  SUBCASE("single triangle block") {
    TriMesh tri = single_equilateral_triangle();
    double area = total_area(tri);
    auto m = assemble_mass(tri);
    CHECK(m.coeff(0, 0) == doctest::Approx(area / 6).epsilon(1e-12));
    CHECK(m.coeff(0, 1) == doctest::Approx(area / 12).epsilon(1e-12));
    CHECK(m.coeff(1, 2) == doctest::Approx(area / 12).epsilon(1e-12));
  }
  SUBCASE("entries sum to the surface area") {
    TriMesh t = shapes::tetrahedron();
    auto m = assemble_mass(t);
    CHECK(m.sum() == doctest::Approx(total_area(t)).epsilon(1e-12));
    auto lumped = assemble_mass(t, MassType::lumped);
    CHECK(lumped.sum() == doctest::Approx(total_area(t)).epsilon(1e-12));
  }
  SUBCASE("entries scale as c^2") {
    TriMesh m = testing::bumpy_sphere(1, 24);
    const double c = 3.0;
    auto m1 = assemble_mass(m);
    auto m2 = assemble_mass(scale_uniform(m, c));
    for (int i = 0; i < m1.outerSize(); ++i)
      for (Eigen::SparseMatrix<double>::InnerIterator it(m1, i); it; ++it)
        CHECK(m2.coeff(it.row(), it.col()) == doctest::Approx(c * c * it.value()).epsilon(1e-12));
  }
}

TEST_CASE("sphere spectrum matches l(l+1) clusters") {
  TriMesh sphere = shapes::icosphere(1.0, 4);  // 2562 vertices
  Spectrum s = lb_spectrum(sphere, 50);        // through l = 5 and into l = 6
  CHECK(s.stats.max_residual < 1e-8);
  CHECK(std::abs(s.eigenvalues[0]) < 1e-6 * std::max(s.eigenvalues[1], 1.0));
  int at = 1;
  for (int l = 1; l <= 5; ++l) {
    double mean = 0;
    for (int m = 0; m < 2 * l + 1; ++m) mean += s.eigenvalues[at++];
    mean /= 2 * l + 1;
    double exact = static_cast<double>(l) * (l + 1);
    CHECK(std::abs(mean - exact) / exact < 0.02);
  }
}

TEST_CASE("shift-invert agrees with the dense oracle") {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    TriMesh m = testing::bumpy_sphere(2, seed);  // 162 vertices
    auto ops = assemble_operators(m);
    Spectrum s = solve_spectrum(ops, 50);
    auto dense = testing::dense_reference_spectrum(ops, 50);
    check_spectra_close(s.eigenvalues, dense);
  }
}

TEST_CASE("spectrum invariances") {
  TriMesh m = testing::bumpy_sphere(2, 41);
  Spectrum base = lb_spectrum(m, 20);

  SUBCASE("vertex reindexing") {
    Spectrum p = lb_spectrum(testing::permute_vertices(m, 5), 20);
    check_spectra_close(p.eigenvalues, base.eigenvalues, 1e-9);
  }
  SUBCASE("rigid motion") {
    TriMesh r = rotate(m, Vec3(0.3, -0.4, 0.86).normalized(), 1.234);
    Spectrum p = lb_spectrum(r, 20);
    check_spectra_close(p.eigenvalues, base.eigenvalues, 1e-6);
  }
  SUBCASE("scaling law 1/c^2") {
    for (double c : {0.5, 2.0, 10.0}) {
      Spectrum p = lb_spectrum(scale_uniform(m, c), 20);
      std::vector<double> expect = base.eigenvalues;
      for (double& v : expect) v /= c * c;
      check_spectra_close(p.eigenvalues, expect, 1e-8);
    }
  }
  SUBCASE("repeat solve is bitwise identical") {
    Spectrum again = lb_spectrum(m, 20);
    for (std::size_t i = 0; i < base.eigenvalues.size(); ++i)
      CHECK(again.eigenvalues[i] == base.eigenvalues[i]);
  }
}

TEST_CASE("kernel dimension equals component count") {
  Spectrum one = lb_spectrum(testing::bumpy_sphere(1, 55), 6);
  CHECK(std::abs(one.eigenvalues[0]) < 1e-6 * one.eigenvalues[1]);
  CHECK(one.eigenvalues[1] > 1e-6);

  Spectrum two = lb_spectrum(testing::two_tetrahedra(), 4);
  double scale = std::max(two.eigenvalues[2], 1.0);
  CHECK(std::abs(two.eigenvalues[0]) < 1e-6 * scale);
  CHECK(std::abs(two.eigenvalues[1]) < 1e-6 * scale);
  CHECK(two.eigenvalues[2] > 1e-6);
}

TEST_CASE("denormalize_spectrum") {
  SUBCASE("identity at s = 1") {
    Spectrum s;
    s.eigenvalues = {0.0, 1.5, 3.25};
    s.k = 3;
    ScaleRecord rec;
    Spectrum out = denormalize_spectrum(s, rec);
    CHECK(out.eigenvalues == s.eigenvalues);
  }
  SUBCASE("round trip against direct computation") {
    TriMesh m = scale_uniform(testing::bumpy_sphere(2, 60), 8.0);
    Spectrum direct = lb_spectrum(m, 12);
    auto [normalized, rec] = normalize_unit_cube(m);
    Spectrum norm = lb_spectrum(normalized, 12);
    Spectrum restored = denormalize_spectrum(norm, rec);
    check_spectra_close(restored.eigenvalues, direct.eigenvalues, 1e-8);
  }
  SUBCASE("cube example: s = 0.25") {
    TriMesh c = translate(shapes::cube(4.0, 2), {10, 0, 0});
    Spectrum direct = lb_spectrum(c, 10);
    auto [normalized, rec] = normalize_unit_cube(c);
    REQUIRE(rec.scale_factor == doctest::Approx(0.25));
    Spectrum restored = denormalize_spectrum(lb_spectrum(normalized, 10), rec);
    check_spectra_close(restored.eigenvalues, direct.eigenvalues, 1e-8);
  }
}

TEST_CASE("solver edge cases") {
  TriMesh t = shapes::tetrahedron();
  auto ops = assemble_operators(t);
  SUBCASE("k above N is rejected at the solver layer") {
    CHECK_THROWS_AS(solve_spectrum(ops, 50), NumericalError);
    CHECK_THROWS_AS(solve_spectrum(ops, 0), NumericalError);
  }
  SUBCASE("lb_spectrum clamps k to the vertex count") {
    Spectrum s = lb_spectrum(t, 50);
    CHECK(s.k == 4);
    CHECK(s.eigenvalues.size() == 4);
    auto dense = testing::dense_reference_spectrum(ops, 4);
    check_spectra_close(s.eigenvalues, dense);
  }
  SUBCASE("eigenvalues are non-decreasing and positive past the kernel") {
    Spectrum s = lb_spectrum(testing::bumpy_sphere(2, 70), 30);
    for (std::size_t i = 1; i < s.eigenvalues.size(); ++i) {
      CHECK(s.eigenvalues[i] >= s.eigenvalues[i - 1]);
      CHECK(s.eigenvalues[i] > 0);
    }
  }
  SUBCASE("lumped mass variant stays close to consistent") {
    TriMesh m = shapes::icosphere(1.0, 3);
    Spectrum consistent = lb_spectrum(m, 10);
    Spectrum lumped = lb_spectrum(m, 10, {}, MassType::lumped);
    for (int i = 1; i < 10; ++i)
      CHECK(std::abs(lumped.eigenvalues[i] - consistent.eigenvalues[i]) <
            0.05 * consistent.eigenvalues[i]);
  }
}
