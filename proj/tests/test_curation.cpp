#include <doctest.h>

#include <filesystem>
#include <set>

#include "meshspec/curation.hpp"
#include "meshspec/mesh_io.hpp"
#include "meshspec/shapes.hpp"
#include "support/fixtures.hpp"

using namespace meshspec;
namespace fs = std::filesystem;

TEST_CASE("filter decisions") {
  CurationPolicy policy;
  CHECK(!filter(validate(shapes::tetrahedron()), policy).has_value());
  CHECK(!filter(validate(shapes::torus(2, 0.5)), policy).has_value());
  CHECK(!filter(validate(shapes::genus_plate(2)), policy).has_value());

  CHECK(filter(validate(shapes::genus_plate(3)), policy) == RejectReason::genus_exceeded);
  CHECK(filter(validate(shapes::disk_fan(8)), policy) == RejectReason::boundary);
  CHECK(filter(validate(testing::two_tetrahedra()), policy) == RejectReason::multi_component);
  CHECK(filter(validate(testing::nonmanifold_edge_fixture()), policy) ==
        RejectReason::non_manifold);

  CurationPolicy permissive;
  permissive.max_genus = 3;
  CHECK(!filter(validate(shapes::genus_plate(3)), permissive).has_value());
}

TEST_CASE("dedupe groups") {
  SUBCASE("identical spectra collapse into one group") {
    std::vector<std::vector<double>> spectra = {{1, 2, 3}, {5, 6, 7}, {1, 2, 3}};
    auto groups = dedupe_groups(spectra, 1e-8);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0] == std::vector<int>{0, 2});
  }
  SUBCASE("transitive closure chains") {
    std::vector<std::vector<double>> spectra = {{1.0}, {1.0 + 4e-9}, {1.0 + 8e-9}, {2.0}};
    auto groups = dedupe_groups(spectra, 1e-8);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0] == std::vector<int>{0, 1, 2});
  }
  SUBCASE("scaled copy is not a duplicate") {
    TriMesh m = testing::bumpy_sphere(2, 5);
    Spectrum a = lb_spectrum(m, 12);
    Spectrum b = lb_spectrum(scale_uniform(m, 2.0), 12);
    // eigenvalues differ by 4x, far beyond any tolerance
    auto groups = dedupe_groups({a.eigenvalues, b.eigenvalues}, 1e-8);
    CHECK(groups.empty());
  }
  SUBCASE("rotated copy is a duplicate under relative tolerance") {
    TriMesh m = testing::bumpy_sphere(2, 6);
    std::mt19937_64 rng(3);
    Spectrum a = lb_spectrum(m, 12);
    Spectrum b = lb_spectrum(rotate(m, random_rotation(rng)), 12);
    auto groups = dedupe_groups({a.eigenvalues, b.eigenvalues}, 1e-6, /*relative=*/true);
    REQUIRE(groups.size() == 1);
  }
  SUBCASE("mixed eigenvalue counts are an error") {
    CHECK_THROWS_AS(dedupe_groups({{1, 2}, {1, 2, 3}}, 1e-8), MeshError);
  }
}

TEST_CASE("augment") {
  TriMesh m = normalize_unit_cube(testing::bumpy_sphere(2, 9)).first;
  SUBCASE("zero rotations give an empty list") { CHECK(augment(m, 0, 1).empty()); }
  SUBCASE("seeded rotations are reproducible") {
    auto a = augment(m, 3, 42);
    auto b = augment(m, 3, 42);
    REQUIRE(a.size() == 3);
    for (int i = 0; i < 3; ++i)
      for (int v = 0; v < m.vertex_count(); ++v)
        CHECK((a[i].vertex(v) - b[i].vertex(v)).norm() == 0.0);
    auto c = augment(m, 3, 43);
    CHECK((a[0].vertex(0) - c[0].vertex(0)).norm() > 0);
  }
  SUBCASE("rotated copies keep the source spectrum") {
    Spectrum base = lb_spectrum(m, 10);
    for (const TriMesh& r : augment(m, 2, 7)) {
      Spectrum s = lb_spectrum(r, 10);
      for (int i = 1; i < 10; ++i)
        CHECK(std::abs(s.eigenvalues[i] - base.eigenvalues[i]) <=
              1e-6 * std::abs(base.eigenvalues[i]));
    }
  }
}

TEST_CASE("synthetic dataset") {
  SUBCASE("deterministic for a fixed seed") {
    SynthOptions opt;
    opt.eigenvalue_count = 6;
    auto a = synth_dataset({ShapeClass::box}, 3, 11, opt);
    auto b = synth_dataset({ShapeClass::box}, 3, 11, opt);
    REQUIRE(a.size() == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(a[i].id == b[i].id);
      REQUIRE(a[i].mesh.vertex_count() == b[i].mesh.vertex_count());
      for (int v = 0; v < a[i].mesh.vertex_count(); ++v)
        CHECK((a[i].mesh.vertex(v) - b[i].mesh.vertex(v)).norm() == 0.0);
      CHECK(a[i].eigenvalues == b[i].eigenvalues);
    }
  }
  SUBCASE("every generated mesh passes the filter") {
    CurationPolicy policy;
    SynthOptions opt;
    opt.eigenvalue_count = 4;
    for (const auto& sample : synth_dataset(all_shape_classes(), 2, 19, opt)) {
      CAPTURE(sample.id);
      CHECK(!filter(validate(sample.mesh), policy).has_value());
    }
  }
  SUBCASE("sphere-class sample matches the l(l+1)/r^2 pattern") {
    SynthOptions opt;
    opt.eigenvalue_count = 9;  // l = 0..2
    opt.normalize = false;
    opt.resolution = 2;
    auto samples = synth_dataset({ShapeClass::sphere}, 1, 123, opt);
    REQUIRE(samples.size() == 1);
    // recover the radius from the mesh itself (vertices sit at radius r)
    double r = samples[0].mesh.vertex(0).norm();
    const auto& ev = samples[0].eigenvalues;
    CHECK(std::abs(ev[0]) < 1e-6 * ev[1]);
    double c1 = (ev[1] + ev[2] + ev[3]) / 3.0;
    double c2 = (ev[4] + ev[5] + ev[6] + ev[7] + ev[8]) / 5.0;
    CHECK(std::abs(c1 - 2.0 / (r * r)) < 0.02 * 2.0 / (r * r));
    CHECK(std::abs(c2 - 6.0 / (r * r)) < 0.02 * 6.0 / (r * r));
  }
}

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "meshspec_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("build_manifest over a small fixture corpus") {
  fs::path corpus = fresh_dir("corpus_small");
  fs::path out = fresh_dir("curated_small");
  save_mesh(shapes::tetrahedron(), corpus / "a_tetra.off");
  save_mesh(shapes::disk_fan(8), corpus / "b_disk.off");
  save_mesh(shapes::torus(2.0, 0.7, 24, 12), corpus / "c_torus.off");

  CurationPolicy policy;
  policy.target_vertex_min = 150;
  policy.target_vertex_max = 350;
  policy.spectrum_k = 12;
  policy.rotations_per_mesh = 2;
  policy.rng_seed = 5;

  DatasetManifest m = build_manifest(corpus, out, policy);
  REQUIRE(m.records.size() == 3);
  CHECK(m.processed_this_run == 3);

  const ManifestRecord* tetra = m.find("a_tetra");
  REQUIRE(tetra);
  CHECK(tetra->status == "accepted");
  CHECK(tetra->augmentations.size() == 2);
  CHECK(fs::exists(out / tetra->mesh_file));
  CHECK(fs::exists(out / tetra->spectrum_file));
  for (const auto& aug : tetra->augmentations)
    CHECK(fs::exists(out / ("meshes/" + aug + ".off")));

  const ManifestRecord* disk = m.find("b_disk");
  REQUIRE(disk);
  CHECK(disk->status == "rejected");
  CHECK(disk->reason == RejectReason::boundary);

  const ManifestRecord* torus = m.find("c_torus");
  REQUIRE(torus);
  CHECK(torus->status == "accepted");

  // normalized mesh + spectrum round trip: stored eigenvalues denormalize
  // back to the raw-mesh spectrum
  Spectrum stored = load_spectrum_json(out / tetra->spectrum_file);
  REQUIRE(stored.scale);
  TriMesh normalized = load_mesh(out / tetra->mesh_file);
  Spectrum recomputed = lb_spectrum(normalized, policy.spectrum_k);
  for (int i = 1; i < policy.spectrum_k; ++i)
    CHECK(std::abs(recomputed.eigenvalues[i] - stored.eigenvalues[i]) <=
          1e-6 * std::abs(stored.eigenvalues[i]));

  SUBCASE("re-run is a no-op") {
    DatasetManifest again = build_manifest(corpus, out, policy);
    CHECK(again.processed_this_run == 0);
    REQUIRE(again.records.size() == 3);
    CHECK(again.find("a_tetra")->status == "accepted");
    CHECK(again.find("a_tetra")->split == m.find("a_tetra")->split);
  }
}

TEST_CASE("manifest marks exact duplicates") {
  fs::path corpus = fresh_dir("corpus_dup");
  fs::path out = fresh_dir("curated_dup");
  TriMesh sphere = shapes::icosphere(1.0, 3);
  save_mesh(sphere, corpus / "s1.off");
  save_mesh(sphere, corpus / "s2.off");  // byte-identical twin

  CurationPolicy policy;
  policy.target_vertex_min = 150;
  policy.target_vertex_max = 350;
  policy.spectrum_k = 10;
  policy.rotations_per_mesh = 0;

  DatasetManifest m = build_manifest(corpus, out, policy);
  const ManifestRecord* s1 = m.find("s1");
  const ManifestRecord* s2 = m.find("s2");
  REQUIRE(s1);
  REQUIRE(s2);
  CHECK(s1->status == "accepted");
  CHECK(s2->status == "rejected");
  CHECK(s2->reason == RejectReason::duplicate);
  CHECK(s2->duplicate_of == "s1");

  SUBCASE("dedupe decision is stable across re-runs") {
    DatasetManifest again = build_manifest(corpus, out, policy);
    CHECK(again.processed_this_run == 0);
    CHECK(again.find("s2")->status == "rejected");
    CHECK(again.find("s2")->duplicate_of == "s1");
  }
}

TEST_CASE("split assignment is per source id and exhaustive") {
  std::vector<std::string> splits;
  fs::path corpus = fresh_dir("corpus_split");
  fs::path out = fresh_dir("curated_split");
  for (int i = 0; i < 10; ++i)
    save_mesh(testing::bumpy_sphere(1, 100 + i, 0.3), corpus / ("m" + std::to_string(i) + ".off"));
  CurationPolicy policy;
  policy.target_vertex_min = 60;
  policy.target_vertex_max = 200;
  policy.spectrum_k = 8;
  policy.rotations_per_mesh = 1;
  DatasetManifest m = build_manifest(corpus, out, policy);
  int train = 0, val = 0, test = 0;
  for (const auto& r : m.records) {
    if (r.status != "accepted") continue;
    REQUIRE(!r.split.empty());
    if (r.split == "train") ++train;
    if (r.split == "val") ++val;
    if (r.split == "test") ++test;
  }
  CHECK(train == 8);
  CHECK(val == 1);
  CHECK(test == 1);
}
