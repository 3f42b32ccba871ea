#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "meshspec/mesh_io.hpp"
#include "meshspec/shapes.hpp"
#include "support/fixtures.hpp"

using namespace meshspec;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  RunResult r;
  std::string cmd = std::string(MESHSPEC_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path work_dir() {
  fs::path dir = fs::temp_directory_path() / "meshspec_cli_test";
  fs::create_directories(dir);
  return dir;
}

fs::path tetra_file() {
  fs::path p = work_dir() / "tetra.off";
  if (!fs::exists(p)) save_mesh(shapes::tetrahedron(), p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("help text lists every flag per subcommand") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> table = {
      {"inspect", {"--json"}},
      {"features", {"--out"}},
      {"spectrum", {"--k", "--shift", "--mass", "--normalize", "--out"}},
      {"curate",
       {"--in", "--out", "--target-min", "--target-max", "--max-genus", "--dedupe-threshold",
        "--dedupe-relative", "--rotations", "--k", "--resume", "--fresh"}},
      {"synth", {"--out", "--classes", "--per-class", "--k", "--resolution", "--normalize"}},
      {"train",
       {"--data", "--preset", "--out-dim", "--schedule", "--weight-decay", "--batch-size",
        "--loss", "--out", "--history", "--checkpoint-every", "--checkpoint-dir",
        "--warm-start-bias", "--standardize"}},
      {"predict", {"--out"}},
      {"eval", {"--model", "--data", "--split", "--out"}},
      {"bench", {"--model", "--data", "--repeats", "--k", "--limit", "--out"}},
  };
  for (const auto& [cmd, flags] : table) {
    RunResult r = run_cli(cmd + " --help");
    CAPTURE(cmd);
    CHECK(r.exit_code == 0);
    for (const auto& flag : flags) {
      CAPTURE(flag);
      CHECK(r.output.find(flag) != std::string::npos);
    }
  }
  RunResult top = run_cli("--help");
  CHECK(top.exit_code == 0);
  for (const char* flag : {"--threads", "--seed", "--verbose", "--config"})
    CHECK(top.output.find(flag) != std::string::npos);
}

TEST_CASE("spectrum subcommand emits the JSON record") {
  fs::path out = work_dir() / "tetra_spec.json";
  RunResult r =
      run_cli("spectrum --k 50 " + tetra_file().string() + " --out " + out.string());
  REQUIRE(r.exit_code == 0);
  json j = json::parse(read_file(out));
  CHECK(j["k"] == 4);  // clamped to the vertex count
  REQUIRE(j["eigenvalues"].size() == 4);
  CHECK(std::abs(j["eigenvalues"][1].get<double>() - 2.0) < 1e-9);
  CHECK(j["scale_factor"] == 1.0);
}

TEST_CASE("exit codes") {
  SUBCASE("usage error is 2") {
    CHECK(run_cli("spectrum --definitely-not-a-flag x.off").exit_code == 2);
    CHECK(run_cli("no-such-subcommand").exit_code == 2);
  }
  SUBCASE("missing input file is 5") {
    CHECK(run_cli("inspect /nonexistent/mesh.off").exit_code == 5);
  }
  SUBCASE("malformed mesh is 3") {
    fs::path bad = work_dir() / "bad.off";
    std::ofstream(bad) << "OFF\n3 1 0\n0 0 0\n1 0 0\nbroken 1 0\n3 0 1 2\n";
    CHECK(run_cli("inspect " + bad.string()).exit_code == 3);
  }
  SUBCASE("numerical failure is 4") {
    CHECK(run_cli("spectrum --k 0 " + tetra_file().string()).exit_code == 4);
  }
}

TEST_CASE("features subcommand writes both tables") {
  fs::path prefix = work_dir() / "tetra_feat";
  RunResult r = run_cli("features " + tetra_file().string() + " --out " + prefix.string());
  REQUIRE(r.exit_code == 0);
  std::string nodes = read_file(prefix.string() + ".nodes.csv");
  std::string edges = read_file(prefix.string() + ".edges.csv");
  CHECK(nodes.find("# mesh_id=tetra vertices=4 edges=6") != std::string::npos);
  CHECK(nodes.find("x,y,z,voronoi_area,gaussian_curvature,mean_curvature,kappa1,kappa2") !=
        std::string::npos);
  CHECK(edges.find("src,dst,weight") != std::string::npos);
  // 12 directed edges + header + comment
  CHECK(std::count(edges.begin(), edges.end(), '\n') == 14);
}

TEST_CASE("synth artifacts are byte-identical for a fixed seed") {
  fs::path a = work_dir() / "synth_a";
  fs::path b = work_dir() / "synth_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(run_cli("synth --out " + a.string() + " --per-class 2 --k 6 --seed 11").exit_code == 0);
  REQUIRE(run_cli("synth --out " + b.string() + " --per-class 2 --k 6 --seed 11").exit_code == 0);
  CHECK(read_file(a / "labels.jsonl") == read_file(b / "labels.jsonl"));
  CHECK(read_file(a / "meshes/box_0.off") == read_file(b / "meshes/box_0.off"));
  fs::path c = work_dir() / "synth_c";
  fs::remove_all(c);
  REQUIRE(run_cli("synth --out " + c.string() + " --per-class 2 --k 6 --seed 12").exit_code == 0);
  CHECK(read_file(a / "meshes/box_0.off") != read_file(c / "meshes/box_0.off"));
}

TEST_CASE("curate pipeline over the three-fixture corpus") {
  fs::path corpus = work_dir() / "corpus";
  fs::path out = work_dir() / "curated";
  fs::remove_all(corpus);
  fs::remove_all(out);
  fs::create_directories(corpus);
  save_mesh(shapes::tetrahedron(), corpus / "a_tetra.off");
  save_mesh(shapes::disk_fan(8), corpus / "b_disk.off");
  save_mesh(shapes::torus(2.0, 0.7, 24, 12), corpus / "c_torus.off");

  std::string args = "curate --in " + corpus.string() + " --out " + out.string() +
                     " --target-min 150 --target-max 350 --k 12 --rotations 2 --seed 5";
  RunResult first = run_cli(args);
  REQUIRE(first.exit_code == 0);
  CHECK(first.output.find("records=3 accepted=2") != std::string::npos);
  CHECK(first.output.find("rejected BOUNDARY=1") != std::string::npos);
  CHECK(fs::exists(out / "manifest.jsonl"));
  CHECK(fs::exists(out / "meshes/a_tetra.off"));
  CHECK(fs::exists(out / "meshes/a_tetra_rot0.off"));
  CHECK(fs::exists(out / "spectra/a_tetra.json"));

  RunResult second = run_cli(args);
  REQUIRE(second.exit_code == 0);
  CHECK(second.output.find("processed_this_run=0") != std::string::npos);
}

TEST_CASE("train, predict, eval, bench round trip") {
  fs::path data = work_dir() / "traindata";
  if (!fs::exists(data / "labels.jsonl")) {
    REQUIRE(run_cli("synth --out " + data.string() + " --per-class 4 --k 11 --seed 3").exit_code ==
            0);
  }
  fs::path model = work_dir() / "model.json";
  fs::path hist = work_dir() / "hist.csv";
  RunResult train = run_cli("train --data " + data.string() + " --preset desk --out-dim 10" +
                            " --schedule 3:1e-3 --out " + model.string() + " --history " +
                            hist.string() + " --seed 3");
  REQUIRE(train.exit_code == 0);
  REQUIRE(fs::exists(model));
  std::string hist_text = read_file(hist);
  CHECK(hist_text.find("epoch,train_loss,val_loss,lr") != std::string::npos);
  CHECK(std::count(hist_text.begin(), hist_text.end(), '\n') == 4);

  fs::path pred = work_dir() / "pred.json";
  RunResult predict = run_cli("predict " + model.string() + " " + tetra_file().string() +
                              " --out " + pred.string());
  REQUIRE(predict.exit_code == 0);
  json pj = json::parse(read_file(pred));
  REQUIRE(pj.is_array());
  CHECK(pj[0]["eigenvalues"].size() == 10);
  CHECK(pj[0]["first_predicted_index"] == 2);
  // tetra normalization: extent 2 -> scale factor 0.5
  CHECK(std::abs(pj[0]["scale_factor"].get<double>() - 0.5) < 1e-12);
  double normalized0 = pj[0]["normalized_eigenvalues"][0].get<double>();
  double restored0 = pj[0]["eigenvalues"][0].get<double>();
  CHECK(std::abs(restored0 - normalized0 * 0.25) < 1e-9);

  RunResult eval = run_cli("eval --model " + model.string() + " --data " + data.string() +
                           " --split test --out " + (work_dir() / "ev").string() + " --seed 3");
  REQUIRE(eval.exit_code == 0);
  CHECK(fs::exists(work_dir() / "ev.samples.csv"));
  CHECK(fs::exists(work_dir() / "ev.aggregate.json"));
  CHECK(fs::exists(work_dir() / "ev.histogram.csv"));

  RunResult bench = run_cli("bench --model " + model.string() + " --data " + data.string() +
                            " --limit 2 --repeats 2 --k 8 --out " + (work_dir() / "bm").string());
  REQUIRE(bench.exit_code == 0);
  CHECK(bench.output.find("median_fem_ms") != std::string::npos);
  CHECK(fs::exists(work_dir() / "bm.timing.csv"));
  json bj = json::parse(read_file(work_dir() / "bm.timing.json"));
  CHECK(bj["gcn_column_includes_feature_extraction"] == false);
}

TEST_CASE("config file supplies options") {
  fs::path cfg = work_dir() / "opts.ini";
  std::ofstream(cfg) << "threads=1\nseed=9\n";
  RunResult r = run_cli("--config " + cfg.string() + " inspect " + tetra_file().string());
  CHECK(r.exit_code == 0);
}
