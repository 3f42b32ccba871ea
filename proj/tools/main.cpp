#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>

#include "commands.hpp"
#include "meshspec/errors.hpp"
#include "meshspec/parallel.hpp"

namespace {

// exit codes: 0 ok, 2 usage, 3 input/parse, 4 numerical, 5 I/O
constexpr int kUsage = 2, kInput = 3, kNumerical = 4, kIo = 5;

}  // namespace

int main(int argc, char** argv) {
  using namespace meshspec;
  using namespace meshspec::cli;

  CLI::App app{"mesh spectral toolkit: FEM Laplace-Beltrami spectra and a GCN predictor"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI config file");

  int threads = 0;
  std::uint64_t seed = 0;
  bool verbose = false;
  app.add_option("--threads", threads, "worker threads (0 = all cores, 1 = serial)")
      ->capture_default_str();
  app.add_option("--seed", seed, "global random seed")->capture_default_str();
  app.add_flag("--verbose", verbose, "chatty progress on stderr");

  InspectOpts inspect;
  auto* cmd_inspect = app.add_subcommand("inspect", "validate a mesh and print its report");
  cmd_inspect->add_option("mesh", inspect.mesh, "input mesh (OFF/OBJ/PLY)")->required();
  cmd_inspect->add_flag("--json", inspect.as_json, "emit the report as JSON");

  FeaturesOpts features;
  auto* cmd_features =
      app.add_subcommand("features", "extract per-vertex and per-edge geometric features");
  cmd_features->add_option("mesh", features.mesh, "input mesh")->required();
  cmd_features->add_option("--out", features.out_prefix, "output prefix for .nodes.csv/.edges.csv")
      ->required();

  SpectrumOpts spectrum;
  auto* cmd_spectrum =
      app.add_subcommand("spectrum", "compute the FEM Laplace-Beltrami spectrum");
  cmd_spectrum->add_option("mesh", spectrum.mesh, "input mesh")->required();
  cmd_spectrum->add_option("--k", spectrum.k, "eigenvalue count")->capture_default_str();
  cmd_spectrum->add_option("--shift", spectrum.shift, "shift-invert target")
      ->capture_default_str();
  cmd_spectrum->add_option("--mass", spectrum.mass, "mass matrix kind: consistent|lumped")
      ->check(CLI::IsMember({"consistent", "lumped"}))
      ->capture_default_str();
  cmd_spectrum->add_flag("--normalize", spectrum.normalize,
                         "unit-cube normalize first and record the scale factor");
  cmd_spectrum->add_option("--out", spectrum.out, "output JSON path (default stdout)");

  CurateOpts curate;
  auto* cmd_curate = app.add_subcommand(
      "curate", "filter, remesh, label, dedupe, augment and split a mesh corpus");
  cmd_curate->add_option("--in", curate.in_dir, "corpus directory of mesh files")->required();
  cmd_curate->add_option("--out", curate.out_dir, "output dataset directory")->required();
  cmd_curate->add_option("--target-min", curate.target_min, "remesh vertex window lower bound")
      ->capture_default_str();
  cmd_curate->add_option("--target-max", curate.target_max, "remesh vertex window upper bound")
      ->capture_default_str();
  cmd_curate->add_option("--max-genus", curate.max_genus, "highest accepted genus")
      ->capture_default_str();
  cmd_curate
      ->add_option("--dedupe-threshold", curate.dedupe_threshold,
                   "max eigenvalue difference for duplicates")
      ->capture_default_str();
  cmd_curate->add_flag("--dedupe-relative", curate.dedupe_relative,
                       "treat the dedupe threshold as relative");
  cmd_curate->add_option("--rotations", curate.rotations, "random rotations per accepted mesh")
      ->capture_default_str();
  cmd_curate->add_option("--k", curate.k, "eigenvalues per spectrum label")
      ->capture_default_str();
  cmd_curate->add_flag("--resume,!--fresh", curate.resume,
                       "reuse completed manifest records (default) or start over");

  SynthOpts synth;
  auto* cmd_synth =
      app.add_subcommand("synth", "generate the labeled synthetic primitive dataset");
  cmd_synth->add_option("--out", synth.out_dir, "output dataset directory")->required();
  cmd_synth->add_option("--classes", synth.classes, "'all' or comma-separated class names")
      ->capture_default_str();
  cmd_synth->add_option("--per-class", synth.per_class, "samples per shape class")
      ->capture_default_str();
  cmd_synth->add_option("--k", synth.k, "eigenvalues per label")->capture_default_str();
  cmd_synth->add_option("--resolution", synth.resolution, "generator refinement level")
      ->capture_default_str();
  cmd_synth->add_flag("--normalize,!--no-normalize", synth.normalize,
                      "unit-cube normalize generated meshes (default on)");

  TrainOpts train;
  auto* cmd_train = app.add_subcommand("train", "train the spectrum predictor");
  cmd_train->add_option("--data", train.data_dir, "dataset directory (curated or synthetic)")
      ->required();
  cmd_train->add_option("--preset", train.preset, "model width preset: desk|full")
      ->check(CLI::IsMember({"desk", "full"}))
      ->capture_default_str();
  cmd_train->add_option("--out-dim", train.out_dim, "predicted eigenvalue count")
      ->capture_default_str();
  cmd_train
      ->add_option("--schedule", train.schedule,
                   "learning-rate schedule, comma-separated epochs:lr spans")
      ->capture_default_str();
  cmd_train->add_option("--weight-decay", train.weight_decay, "L2-coupled weight decay")
      ->capture_default_str();
  cmd_train->add_option("--batch-size", train.batch_size, "graphs per batch")
      ->capture_default_str();
  cmd_train->add_option("--loss", train.loss, "training loss: rpd|l1|l2")
      ->check(CLI::IsMember({"rpd", "l1", "l2"}))
      ->capture_default_str();
  cmd_train->add_option("--out", train.out_model, "checkpoint output path")
      ->capture_default_str();
  cmd_train->add_option("--history", train.history, "loss-history CSV output path");
  cmd_train->add_option("--checkpoint-every", train.checkpoint_every,
                        "save a checkpoint every N epochs (0 = only final)")
      ->capture_default_str();
  cmd_train->add_option("--checkpoint-dir", train.checkpoint_dir,
                        "directory for periodic checkpoints");
  cmd_train->add_flag("--warm-start-bias,!--no-warm-start-bias", train.warm_start_bias,
                      "initialize the output bias to the training-target mean (default on)");
  cmd_train->add_flag("--standardize,!--no-standardize", train.standardize,
                      "z-score the input features from training statistics (default on)");

  PredictOpts predict;
  auto* cmd_predict =
      app.add_subcommand("predict", "predict spectra for meshes with a trained model");
  cmd_predict->add_option("model", predict.model, "model checkpoint JSON")->required();
  cmd_predict->add_option("meshes", predict.meshes, "input meshes")->required();
  cmd_predict->add_option("--out", predict.out, "output JSON path (default stdout)");

  EvalOpts eval;
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a model on a labeled dataset");
  cmd_eval->add_option("--model", eval.model, "model checkpoint JSON")->required();
  cmd_eval->add_option("--data", eval.data_dir, "labeled dataset directory")->required();
  cmd_eval->add_option("--split", eval.split, "which split to score: train|val|test|all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}))
      ->capture_default_str();
  cmd_eval->add_option("--out", eval.out_prefix, "output prefix for CSV/JSON reports")
      ->capture_default_str();

  BenchOpts bench;
  auto* cmd_bench =
      app.add_subcommand("bench", "time FEM solves against GCN inference, single thread");
  cmd_bench->add_option("--model", bench.model, "model checkpoint JSON")->required();
  cmd_bench->add_option("--data", bench.data_dir, "labeled dataset directory");
  cmd_bench->add_option("meshes", bench.meshes, "extra mesh files");
  cmd_bench->add_option("--repeats", bench.repeats, "timed repetitions per mesh after warm-up")
      ->capture_default_str();
  cmd_bench->add_option("--k", bench.k, "eigenvalues for the FEM column")
      ->capture_default_str();
  cmd_bench->add_option("--limit", bench.limit, "cap on dataset meshes (0 = all)")
      ->capture_default_str();
  cmd_bench->add_option("--out", bench.out_prefix, "output prefix for timing CSV/JSON")
      ->capture_default_str();

  // global flags may appear after the subcommand name
  for (auto* sub : {cmd_inspect, cmd_features, cmd_spectrum, cmd_curate, cmd_synth, cmd_train,
                    cmd_predict, cmd_eval, cmd_bench})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsage;
  }

  set_thread_count(threads);
  curate.seed = seed;
  synth.seed = seed;
  train.seed = seed;
  eval.seed = seed;

  try {
    if (*cmd_inspect) return run_inspect(inspect);
    if (*cmd_features) return run_features(features);
    if (*cmd_spectrum) return run_spectrum(spectrum);
    if (*cmd_curate) return run_curate(curate);
    if (*cmd_synth) return run_synth(synth);
    if (*cmd_train) return run_train(train);
    if (*cmd_predict) return run_predict(predict);
    if (*cmd_eval) return run_eval(eval);
    if (*cmd_bench) return run_bench(bench);
  } catch (const ParseError& e) {
    std::cerr << "error (parse): " << e.what() << '\n';
    return kInput;
  } catch (const MeshError& e) {
    std::cerr << "error (input): " << e.what() << '\n';
    return kInput;
  } catch (const NumericalError& e) {
    std::cerr << "error (numerical): " << e.what() << '\n';
    return kNumerical;
  } catch (const IoError& e) {
    std::cerr << "error (io): " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsage;
}
