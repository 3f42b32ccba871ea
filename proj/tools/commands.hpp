#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace meshspec::cli {

struct InspectOpts {
  std::string mesh;
  bool as_json = false;
};

struct FeaturesOpts {
  std::string mesh;
  std::string out_prefix;
};

struct SpectrumOpts {
  std::string mesh;
  int k = 50;
  double shift = -0.01;
  std::string mass = "consistent";
  bool normalize = false;
  std::string out;  // empty -> stdout
};

struct CurateOpts {
  std::string in_dir;
  std::string out_dir;
  int target_min = 1750;
  int target_max = 2250;
  int max_genus = 2;
  double dedupe_threshold = 1e-8;
  bool dedupe_relative = false;
  int rotations = 5;
  int k = 50;
  std::uint64_t seed = 0;
  bool resume = true;
};

struct SynthOpts {
  std::string out_dir;
  std::string classes = "all";
  int per_class = 200;
  int k = 11;
  int resolution = 1;
  bool normalize = true;
  std::uint64_t seed = 0;
};

struct TrainOpts {
  std::string data_dir;
  std::string preset = "desk";
  int out_dim = 49;
  std::string schedule = "500:1e-4,500:1e-5";
  double weight_decay = 1e-5;
  int batch_size = 16;
  std::string loss = "rpd";
  std::uint64_t seed = 0;
  std::string out_model = "model.json";
  std::string history;  // optional CSV
  int checkpoint_every = 0;
  std::string checkpoint_dir;
  bool warm_start_bias = true;
  bool standardize = true;
};

struct PredictOpts {
  std::string model;
  std::vector<std::string> meshes;
  std::string out;  // empty -> stdout
};

struct EvalOpts {
  std::string model;
  std::string data_dir;
  std::string split = "test";
  std::string out_prefix = "eval";
  std::uint64_t seed = 0;  // split derivation for datasets without one
};

struct BenchOpts {
  std::string model;
  std::string data_dir;
  std::vector<std::string> meshes;
  int repeats = 5;
  int k = 50;
  int limit = 0;  // 0 = no limit
  std::string out_prefix = "bench";
};

int run_inspect(const InspectOpts& opts);
int run_features(const FeaturesOpts& opts);
int run_spectrum(const SpectrumOpts& opts);
int run_curate(const CurateOpts& opts);
int run_synth(const SynthOpts& opts);
int run_train(const TrainOpts& opts);
int run_predict(const PredictOpts& opts);
int run_eval(const EvalOpts& opts);
int run_bench(const BenchOpts& opts);

}  // namespace meshspec::cli
