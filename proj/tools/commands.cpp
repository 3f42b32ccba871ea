#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dataset.hpp"
#include "meshspec/curation.hpp"
#include "meshspec/evalbench.hpp"
#include "meshspec/features.hpp"
#include "meshspec/fem.hpp"
#include "meshspec/mesh_io.hpp"
#include "meshspec/nn/train.hpp"
#include "meshspec/parallel.hpp"

namespace meshspec::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_or_print(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot write " + out_path);
  out << text;
}

json spectrum_record(const std::string& id, const Spectrum& spectrum) {
  return {{"id", id},
          {"k", spectrum.k},
          {"eigenvalues", spectrum.eigenvalues},
          {"scale_factor", spectrum.scale ? spectrum.scale->scale_factor : 1.0},
          {"solve_ms", spectrum.stats.solve_ms}};
}

std::vector<nn::LrSpan> parse_schedule(const std::string& text) {
  std::vector<nn::LrSpan> spans;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw NumericalError("bad schedule span '" + item + "', expected epochs:lr");
    spans.push_back({std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
  }
  return spans;
}

nn::LossKind parse_loss(const std::string& name) {
  if (name == "rpd") return nn::LossKind::rpd;
  if (name == "l1") return nn::LossKind::l1;
  if (name == "l2") return nn::LossKind::l2;
  throw NumericalError("unknown loss '" + name + "'");
}

}  // namespace

int run_inspect(const InspectOpts& opts) {
  TriMesh mesh = load_mesh(opts.mesh);
  MeshReport r = validate(mesh);
  if (opts.as_json) {
    json j = {{"path", opts.mesh},
              {"vertices", r.vertex_count},
              {"edges", r.edge_count},
              {"faces", r.face_count},
              {"components", r.component_count},
              {"boundary_edges", r.boundary_edge_count},
              {"closed", r.is_closed},
              {"manifold", r.is_manifold},
              {"oriented", r.is_oriented},
              {"euler_characteristic", r.euler_characteristic},
              {"total_area", r.total_area}};
    if (r.genus) j["genus"] = *r.genus;
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::cout << opts.mesh << ": V=" << r.vertex_count << " E=" << r.edge_count
            << " F=" << r.face_count << " components=" << r.component_count
            << " boundary_edges=" << r.boundary_edge_count
            << " closed=" << (r.is_closed ? "yes" : "no")
            << " manifold=" << (r.is_manifold ? "yes" : "no")
            << " oriented=" << (r.is_oriented ? "yes" : "no") << " chi=" << r.euler_characteristic
            << " genus=" << (r.genus ? std::to_string(*r.genus) : "n/a")
            << " area=" << r.total_area << '\n';
  return 0;
}

int run_features(const FeaturesOpts& opts) {
  TriMesh mesh = load_mesh(opts.mesh);
  FeatureSet fs = assemble_features(mesh);
  std::string id = fs::path(opts.mesh).stem().string();

  {
    std::ofstream out(opts.out_prefix + ".nodes.csv");
    if (!out) throw IoError("cannot write " + opts.out_prefix + ".nodes.csv");
    out << "# mesh_id=" << id << " vertices=" << mesh.vertex_count()
        << " edges=" << mesh.edge_count() << '\n';
    out << "x,y,z,voronoi_area,gaussian_curvature,mean_curvature,kappa1,kappa2\n";
    char buf[320];
    for (Eigen::Index v = 0; v < fs.node_features.rows(); ++v) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    fs.node_features(v, 0), fs.node_features(v, 1), fs.node_features(v, 2),
                    fs.node_features(v, 3), fs.node_features(v, 4), fs.node_features(v, 5),
                    fs.node_features(v, 6), fs.node_features(v, 7));
      out << buf;
    }
  }
  {
    std::ofstream out(opts.out_prefix + ".edges.csv");
    if (!out) throw IoError("cannot write " + opts.out_prefix + ".edges.csv");
    out << "# mesh_id=" << id << " directed_edges=" << fs.edge_index.cols() << '\n';
    out << "src,dst,weight\n";
    for (Eigen::Index e = 0; e < fs.edge_index.cols(); ++e)
      out << fs.edge_index(0, e) << ',' << fs.edge_index(1, e) << ',' << fs.edge_weights(e)
          << '\n';
  }
  std::cerr << "wrote " << opts.out_prefix << ".nodes.csv and " << opts.out_prefix
            << ".edges.csv\n";
  return 0;
}

int run_spectrum(const SpectrumOpts& opts) {
  TriMesh mesh = load_mesh(opts.mesh);
  MassType mass = opts.mass == "lumped" ? MassType::lumped : MassType::consistent;
  SolverOptions solver;
  solver.shift = opts.shift;

  Spectrum spectrum;
  if (opts.normalize) {
    auto [normalized, record] = normalize_unit_cube(mesh);
    spectrum = lb_spectrum(normalized, opts.k, solver, mass);
    spectrum.scale = record;
  } else {
    spectrum = lb_spectrum(mesh, opts.k, solver, mass);
  }
  json j = spectrum_record(fs::path(opts.mesh).stem().string(), spectrum);
  write_or_print(j.dump(2) + "\n", opts.out);
  return 0;
}

int run_curate(const CurateOpts& opts) {
  CurationPolicy policy;
  policy.target_vertex_min = opts.target_min;
  policy.target_vertex_max = opts.target_max;
  policy.max_genus = opts.max_genus;
  policy.dedupe_threshold = opts.dedupe_threshold;
  policy.dedupe_relative = opts.dedupe_relative;
  policy.rotations_per_mesh = opts.rotations;
  policy.spectrum_k = opts.k;
  policy.rng_seed = opts.seed;

  if (!opts.resume) fs::remove(fs::path(opts.out_dir) / "manifest.jsonl");

  DatasetManifest manifest = build_manifest(opts.in_dir, opts.out_dir, policy);
  int accepted = 0;
  for (const auto& r : manifest.records)
    if (r.status == "accepted") ++accepted;
  std::cout << "records=" << manifest.records.size() << " accepted=" << accepted
            << " processed_this_run=" << manifest.processed_this_run << '\n';
  for (const auto& [reason, count] : manifest.rejection_tally())
    std::cout << "rejected " << reason << "=" << count << '\n';
  return 0;
}

int run_synth(const SynthOpts& opts) {
  std::vector<ShapeClass> classes;
  if (opts.classes == "all") {
    classes = all_shape_classes();
  } else {
    std::stringstream ss(opts.classes);
    std::string name;
    while (std::getline(ss, name, ',')) {
      auto cls = shape_class_from_string(name);
      if (!cls) throw ParseError(opts.classes, 0, "unknown shape class '" + name + "'");
      classes.push_back(*cls);
    }
  }

  SynthOptions so;
  so.eigenvalue_count = opts.k;
  so.normalize = opts.normalize;
  so.resolution = opts.resolution;
  auto samples = synth_dataset(classes, opts.per_class, opts.seed, so);

  fs::create_directories(fs::path(opts.out_dir) / "meshes");
  std::ofstream labels(fs::path(opts.out_dir) / "labels.jsonl");
  if (!labels) throw IoError("cannot write labels.jsonl under " + opts.out_dir);
  labels << json{{"kind", "synth-labels"},
                 {"schema_version", 1},
                 {"per_class", opts.per_class},
                 {"k", opts.k},
                 {"seed", opts.seed},
                 {"normalized", opts.normalize}}
                .dump()
         << '\n';
  for (const auto& s : samples) {
    save_mesh(s.mesh, fs::path(opts.out_dir) / "meshes" / (s.id + ".off"));
    labels << json{{"id", s.id},
                   {"class", to_string(s.shape_class)},
                   {"k", opts.k},
                   {"eigenvalues", s.eigenvalues},
                   {"scale_factor", 1.0}}
                  .dump()
           << '\n';
  }
  std::cout << "generated " << samples.size() << " meshes in " << opts.out_dir << '\n';
  return 0;
}

int run_train(const TrainOpts& opts) {
  auto entries = load_labeled_dataset(opts.data_dir);
  if (entries.empty()) throw NumericalError("dataset is empty");
  std::cerr << "dataset: " << entries.size() << " labeled meshes\n";

  auto graphs = to_graphs(entries, opts.out_dim);

  nn::DatasetSplit split;
  bool has_split = !entries.front().split.empty();
  if (has_split) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].split == "train") split.train.push_back(static_cast<int>(i));
      else if (entries[i].split == "val") split.val.push_back(static_cast<int>(i));
      else if (entries[i].split == "test") split.test.push_back(static_cast<int>(i));
    }
  } else {
    split = nn::split_dataset(static_cast<int>(entries.size()), opts.seed);
  }
  std::cerr << "split: train=" << split.train.size() << " val=" << split.val.size()
            << " test=" << split.test.size() << '\n';

  nn::ModelConfig cfg =
      opts.preset == "full" ? nn::ModelConfig::full(opts.out_dim) : nn::ModelConfig::desk(opts.out_dim);
  nn::GcnModel<float> model(cfg, opts.seed);
  if (opts.standardize) nn::standardize_inputs(model, graphs, split.train);
  if (opts.warm_start_bias) nn::initialize_output_bias(model, graphs, split.train);

  nn::TrainConfig tc;
  tc.schedule = parse_schedule(opts.schedule);
  tc.weight_decay = opts.weight_decay;
  tc.batch_size = opts.batch_size;
  tc.seed = opts.seed;
  tc.loss = parse_loss(opts.loss);
  tc.checkpoint_every = opts.checkpoint_every;
  tc.checkpoint_dir = opts.checkpoint_dir;

  nn::TrainResult result = nn::train(model, graphs, split, tc);
  save_checkpoint(model, opts.out_model);
  if (!opts.history.empty()) nn::write_history_csv(result.history, opts.history);

  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cout << "epochs=" << result.history.size() << " final_train_loss=" << last.train_loss
              << " final_val_loss=" << last.val_loss << " model=" << opts.out_model << '\n';
  }
  return 0;
}

int run_predict(const PredictOpts& opts) {
  nn::GcnModel<float> model = nn::load_checkpoint<float>(opts.model);
  json out = json::array();
  for (const auto& path : opts.meshes) {
    TriMesh mesh = load_mesh(path);
    auto [normalized, record] = normalize_unit_cube(mesh);
    nn::GraphData<float> graph =
        nn::GraphData<float>::from_features(assemble_features(normalized));
    nn::GraphBatch<float> batch = nn::make_batch<float>({&graph});
    nn::NoGradGuard no_grad;
    auto pred = model.forward(batch);

    std::vector<double> normalized_values(model.config().out_dim);
    for (int j = 0; j < model.config().out_dim; ++j)
      normalized_values[j] = static_cast<double>(pred.value()(0, j));
    // restore the original scale: lambda_original = lambda_normalized * s^2
    std::vector<double> restored = normalized_values;
    const double s2 = record.scale_factor * record.scale_factor;
    for (double& v : restored) v *= s2;

    out.push_back({{"id", fs::path(path).stem().string()},
                   {"first_predicted_index", 2},
                   {"normalized_eigenvalues", normalized_values},
                   {"eigenvalues", restored},
                   {"scale_factor", record.scale_factor}});
  }
  write_or_print(out.dump(2) + "\n", opts.out);
  return 0;
}

int run_eval(const EvalOpts& opts) {
  nn::GcnModel<float> model = nn::load_checkpoint<float>(opts.model);
  const int out_dim = model.config().out_dim;
  auto entries = load_labeled_dataset(opts.data_dir);

  // datasets without a recorded split get the deterministic 80:10:10 one
  if (!entries.empty() && entries.front().split.empty() && opts.split != "all") {
    nn::DatasetSplit derived = nn::split_dataset(static_cast<int>(entries.size()), opts.seed);
    auto assign = [&](const std::vector<int>& idx, const char* name) {
      for (int i : idx) entries[i].split = name;
    };
    assign(derived.train, "train");
    assign(derived.val, "val");
    assign(derived.test, "test");
  }
  std::vector<LabeledMesh> chosen;
  for (auto& e : entries) {
    if (opts.split == "all" || e.split == opts.split) chosen.push_back(std::move(e));
  }
  if (chosen.empty()) throw NumericalError("no samples in split '" + opts.split + "'");
  auto graphs = to_graphs(chosen, out_dim);

  std::vector<int> indices(graphs.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
  nn::MatX<float> pred = nn::predict(model, graphs, indices);

  Eigen::MatrixXd targets(graphs.size(), out_dim), predictions(graphs.size(), out_dim);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    ids.push_back(chosen[i].id);
    for (int j = 0; j < out_dim; ++j) {
      targets(i, j) = graphs[i].target(j);
      predictions(i, j) = pred(i, j);
    }
  }

  EvalReport report = evaluate_predictions(ids, targets, predictions);
  write_eval_csv(report, opts.out_prefix + ".samples.csv");
  write_eval_json(report, opts.out_prefix + ".aggregate.json");
  write_histogram_csv(psnr_histogram(report.samples), opts.out_prefix + ".histogram.csv");

  std::cout << "samples=" << report.aggregate.total_samples
            << " psnr>40=" << report.aggregate.fraction_psnr_gt_40
            << " psnr>45=" << report.aggregate.fraction_psnr_gt_45
            << " mean_rpd=" << report.aggregate.mean_rpd << '\n';
  return 0;
}

int run_bench(const BenchOpts& opts) {
  nn::GcnModel<float> model = nn::load_checkpoint<float>(opts.model);
  std::vector<TriMesh> meshes;
  std::vector<std::string> ids;
  if (!opts.data_dir.empty()) {
    auto entries = load_labeled_dataset(opts.data_dir);
    for (const auto& e : entries) {
      if (opts.limit > 0 && static_cast<int>(meshes.size()) >= opts.limit) break;
      meshes.push_back(load_mesh(e.mesh_path));
      ids.push_back(e.id);
    }
  }
  for (const auto& path : opts.meshes) {
    meshes.push_back(load_mesh(path));
    ids.push_back(fs::path(path).stem().string());
  }
  if (meshes.empty()) throw NumericalError("bench: no meshes given");

  TimingTable table = bench_timing(meshes, model, opts.repeats, opts.k, ids);
  write_timing_csv(table, opts.out_prefix + ".timing.csv");
  write_timing_json(table, opts.out_prefix + ".timing.json");

  std::cout << "meshes=" << table.rows.size() << " median_fem_ms=" << table.median_fem_ms
            << " median_gcn_forward_ms=" << table.median_gcn_forward_ms
            << " median_gcn_with_features_ms=" << table.median_gcn_with_features_ms
            << " (gcn forward column excludes feature extraction)\n";
  return 0;
}

}  // namespace meshspec::cli
