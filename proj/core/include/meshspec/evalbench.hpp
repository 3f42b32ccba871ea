#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "meshspec/mesh.hpp"
#include "meshspec/nn/model.hpp"

namespace meshspec {

/// 10*log10(range(y)^2 / MSE). Returns +infinity when the prediction is
/// exact and NaN when y is constant (range 0, PSNR undefined); callers flag
/// NaN samples and keep them out of aggregates.
double psnr(std::span<const double> y, std::span<const double> y_hat);

double rpd_metric(std::span<const double> y, std::span<const double> y_hat,
                  double epsilon = 1e-8);
double l1_metric(std::span<const double> y, std::span<const double> y_hat);
double l2_metric(std::span<const double> y, std::span<const double> y_hat);

struct SampleEval {
  std::string id;
  double psnr_db = 0.0;  // +inf serialized as "inf"
  bool psnr_defined = true;
  double rpd = 0.0, l1 = 0.0, l2 = 0.0;
};

struct EvalAggregate {
  double fraction_psnr_gt_40 = 0.0;
  double fraction_psnr_gt_45 = 0.0;
  double mean_rpd = 0.0, mean_l1 = 0.0, mean_l2 = 0.0;
  int flagged_samples = 0;  // undefined-PSNR rows excluded above
  int total_samples = 0;
};

struct EvalReport {
  std::vector<SampleEval> samples;
  EvalAggregate aggregate;
};

EvalReport evaluate_predictions(const std::vector<std::string>& ids,
                                const Eigen::MatrixXd& targets,
                                const Eigen::MatrixXd& predictions);

/// Fraction of defined-PSNR samples above the threshold.
double accuracy_at(const std::vector<SampleEval>& samples, double threshold_db);

void write_eval_csv(const EvalReport& report, const std::filesystem::path& path);
void write_eval_json(const EvalReport& report, const std::filesystem::path& path);

struct HistogramBin {
  double lo = 0, hi = 0;
  int count = 0;
};
std::vector<HistogramBin> psnr_histogram(const std::vector<SampleEval>& samples,
                                         double bin_width = 2.5);
void write_histogram_csv(const std::vector<HistogramBin>& bins,
                         const std::filesystem::path& path);

/// Wall-clock comparison of the FEM solve against GCN inference on the
/// same meshes. Strictly serial: the worker count is forced to 1 while
/// measuring. Every row separates feature-extraction time from the network
/// forward so both decompositions of the "GCN cost" can be reported.
struct TimingRow {
  std::string id;
  int vertex_count = 0;
  double fem_ms = 0.0;        // assemble + k-eigenvalue solve
  double feature_ms = 0.0;    // geometric feature extraction
  double gcn_forward_ms = 0.0;  // network inference only
};

struct TimingTable {
  std::vector<TimingRow> rows;
  int repeats = 0;  // median over this many runs after one warm-up
  int spectrum_k = 0;
  double median_fem_ms = 0.0;
  double median_gcn_forward_ms = 0.0;
  double median_gcn_with_features_ms = 0.0;
};

TimingTable bench_timing(const std::vector<TriMesh>& meshes,
                         const nn::GcnModel<float>& model, int repeats, int spectrum_k = 50,
                         const std::vector<std::string>& ids = {});

void write_timing_csv(const TimingTable& table, const std::filesystem::path& path);
void write_timing_json(const TimingTable& table, const std::filesystem::path& path);

}  // namespace meshspec
