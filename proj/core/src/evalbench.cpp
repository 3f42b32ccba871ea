#include "meshspec/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "meshspec/features.hpp"
#include "meshspec/fem.hpp"
#include "meshspec/parallel.hpp"

namespace meshspec {

using json = nlohmann::json;

double psnr(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size() || y.empty()) throw MeshError("psnr: length mismatch");
  auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  double range = *hi - *lo;
  if (range == 0.0) return std::numeric_limits<double>::quiet_NaN();
  double mse = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double d = y[i] - y_hat[i];
    mse += d * d;
  }
  mse /= static_cast<double>(y.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(range * range / mse);
}

double rpd_metric(std::span<const double> y, std::span<const double> y_hat, double epsilon) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    total += std::abs(y[i] - y_hat[i]) / (std::abs(y[i]) + std::abs(y_hat[i]) + epsilon);
  return total;
}

double l1_metric(std::span<const double> y, std::span<const double> y_hat) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += std::abs(y[i] - y_hat[i]);
  return total / static_cast<double>(y.size());
}

double l2_metric(std::span<const double> y, std::span<const double> y_hat) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return total / static_cast<double>(y.size());
}

EvalReport evaluate_predictions(const std::vector<std::string>& ids,
                                const Eigen::MatrixXd& targets,
                                const Eigen::MatrixXd& predictions) {
  if (targets.rows() != predictions.rows() || targets.cols() != predictions.cols())
    throw MeshError("evaluate_predictions: shape mismatch");
  EvalReport report;
  report.samples.reserve(targets.rows());
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    SampleEval s;
    s.id = i < static_cast<Eigen::Index>(ids.size()) ? ids[i] : std::to_string(i);
    std::vector<double> y(targets.row(i).begin(), targets.row(i).end());
    std::vector<double> p(predictions.row(i).begin(), predictions.row(i).end());
    s.psnr_db = psnr(y, p);
    s.psnr_defined = !std::isnan(s.psnr_db);
    s.rpd = rpd_metric(y, p);
    s.l1 = l1_metric(y, p);
    s.l2 = l2_metric(y, p);
    report.samples.push_back(std::move(s));
  }

  auto& agg = report.aggregate;
  agg.total_samples = static_cast<int>(report.samples.size());
  double rpd = 0, l1 = 0, l2 = 0;
  for (const auto& s : report.samples) {
    if (!s.psnr_defined) ++agg.flagged_samples;
    rpd += s.rpd;
    l1 += s.l1;
    l2 += s.l2;
  }
  if (agg.total_samples > 0) {
    agg.mean_rpd = rpd / agg.total_samples;
    agg.mean_l1 = l1 / agg.total_samples;
    agg.mean_l2 = l2 / agg.total_samples;
  }
  agg.fraction_psnr_gt_40 = accuracy_at(report.samples, 40.0);
  agg.fraction_psnr_gt_45 = accuracy_at(report.samples, 45.0);
  return report;
}

double accuracy_at(const std::vector<SampleEval>& samples, double threshold_db) {
  int defined = 0, above = 0;
  for (const auto& s : samples) {
    if (!s.psnr_defined) continue;
    ++defined;
    if (s.psnr_db > threshold_db) ++above;
  }
  if (defined == 0) throw MeshError("accuracy_at: no defined-PSNR samples");
  return static_cast<double>(above) / defined;
}

namespace {

std::string psnr_str(const SampleEval& s) {
  if (!s.psnr_defined) return "undefined";
  if (std::isinf(s.psnr_db)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", s.psnr_db);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

void write_eval_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,psnr_db,rpd,l1,l2\n";
  for (const auto& s : report.samples) {
    char buf[160];
    std::snprintf(buf, sizeof buf, ",%.9g,%.9g,%.9g\n", s.rpd, s.l1, s.l2);
    out << s.id << ',' << psnr_str(s) << buf;
  }
}

void write_eval_json(const EvalReport& report, const std::filesystem::path& path) {
  const auto& a = report.aggregate;
  json j = {{"fraction_psnr_gt_40", a.fraction_psnr_gt_40},
            {"fraction_psnr_gt_45", a.fraction_psnr_gt_45},
            {"mean_rpd", a.mean_rpd},
            {"mean_l1", a.mean_l1},
            {"mean_l2", a.mean_l2},
            {"flagged_samples", a.flagged_samples},
            {"total_samples", a.total_samples}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<HistogramBin> psnr_histogram(const std::vector<SampleEval>& samples,
                                         double bin_width) {
  std::vector<double> vals;
  for (const auto& s : samples)
    if (s.psnr_defined && std::isfinite(s.psnr_db)) vals.push_back(s.psnr_db);
  if (vals.empty()) return {};
  auto [lo_it, hi_it] = std::minmax_element(vals.begin(), vals.end());
  double lo = std::floor(*lo_it / bin_width) * bin_width;
  int nbins = static_cast<int>(std::floor((*hi_it - lo) / bin_width)) + 1;
  std::vector<HistogramBin> bins(nbins);
  for (int b = 0; b < nbins; ++b) {
    bins[b].lo = lo + b * bin_width;
    bins[b].hi = lo + (b + 1) * bin_width;
  }
  for (double v : vals) {
    int b = std::min(static_cast<int>((v - lo) / bin_width), nbins - 1);
    ++bins[b].count;
  }
  return bins;
}

void write_histogram_csv(const std::vector<HistogramBin>& bins,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "bin_lo,bin_hi,count\n";
  for (const auto& b : bins) out << b.lo << ',' << b.hi << ',' << b.count << '\n';
}

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double timed_ms(F&& fn) {
  auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

TimingTable bench_timing(const std::vector<TriMesh>& meshes, const nn::GcnModel<float>& model,
                         int repeats, int spectrum_k, const std::vector<std::string>& ids) {
  if (repeats < 1) throw MeshError("bench_timing: repeats must be >= 1");
  TimingTable table;
  table.repeats = repeats;
  table.spectrum_k = spectrum_k;

  const int saved_threads = thread_count();
  set_thread_count(1);

  std::vector<double> fem_meds, fwd_meds, both_meds;
  for (std::size_t mi = 0; mi < meshes.size(); ++mi) {
    const TriMesh& mesh = meshes[mi];
    TimingRow row;
    row.id = mi < ids.size() ? ids[mi] : std::to_string(mi);
    row.vertex_count = mesh.vertex_count();

    std::vector<double> fem_t, feat_t, fwd_t;
    for (int r = -1; r < repeats; ++r) {  // r = -1 is the warm-up
      FeatureSet fs;
      double t_feat = timed_ms([&] { fs = assemble_features(mesh); });

      nn::GraphData<float> graph = nn::GraphData<float>::from_features(fs);
      nn::GraphBatch<float> batch = nn::make_batch<float>({&graph});
      double t_fwd = timed_ms([&] {
        nn::NoGradGuard no_grad;
        volatile float sink = model.forward(batch).value()(0, 0);
        (void)sink;
      });

      double t_fem = timed_ms([&] { lb_spectrum(mesh, spectrum_k); });

      if (r >= 0) {
        feat_t.push_back(t_feat);
        fwd_t.push_back(t_fwd);
        fem_t.push_back(t_fem);
      }
    }
    row.feature_ms = median(feat_t);
    row.gcn_forward_ms = median(fwd_t);
    row.fem_ms = median(fem_t);
    table.rows.push_back(row);
    fem_meds.push_back(row.fem_ms);
    fwd_meds.push_back(row.gcn_forward_ms);
    both_meds.push_back(row.gcn_forward_ms + row.feature_ms);
  }

  set_thread_count(saved_threads);

  table.median_fem_ms = median(fem_meds);
  table.median_gcn_forward_ms = median(fwd_meds);
  table.median_gcn_with_features_ms = median(both_meds);
  return table;
}

void write_timing_csv(const TimingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,vertex_count,fem_ms,feature_ms,gcn_forward_ms,gcn_with_features_ms\n";
  for (const auto& r : table.rows) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f,%.6f,%.6f\n", r.id.c_str(), r.vertex_count,
                  r.fem_ms, r.feature_ms, r.gcn_forward_ms, r.feature_ms + r.gcn_forward_ms);
    out << buf;
  }
}

void write_timing_json(const TimingTable& table, const std::filesystem::path& path) {
  json j = {{"repeats", table.repeats},
            {"spectrum_k", table.spectrum_k},
            {"median_fem_ms", table.median_fem_ms},
            {"median_gcn_forward_ms", table.median_gcn_forward_ms},
            {"median_gcn_with_features_ms", table.median_gcn_with_features_ms},
            {"gcn_column_includes_feature_extraction", false},
            {"note",
             "gcn_forward_ms excludes feature extraction; "
             "gcn_with_features_ms includes it"},
            {"meshes", table.rows.size()}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace meshspec
