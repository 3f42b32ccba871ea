#pragma once

#include <Eigen/Core>
#include <Eigen/StdVector>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

namespace meshspec::nn {

// Minimal reverse-mode engine. Every quantity in the network is a dense
// row-major matrix (scalars are 1x1), ops build a fresh graph per forward
// pass, and backward() walks it once in reverse topological order. All
// arithmetic happens in the scalar type S: float for training, double when
// checking gradients against finite differences.

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatMap = Eigen::Map<MatX<S>>;
template <typename S>
using ConstMatMap = Eigen::Map<const MatX<S>>;

/// Disables graph recording while alive (inference / no-grad evaluation).
class NoGradGuard {
 public:
  NoGradGuard() : prev_(recording()) { recording() = false; }
  ~NoGradGuard() { recording() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
  static bool& recording() {
    thread_local bool on = true;
    return on;
  }

 private:
  bool prev_;
};

/// Tensor storage is max-aligned so Eigen's vectorized kernels take the
/// same prologue/epilogue split on every run; heap-address drift would
/// otherwise reorder float sums and break bitwise reproducibility.
template <typename S>
using AlignedBuffer = std::vector<S, Eigen::aligned_allocator<S>>;

template <typename S>
struct Node {
  int rows = 0, cols = 0;
  AlignedBuffer<S> value;
  AlignedBuffer<S> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backprop;

  MatMap<S> val() { return MatMap<S>(value.data(), rows, cols); }
  ConstMatMap<S> cval() const { return ConstMatMap<S>(value.data(), rows, cols); }
  MatMap<S> grd() {
    if (grad.empty()) grad.assign(value.size(), S(0));
    return MatMap<S>(grad.data(), rows, cols);
  }
};

template <typename S>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols, bool requires_grad = false) {
    Tensor t;
    t.node_ = std::make_shared<Node<S>>();
    t.node_->rows = rows;
    t.node_->cols = cols;
    t.node_->value.assign(static_cast<std::size_t>(rows) * cols, S(0));
    t.node_->requires_grad = requires_grad;
    return t;
  }

  static Tensor from_matrix(const MatX<S>& m, bool requires_grad = false) {
    Tensor t = zeros(static_cast<int>(m.rows()), static_cast<int>(m.cols()), requires_grad);
    t.value() = m;
    return t;
  }

  bool valid() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  std::vector<int> shape() const { return {node_->rows, node_->cols}; }

  MatMap<S> value() { return node_->val(); }
  ConstMatMap<S> value() const { return node_->cval(); }
  MatMap<S> grad() { return node_->grd(); }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }

  S scalar() const {
    if (node_->value.size() != 1) throw std::logic_error("scalar() on non-scalar tensor");
    return node_->value[0];
  }

  void zero_grad() { node_->grad.assign(node_->value.size(), S(0)); }

  /// Reverse pass from this scalar. Gradients accumulate into every
  /// reachable requires_grad node.
  void backward() const {
    if (node_->value.size() != 1) throw std::logic_error("backward() requires a scalar loss");
    if (!node_->requires_grad)
      throw std::logic_error("backward() on a graph recorded without gradients");
    std::vector<Node<S>*> order;
    std::unordered_set<Node<S>*> seen;
    std::vector<std::pair<Node<S>*, std::size_t>> frames;
    frames.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!frames.empty()) {
      auto& [n, next] = frames.back();
      if (next < n->parents.size()) {
        Node<S>* p = n->parents[next++].get();
        if (seen.insert(p).second) frames.emplace_back(p, 0);
      } else {
        order.push_back(n);
        frames.pop_back();
      }
    }
    node_->grd()(0, 0) = S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if ((*it)->backprop) (*it)->backprop();
  }

  std::shared_ptr<Node<S>> node_;
};

namespace detail {

// Wire the freshly computed output into the graph. The closure may capture
// the output node by raw pointer: it is owned by that node, so the pointer
// outlives every call.
template <typename S>
void attach(Tensor<S>& out, std::initializer_list<Tensor<S>> inputs,
            std::function<void()> backprop) {
  if (!NoGradGuard::recording()) return;
  bool any = false;
  for (const auto& in : inputs) any = any || in.node_->requires_grad;
  if (!any) return;
  out.node_->requires_grad = true;
  for (const auto& in : inputs) out.node_->parents.push_back(in.node_);
  out.node_->backprop = std::move(backprop);
}

}  // namespace detail

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
  Tensor<S> out = Tensor<S>::zeros(a.rows(), b.cols());
  out.value().noalias() = a.value() * b.value();
  detail::attach(out, {a, b}, [an = a.node_.get(), bn = b.node_.get(), on = out.node_.get()] {
    if (an->requires_grad) an->grd().noalias() += on->grd() * bn->cval().transpose();
    if (bn->requires_grad) bn->grd().noalias() += an->cval().transpose() * on->grd();
  });
  return out;
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("add shape mismatch");
  Tensor<S> out = Tensor<S>::zeros(a.rows(), a.cols());
  out.value() = a.value() + b.value();
  detail::attach(out, {a, b}, [an = a.node_.get(), bn = b.node_.get(), on = out.node_.get()] {
    if (an->requires_grad) an->grd() += on->grd();
    if (bn->requires_grad) bn->grd() += on->grd();
  });
  return out;
}

/// x + b with b a 1 x C row vector broadcast over rows.
template <typename S>
Tensor<S> add_rowvec(const Tensor<S>& x, const Tensor<S>& b) {
  if (b.rows() != 1 || b.cols() != x.cols())
    throw std::invalid_argument("add_rowvec shape mismatch");
  Tensor<S> out = Tensor<S>::zeros(x.rows(), x.cols());
  out.value() = x.value().rowwise() + b.value().row(0);
  detail::attach(out, {x, b}, [xn = x.node_.get(), bn = b.node_.get(), on = out.node_.get()] {
    if (xn->requires_grad) xn->grd() += on->grd();
    if (bn->requires_grad) bn->grd().row(0) += on->grd().colwise().sum();
  });
  return out;
}

template <typename S>
Tensor<S> leaky_relu(const Tensor<S>& x, S slope) {
  Tensor<S> out = Tensor<S>::zeros(x.rows(), x.cols());
  auto xv = x.value();
  auto ov = out.value();
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = 0; j < xv.cols(); ++j) ov(i, j) = xv(i, j) > S(0) ? xv(i, j) : slope * xv(i, j);
  detail::attach(out, {x}, [xn = x.node_.get(), on = out.node_.get(), slope] {
    if (!xn->requires_grad) return;
    auto g = xn->grd();
    auto og = on->grd();
    auto xv = xn->cval();
    for (int i = 0; i < xv.rows(); ++i)
      for (int j = 0; j < xv.cols(); ++j) g(i, j) += (xv(i, j) > S(0) ? S(1) : slope) * og(i, j);
  });
  return out;
}

/// Shared per-batch connectivity, referenced by the ops that need it so a
/// recorded graph never outlives its indices.
template <typename S>
struct EdgeData {
  std::vector<int> src, dst;  // directed
  std::vector<S> weight;
};

/// out[dst_e] += w_e * x[src_e] over all directed edges (the Eq.-style
/// weighted neighborhood sum).
template <typename S>
Tensor<S> weighted_neighbor_sum(const Tensor<S>& x, std::shared_ptr<const EdgeData<S>> edges) {
  Tensor<S> out = Tensor<S>::zeros(x.rows(), x.cols());
  auto xv = x.value();
  auto ov = out.value();
  const auto& e = *edges;
  for (std::size_t i = 0; i < e.src.size(); ++i) ov.row(e.dst[i]) += e.weight[i] * xv.row(e.src[i]);
  detail::attach(out, {x}, [xn = x.node_.get(), on = out.node_.get(), edges] {
    if (!xn->requires_grad) return;
    auto g = xn->grd();
    auto og = on->grd();
    const auto& e = *edges;
    for (std::size_t i = 0; i < e.src.size(); ++i)
      g.row(e.src[i]) += e.weight[i] * og.row(e.dst[i]);
  });
  return out;
}

/// Graph-wise mean of node rows: out[g] = mean over {i : assign[i] == g}.
template <typename S>
Tensor<S> segment_mean(const Tensor<S>& x, std::shared_ptr<const std::vector<int>> assign,
                       int segments) {
  Tensor<S> out = Tensor<S>::zeros(segments, x.cols());
  std::vector<S> count(segments, S(0));
  auto xv = x.value();
  auto ov = out.value();
  for (int i = 0; i < x.rows(); ++i) {
    ov.row((*assign)[i]) += xv.row(i);
    count[(*assign)[i]] += S(1);
  }
  for (int g = 0; g < segments; ++g)
    if (count[g] > S(0)) ov.row(g) /= count[g];
  detail::attach(out, {x},
                 [xn = x.node_.get(), on = out.node_.get(), assign, count = std::move(count)] {
                   if (!xn->requires_grad) return;
                   auto g = xn->grd();
                   auto og = on->grd();
                   for (int i = 0; i < xn->rows; ++i) {
                     int seg = (*assign)[i];
                     if (count[seg] > S(0)) g.row(i) += og.row(seg) / count[seg];
                   }
                 });
  return out;
}

/// Mean absolute error over every entry.
template <typename S>
Tensor<S> l1_loss(const Tensor<S>& pred, const MatX<S>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("loss shape mismatch");
  Tensor<S> out = Tensor<S>::zeros(1, 1);
  const S n = static_cast<S>(target.size());
  out.value()(0, 0) = (pred.value() - target).cwiseAbs().sum() / n;
  detail::attach(out, {pred}, [pn = pred.node_.get(), on = out.node_.get(), target, n] {
    if (!pn->requires_grad) return;
    S g0 = on->grd()(0, 0) / n;
    auto g = pn->grd();
    auto pv = pn->cval();
    for (int i = 0; i < pv.rows(); ++i)
      for (int j = 0; j < pv.cols(); ++j) {
        S d = pv(i, j) - target(i, j);
        g(i, j) += g0 * (d > S(0) ? S(1) : (d < S(0) ? S(-1) : S(0)));
      }
  });
  return out;
}

/// Mean squared error over every entry.
template <typename S>
Tensor<S> l2_loss(const Tensor<S>& pred, const MatX<S>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("loss shape mismatch");
  Tensor<S> out = Tensor<S>::zeros(1, 1);
  const S n = static_cast<S>(target.size());
  MatX<S> diff = pred.value() - target;
  out.value()(0, 0) = diff.cwiseProduct(diff).sum() / n;
  detail::attach(out, {pred},
                 [pn = pred.node_.get(), on = out.node_.get(), diff = std::move(diff), n] {
                   if (!pn->requires_grad) return;
                   pn->grd() += (S(2) / n) * on->grd()(0, 0) * diff;
                 });
  return out;
}

/// Relative percentage difference: per sample sum_j |y-p| / (|y|+|p|+eps),
/// averaged over the batch rows.
template <typename S>
Tensor<S> rpd_loss(const Tensor<S>& pred, const MatX<S>& target, S eps) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("loss shape mismatch");
  Tensor<S> out = Tensor<S>::zeros(1, 1);
  const S b = static_cast<S>(target.rows());
  auto pv = pred.value();
  S total = S(0);
  for (int i = 0; i < pv.rows(); ++i)
    for (int j = 0; j < pv.cols(); ++j)
      total += std::abs(target(i, j) - pv(i, j)) /
               (std::abs(target(i, j)) + std::abs(pv(i, j)) + eps);
  out.value()(0, 0) = total / b;
  detail::attach(out, {pred}, [pn = pred.node_.get(), on = out.node_.get(), target, eps, b] {
    if (!pn->requires_grad) return;
    S g0 = on->grd()(0, 0) / b;
    auto g = pn->grd();
    auto pv = pn->cval();
    for (int i = 0; i < pv.rows(); ++i)
      for (int j = 0; j < pv.cols(); ++j) {
        S y = target(i, j), p = pv(i, j);
        S num = std::abs(y - p);
        S den = std::abs(y) + std::abs(p) + eps;
        S sign_d = p > y ? S(1) : (p < y ? S(-1) : S(0));
        S sign_p = p > S(0) ? S(1) : (p < S(0) ? S(-1) : S(0));
        g(i, j) += g0 * (sign_d * den - num * sign_p) / (den * den);
      }
  });
  return out;
}

}  // namespace meshspec::nn
