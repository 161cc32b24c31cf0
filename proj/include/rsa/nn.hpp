#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rsa::nn {

/// Dense row-major matrix of doubles. Everything in the toy encoder is 2-D;
/// vectors are 1×n.
struct Mat {
  size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& at(size_t r, size_t c) { return a[r * cols + c]; }
  double at(size_t r, size_t c) const { return a[r * cols + c]; }
  size_t size() const { return a.size(); }

  bool operator==(const Mat&) const = default;
};

/// Reverse-mode autodiff node. Graphs are built per sample on top of
/// persistent leaf nodes (the parameters); leaf gradients accumulate across
/// samples until explicitly zeroed, which is exactly what gradient
/// accumulation needs.
struct Node {
  Mat val;
  Mat grad;  // allocated on first use
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  void ensure_grad() {
    if (grad.rows != val.rows || grad.cols != val.cols) grad = Mat(val.rows, val.cols);
  }
  void zero_grad() { grad = Mat(); }
};

using Var = std::shared_ptr<Node>;

Var leaf(Mat v);

// --- primitive ops -------------------------------------------------------
Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var add(const Var& a, const Var& b);
Var add_rowvec(const Var& m, const Var& row);  // broadcast a 1×c row over all rows
Var scale(const Var& a, double s);
Var slice_cols(const Var& a, size_t c0, size_t n);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const Var& a, const Var& b);
Var take_row(const Var& a, size_t r);
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps);
Var gelu(const Var& x);

/// Row-wise softmax over the columns marked valid; invalid columns get
/// exactly zero probability.
Var softmax_rows_masked(const Var& scores, const std::vector<uint8_t>& col_valid);

/// out[i] = table[ids[i]] + pos[i]. Throws id_out_of_range.
Var embedding(const Var& table, const Var& pos, const std::vector<int>& ids);

/// Fused softmax + cross-entropy on a 1×C logits row. The value equals
/// -ln(max(softmax(logits)[target], prob_floor)).
Var softmax_cross_entropy(const Var& logits, int target, double prob_floor = 1e-12);

/// 1×1 scalars: a + coeff * b.
Var add_scaled(const Var& a, const Var& b, double coeff);

/// Arithmetic mean of 1×1 scalars.
Var mean_all(const std::vector<Var>& scalars);

/// Reverse pass from a 1×1 loss node. Accumulates into leaf grads.
void backward(const Var& loss);

double gelu_scalar(double x);

}  // namespace rsa::nn
