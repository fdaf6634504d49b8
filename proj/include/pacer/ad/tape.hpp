#pragma once

#include <functional>
#include <vector>

namespace pacer::ad {

using Vec = std::vector<double>;

// Reverse-mode tape over vector-valued nodes. Operations are recorded in
// forward order; backward() replays them in reverse, accumulating adjoints.
// Parameters enter ops as raw const pointers paired with optional gradient
// sinks, so frozen networks simply pass a null sink and receive no gradient.
//
// Single writer; one tape per thread. clear() keeps node capacity.
class Tape {
 public:
  struct Node {
    Vec val;
    Vec adj;
    int rows = 1;
    int cols = 0;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  // Constant leaf; adjoint is tracked (readable after backward) but nothing
  // propagates out of it.
  int leaf(Vec v, int rows = 1);

  int size() const { return static_cast<int>(nodes_.size()); }
  bool empty() const { return nodes_.empty(); }
  void clear() { nodes_.clear(); }

  const Vec& value(int id) const { return nodes_[id].val; }
  const Vec& adjoint(int id) const { return nodes_[id].adj; }
  int rows(int id) const { return nodes_[id].rows; }
  int cols(int id) const { return nodes_[id].cols; }

  // --- elementwise primitives ---
  int relu(int x);
  int tanh_op(int x);
  int exp_op(int x);
  int square(int x);
  int sqrt_op(int x);
  int cos_op(int x);
  int clamp(int x, double lo, double hi);  // pass-through gradient inside range
  int mul(int x, int y);                   // elementwise product
  int add(int x, int y);
  int sub(int x, int y);
  int scale(int x, double c);
  int elem_min(int x, int y);  // ties route the gradient to x

  // y = a ⊙ x + b with constant coefficient vectors (broadcast if scalar-sized)
  int axpb(int x, Vec a, Vec b);

  int concat(int x, int y);
  int slice(int x, int offset, int len);
  // take columns [col_off, col_off+col_len) of every row
  int col_slice(int x, int col_off, int col_len);

  // --- reductions ---
  int sum(int x);
  int mean(int x);
  // Σ w_i x_i with constant weights
  int weighted_sum(int x, Vec w);

  // --- linear algebra ---
  // Y (n×out) = X (n×in) · Wᵀ + b, W laid out row-major (out×in).
  // grad_w/grad_b may be null for frozen parameters; input_grad=false skips
  // the sweep into X when the caller knows X is a constant leaf.
  int affine_rows(int x, const double* w, const double* b, double* grad_w,
                  double* grad_b, int in, int out, bool input_grad = true);

  // M (n×h) = E (n×h) ⊙ v (h), v broadcast across rows.
  int row_broadcast_mul(int e, int v);
  // M (n×h) = E (n×h) + v (h), v broadcast across rows.
  int row_broadcast_add(int e, int v);

  // --- fused losses ---
  // Σ_i Σ_j ρ^κ_{τ̂_j}(y_i − z_j): asymmetric Huber quantile loss against a
  // fixed target atom set. z is the online atom node (length J).
  int quantile_huber_pair_loss(int z, Vec targets, Vec tau_hats, double kappa);

  // Biased two-sample MMD estimate with a Gaussian kernel between the rows of
  // x (m×d, differentiable) and constant reference rows y (n×d). The squared
  // estimate is clamped at zero before the square root.
  int mmd_vstat(int x, Vec y_rows, int n_ref, double bandwidth_sq);

  // Seeds `output`'s adjoint and sweeps the tape in reverse. Parameter
  // gradients accumulate into the sinks registered at op-creation time.
  void backward(int output, double seed = 1.0);

 private:
  int push(Vec v, int rows, int cols, std::function<void(Tape&)> back);

  std::vector<Node> nodes_;
  int cur_ = -1;  // node whose backward closure is running
};

}  // namespace pacer::ad
