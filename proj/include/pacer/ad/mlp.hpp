#pragma once

#include <string>
#include <vector>

#include "pacer/ad/tape.hpp"
#include "pacer/rng.hpp"

namespace pacer::ad {

enum class OutputActivation { kIdentity, kTanh };

// Fully connected network: relu hidden layers, identity or tanh output.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 0;
  OutputActivation output_activation = OutputActivation::kIdentity;

  void validate() const;
  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  // (in, out) of layer l
  std::pair<int, int> layer_dims(int l) const;
  int param_count() const;
  // offset of layer l's weight block; biases follow the weights
  int layer_offset(int l) const;
};

// Named shape descriptor for checkpoint sidecars.
struct LayerShape {
  std::string name;
  std::vector<int> dims;
};

std::vector<LayerShape> mlp_layout(const MlpSpec& spec);

// Flat parameter storage. Layout per layer: W (out×in, row-major), then b.
struct ParamVector {
  std::vector<double> data;

  double* raw() { return data.data(); }
  const double* raw() const { return data.data(); }
  int size() const { return static_cast<int>(data.size()); }
  bool all_finite() const;
};

// Uniform in ±1/sqrt(fan_in) per layer, weights and biases alike.
ParamVector init_mlp_params(const MlpSpec& spec, Rng& rng);

// Plain forward pass over n input rows, no recording.
void mlp_forward_rows(const MlpSpec& spec, const double* params, const double* x,
                      int n, double* y);

// y (n×out) = x (n×in)·Wᵀ + b without recording; scratch holds a transposed
// weight copy so the inner loops stay contiguous.
void affine_rows_raw(const double* x, int n, const double* w, const double* b,
                     int in, int out, double* y, std::vector<double>& scratch);

// Recorded forward pass; grad may be null when the parameters are frozen.
// input_grad=false skips the backward sweep into x_node.
int mlp_forward_rows(const MlpSpec& spec, const double* params, double* grad,
                     Tape& tape, int x_node, bool input_grad = true);

// Single-sample convenience wrapper (the public contract).
std::vector<double> mlp_forward(const MlpSpec& spec, const ParamVector& params,
                                const std::vector<double>& input,
                                Tape* tape = nullptr);

}  // namespace pacer::ad
