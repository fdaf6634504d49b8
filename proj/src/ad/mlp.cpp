#include "pacer/ad/mlp.hpp"

#include <cmath>

#include "pacer/errors.hpp"

namespace pacer::ad {

void MlpSpec::validate() const {
  if (input_dim <= 0 || output_dim <= 0)
    throw ConfigError("MlpSpec: dims must be positive");
  if (hidden.empty()) throw ConfigError("MlpSpec: hidden layers required");
  for (int h : hidden)
    if (h <= 0) throw ConfigError("MlpSpec: hidden dims must be positive");
}

std::pair<int, int> MlpSpec::layer_dims(int l) const {
  const int in = l == 0 ? input_dim : hidden[l - 1];
  const int out = l == static_cast<int>(hidden.size()) ? output_dim : hidden[l];
  return {in, out};
}

int MlpSpec::param_count() const {
  int total = 0;
  for (int l = 0; l < layer_count(); ++l) {
    auto [in, out] = layer_dims(l);
    total += in * out + out;
  }
  return total;
}

int MlpSpec::layer_offset(int l) const {
  int off = 0;
  for (int k = 0; k < l; ++k) {
    auto [in, out] = layer_dims(k);
    off += in * out + out;
  }
  return off;
}

std::vector<LayerShape> mlp_layout(const MlpSpec& spec) {
  std::vector<LayerShape> shapes;
  for (int l = 0; l < spec.layer_count(); ++l) {
    auto [in, out] = spec.layer_dims(l);
    shapes.push_back({"w" + std::to_string(l), {out, in}});
    shapes.push_back({"b" + std::to_string(l), {out}});
  }
  return shapes;
}

bool ParamVector::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

ParamVector init_mlp_params(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  ParamVector p;
  p.data.resize(spec.param_count());
  for (int l = 0; l < spec.layer_count(); ++l) {
    auto [in, out] = spec.layer_dims(l);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    double* block = p.data.data() + spec.layer_offset(l);
    for (int i = 0; i < in * out + out; ++i) block[i] = rng.uniform(-bound, bound);
  }
  return p;
}

void affine_rows_raw(const double* x, int n, const double* w, const double* b,
                     int in, int out, double* y, std::vector<double>& scratch) {
  if (out >= 8 && n >= 2) {
    scratch.resize(static_cast<size_t>(in) * out);
    for (int o = 0; o < out; ++o)
      for (int i = 0; i < in; ++i)
        scratch[static_cast<size_t>(i) * out + o] =
            w[static_cast<size_t>(o) * in + i];
    for (int r = 0; r < n; ++r) {
      const double* xr = x + static_cast<size_t>(r) * in;
      double* yr = y + static_cast<size_t>(r) * out;
      std::copy(b, b + out, yr);
      for (int i = 0; i < in; ++i) {
        const double xi = xr[i];
        const double* wti = scratch.data() + static_cast<size_t>(i) * out;
        for (int o = 0; o < out; ++o) yr[o] += xi * wti[o];
      }
    }
    return;
  }
  for (int r = 0; r < n; ++r) {
    const double* xr = x + static_cast<size_t>(r) * in;
    double* yr = y + static_cast<size_t>(r) * out;
    for (int o = 0; o < out; ++o) {
      const double* wo = w + static_cast<size_t>(o) * in;
      double acc = b[o];
      for (int i = 0; i < in; ++i) acc += wo[i] * xr[i];
      yr[o] = acc;
    }
  }
}

void mlp_forward_rows(const MlpSpec& spec, const double* params, const double* x,
                      int n, double* y) {
  const int L = spec.layer_count();
  std::vector<double> cur(x, x + static_cast<size_t>(n) * spec.input_dim);
  std::vector<double> next;
  std::vector<double> scratch;
  for (int l = 0; l < L; ++l) {
    auto [in, out] = spec.layer_dims(l);
    const double* w = params + spec.layer_offset(l);
    const double* b = w + static_cast<size_t>(in) * out;
    next.assign(static_cast<size_t>(n) * out, 0.0);
    affine_rows_raw(cur.data(), n, w, b, in, out, next.data(), scratch);
    const bool last = l == L - 1;
    if (!last) {
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    } else if (spec.output_activation == OutputActivation::kTanh) {
      for (double& v : next) v = std::tanh(v);
    }
    cur.swap(next);
  }
  std::copy(cur.begin(), cur.end(), y);
}

int mlp_forward_rows(const MlpSpec& spec, const double* params, double* grad,
                     Tape& tape, int x_node, bool input_grad) {
  if (tape.cols(x_node) != spec.input_dim)
    throw ConfigError("mlp_forward: input has " +
                      std::to_string(tape.cols(x_node)) + " cols, expected " +
                      std::to_string(spec.input_dim));
  const int L = spec.layer_count();
  int cur = x_node;
  for (int l = 0; l < L; ++l) {
    auto [in, out] = spec.layer_dims(l);
    const int off = spec.layer_offset(l);
    const double* w = params + off;
    const double* b = w + static_cast<size_t>(in) * out;
    double* gw = grad ? grad + off : nullptr;
    double* gb = gw ? gw + static_cast<size_t>(in) * out : nullptr;
    cur = tape.affine_rows(cur, w, b, gw, gb, in, out,
                           l > 0 || input_grad);
    const bool last = l == L - 1;
    if (!last)
      cur = tape.relu(cur);
    else if (spec.output_activation == OutputActivation::kTanh)
      cur = tape.tanh_op(cur);
  }
  return cur;
}

std::vector<double> mlp_forward(const MlpSpec& spec, const ParamVector& params,
                                const std::vector<double>& input, Tape* tape) {
  spec.validate();
  if (static_cast<int>(input.size()) != spec.input_dim)
    throw ConfigError("mlp_forward: input length " +
                      std::to_string(input.size()) + ", expected " +
                      std::to_string(spec.input_dim));
  if (params.size() != spec.param_count())
    throw ConfigError("mlp_forward: parameter layout does not match spec");
  if (!tape) {
    std::vector<double> y(spec.output_dim);
    mlp_forward_rows(spec, params.raw(), input.data(), 1, y.data());
    return y;
  }
  const int x = tape->leaf(input);
  const int out = mlp_forward_rows(spec, params.raw(), nullptr, *tape, x);
  return tape->value(out);
}

}  // namespace pacer::ad
