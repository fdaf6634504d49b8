#include "pacer/ad/adam.hpp"

#include <cmath>

#include "pacer/errors.hpp"

namespace pacer::ad {

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr, const std::string& name) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ConfigError("adam_step(" + name + "): size mismatch");
  if (lr <= 0.0) throw ConfigError("adam_step(" + name + "): lr must be > 0");
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i]))
      throw TrainingError("non-finite gradient in parameter group '" + name +
                          "' at index " + std::to_string(i));
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace pacer::ad
