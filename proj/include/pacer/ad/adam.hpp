#pragma once

#include <string>
#include <vector>

namespace pacer::ad {

// Adam with the usual bias correction. One state per parameter group.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(int n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// In-place update. `name` labels the parameter group in error messages.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr, const std::string& name);

}  // namespace pacer::ad
