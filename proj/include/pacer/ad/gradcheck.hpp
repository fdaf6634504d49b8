#pragma once

#include <functional>
#include <vector>

#include "pacer/ad/tape.hpp"

namespace pacer::ad {

struct GradCheckReport {
  double max_rel_err = 0.0;
  int worst_index = -1;
  bool pass = false;
};

// Builders record a scalar computation of `params` on the given tape and
// return the output node. Parameter gradients may arrive two ways: via the
// returned param_node's adjoint (leaf-style toys) and/or accumulated into
// grad_sink (network ops with registered sinks). Either side may be unused.
struct ScalarBuild {
  int out_node = -1;
  int param_node = -1;
};
using ScalarBuilder = std::function<ScalarBuild(
    Tape& tape, const std::vector<double>& params, double* grad_sink)>;

// Taped gradient of the builder's scalar at `params`.
std::vector<double> tape_gradient(const ScalarBuilder& f,
                                  const std::vector<double>& params);

// Compares the taped gradient against central finite differences.
// rel err per coordinate: |g - fd| / max(1, |g|, |fd|).
GradCheckReport gradient_check(const ScalarBuilder& f,
                               const std::vector<double>& params, double tol,
                               double fd_step = 1e-5);

}  // namespace pacer::ad
