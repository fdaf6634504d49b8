#pragma once

#include <vector>

#include "pacer/actor/policy.hpp"
#include "pacer/ad/tape.hpp"
#include "pacer/rng.hpp"

namespace pacer::encourager {

// Gaussian kernel k(x,y) = exp(-‖x-y‖² / (2 h²)).
struct MmdKernel {
  double bandwidth_sq = 1.0;

  static MmdKernel gaussian(double h2);
  // default bandwidth: squared-distance scale of an action_dim-dimensional box
  static MmdKernel for_action_dim(int action_dim);

  double operator()(const double* x, const double* y, int d) const;
};

// Biased sample estimate of MMD(p‖q): full double sums including diagonals,
// inner value clamped at zero before the square root.
double mmd(const MmdKernel& kernel, const std::vector<std::vector<double>>& xs,
           const std::vector<std::vector<double>>& ys);
double mmd_rows(const MmdKernel& kernel, const double* xs, int m,
                const double* ys, int n, int d);

// MMD between the policy's push-forward action distribution at `state` and
// the uniform reference over the action box. Policy samples are recorded on
// the tape (when given) so gradients flow into the policy parameters; the
// reference draws never carry gradient. Draw order: policy noise rows, then
// reference rows.
double policy_mmd(const actor::Policy& policy, const std::vector<double>& state,
                  const MmdKernel& kernel, int n_samples, Rng& rng,
                  ad::Tape* tape = nullptr, double* grad_sink = nullptr,
                  int* node_out = nullptr);

// Mean policy_mmd over a batch of states.
double batch_regularizer(const actor::Policy& policy,
                         const std::vector<std::vector<double>>& states,
                         const MmdKernel& kernel, int n_samples, Rng& rng);

}  // namespace pacer::encourager
