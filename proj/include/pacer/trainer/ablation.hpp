#pragma once

#include "pacer/actor/policy.hpp"

namespace pacer::trainer {

// Ablation head: state-conditioned diagonal Gaussian, reparameterized as
// μ + σ⊙ξ and squashed through tanh into the action box. Stands in for the
// push-forward actor in the M1P0/M0P0 variants.
class GaussianPolicy final : public actor::Policy {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  GaussianPolicy(const env::EnvSpec& env_spec, std::vector<int> hidden,
                 Rng& init_rng);

  int state_dim() const override { return state_dim_; }
  int action_dim() const override { return action_dim_; }
  int noise_dim() const override { return action_dim_; }
  const std::vector<double>& action_low() const override { return low_; }
  const std::vector<double>& action_high() const override { return high_; }
  ad::ParamVector& params() override { return params_; }
  const ad::ParamVector& params() const override { return params_; }
  std::vector<ad::LayerShape> layout() const override;

  void act_rows(const std::vector<double>& state, const double* xi_rows, int n,
                double* actions) const override;
  int act_rows_taped(ad::Tape& tape, const std::vector<double>& state,
                     const double* xi_rows, int n, double* grad_sink,
                     bool input_grad = true) const override;

  const ad::MlpSpec& net_spec() const { return spec_; }

 private:
  int state_dim_;
  int action_dim_;
  std::vector<double> low_;
  std::vector<double> high_;
  ad::MlpSpec spec_;  // outputs (mean, log-std) per action dim
  ad::ParamVector params_;
  std::vector<double> rescale_a_;
  std::vector<double> rescale_b_;
};

}  // namespace pacer::trainer
