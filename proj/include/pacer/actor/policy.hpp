#pragma once

#include <memory>
#include <vector>

#include "pacer/ad/checkpoint.hpp"
#include "pacer/ad/mlp.hpp"
#include "pacer/ad/tape.hpp"
#include "pacer/env/env.hpp"
#include "pacer/rng.hpp"

namespace pacer::actor {

enum class NoiseMode { kTrain, kEval };

constexpr double kTrainNoiseStd = 1.0;
constexpr double kEvalNoiseStd = 0.5;

// Stochastic policy driven by a base-noise draw. Implementations map
// (state, xi) deterministically to an in-box action; the action distribution
// is the push-forward of the base noise and no density is ever exposed.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int noise_dim() const = 0;
  virtual const std::vector<double>& action_low() const = 0;
  virtual const std::vector<double>& action_high() const = 0;

  virtual ad::ParamVector& params() = 0;
  virtual const ad::ParamVector& params() const = 0;
  virtual std::vector<ad::LayerShape> layout() const = 0;

  // n noise rows for one state mapped to n action rows
  virtual void act_rows(const std::vector<double>& state, const double* xi_rows,
                        int n, double* actions) const = 0;
  // recorded variant; grad_sink (param-count length) may be null.
  // Returned node is n × action_dim; xi enters through the leaf, so its
  // adjoint is available too.
  virtual int act_rows_taped(ad::Tape& tape, const std::vector<double>& state,
                             const double* xi_rows, int n, double* grad_sink,
                             bool input_grad = true) const = 0;

  std::vector<double> sample_noise(NoiseMode mode, Rng& rng) const;
  void sample_noise_rows(NoiseMode mode, Rng& rng, int n, double* xi_rows) const;
  std::vector<double> act(const std::vector<double>& state,
                          const std::vector<double>& xi) const;
  std::vector<std::vector<double>> sample_actions_batch(
      const std::vector<double>& state, int n, NoiseMode mode, Rng& rng) const;
};

// MLP from (state ⊕ xi) through a tanh head, affinely rescaled into the
// action box.
class PushForwardPolicy final : public Policy {
 public:
  PushForwardPolicy(const env::EnvSpec& env_spec, std::vector<int> hidden,
                    int noise_dim, Rng& init_rng);

  int state_dim() const override { return state_dim_; }
  int action_dim() const override { return action_dim_; }
  int noise_dim() const override { return noise_dim_; }
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
  std::vector<double> assemble_rows(const std::vector<double>& state,
                                    const double* xi_rows, int n) const;

  int state_dim_;
  int action_dim_;
  int noise_dim_;
  std::vector<double> low_;
  std::vector<double> high_;
  ad::MlpSpec spec_;
  ad::ParamVector params_;
  std::vector<double> rescale_a_;  // (high-low)/2 per action dim
  std::vector<double> rescale_b_;  // (high+low)/2
};

// uniform rows over the action box (reference policy / exploration draws)
void sample_uniform_box(const std::vector<double>& low,
                        const std::vector<double>& high, int n, Rng& rng,
                        double* rows);

}  // namespace pacer::actor
