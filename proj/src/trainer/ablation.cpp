#include "pacer/trainer/ablation.hpp"

#include <algorithm>
#include <cmath>

#include "pacer/errors.hpp"

namespace pacer::trainer {

GaussianPolicy::GaussianPolicy(const env::EnvSpec& env_spec,
                               std::vector<int> hidden, Rng& init_rng)
    : state_dim_(env_spec.state_dim),
      action_dim_(env_spec.action_dim),
      low_(env_spec.action_low),
      high_(env_spec.action_high) {
  spec_.input_dim = state_dim_;
  spec_.hidden = std::move(hidden);
  spec_.output_dim = 2 * action_dim_;
  spec_.output_activation = ad::OutputActivation::kIdentity;
  spec_.validate();
  params_ = ad::init_mlp_params(spec_, init_rng);
  rescale_a_.resize(action_dim_);
  rescale_b_.resize(action_dim_);
  for (int i = 0; i < action_dim_; ++i) {
    rescale_a_[i] = 0.5 * (high_[i] - low_[i]);
    rescale_b_[i] = 0.5 * (high_[i] + low_[i]);
  }
}

std::vector<ad::LayerShape> GaussianPolicy::layout() const {
  return ad::mlp_layout(spec_);
}

void GaussianPolicy::act_rows(const std::vector<double>& state,
                              const double* xi_rows, int n,
                              double* actions) const {
  if (static_cast<int>(state.size()) != state_dim_)
    throw ConfigError("GaussianPolicy: state has wrong dimension");
  std::vector<double> head(2 * action_dim_);
  ad::mlp_forward_rows(spec_, params_.raw(), state.data(), 1, head.data());
  for (int r = 0; r < n; ++r)
    for (int i = 0; i < action_dim_; ++i) {
      const double mu = head[i];
      const double ls = std::clamp(head[action_dim_ + i], kLogStdMin, kLogStdMax);
      const double raw =
          mu + std::exp(ls) * xi_rows[static_cast<size_t>(r) * action_dim_ + i];
      actions[static_cast<size_t>(r) * action_dim_ + i] =
          rescale_a_[i] * std::tanh(raw) + rescale_b_[i];
    }
}

int GaussianPolicy::act_rows_taped(ad::Tape& tape,
                                   const std::vector<double>& state,
                                   const double* xi_rows, int n,
                                   double* grad_sink, bool input_grad) const {
  (void)input_grad;  // the state leaf never needs a gradient here
  if (static_cast<int>(state.size()) != state_dim_)
    throw ConfigError("GaussianPolicy: state has wrong dimension");
  const int s = tape.leaf(state);
  const int head = ad::mlp_forward_rows(spec_, params_.raw(), grad_sink, tape, s);
  const int mu = tape.col_slice(head, 0, action_dim_);
  const int log_std = tape.col_slice(head, action_dim_, action_dim_);
  const int clamped = tape.clamp(log_std, kLogStdMin, kLogStdMax);
  const int sigma = tape.exp_op(clamped);
  const int xi = tape.leaf(
      std::vector<double>(xi_rows, xi_rows + static_cast<size_t>(n) * action_dim_),
      n);
  const int scaled = tape.row_broadcast_mul(xi, sigma);
  const int raw = tape.row_broadcast_add(scaled, mu);
  const int y = tape.tanh_op(raw);
  std::vector<double> a(static_cast<size_t>(n) * action_dim_);
  std::vector<double> b(static_cast<size_t>(n) * action_dim_);
  for (int r = 0; r < n; ++r)
    for (int i = 0; i < action_dim_; ++i) {
      a[static_cast<size_t>(r) * action_dim_ + i] = rescale_a_[i];
      b[static_cast<size_t>(r) * action_dim_ + i] = rescale_b_[i];
    }
  return tape.axpb(y, std::move(a), std::move(b));
}

}  // namespace pacer::trainer
