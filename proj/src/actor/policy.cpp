#include "pacer/actor/policy.hpp"

#include "pacer/errors.hpp"

namespace pacer::actor {

std::vector<double> Policy::sample_noise(NoiseMode mode, Rng& rng) const {
  std::vector<double> xi(noise_dim());
  sample_noise_rows(mode, rng, 1, xi.data());
  return xi;
}

void Policy::sample_noise_rows(NoiseMode mode, Rng& rng, int n,
                               double* xi_rows) const {
  const double sd = mode == NoiseMode::kTrain ? kTrainNoiseStd : kEvalNoiseStd;
  const int d = noise_dim();
  for (int i = 0; i < n * d; ++i) xi_rows[i] = rng.normal(0.0, sd);
}

std::vector<double> Policy::act(const std::vector<double>& state,
                                const std::vector<double>& xi) const {
  if (static_cast<int>(xi.size()) != noise_dim())
    throw ConfigError("Policy::act: noise has wrong dimension");
  std::vector<double> a(action_dim());
  act_rows(state, xi.data(), 1, a.data());
  return a;
}

std::vector<std::vector<double>> Policy::sample_actions_batch(
    const std::vector<double>& state, int n, NoiseMode mode, Rng& rng) const {
  if (n < 1) throw ConfigError("sample_actions_batch: n must be >= 1");
  std::vector<double> xi(static_cast<size_t>(n) * noise_dim());
  sample_noise_rows(mode, rng, n, xi.data());
  std::vector<double> rows(static_cast<size_t>(n) * action_dim());
  act_rows(state, xi.data(), n, rows.data());
  std::vector<std::vector<double>> out(n);
  for (int i = 0; i < n; ++i)
    out[i].assign(rows.begin() + static_cast<size_t>(i) * action_dim(),
                  rows.begin() + static_cast<size_t>(i + 1) * action_dim());
  return out;
}

PushForwardPolicy::PushForwardPolicy(const env::EnvSpec& env_spec,
                                     std::vector<int> hidden, int noise_dim,
                                     Rng& init_rng)
    : state_dim_(env_spec.state_dim),
      action_dim_(env_spec.action_dim),
      noise_dim_(noise_dim > 0 ? noise_dim : env_spec.action_dim),
      low_(env_spec.action_low),
      high_(env_spec.action_high) {
  spec_.input_dim = state_dim_ + noise_dim_;
  spec_.hidden = std::move(hidden);
  spec_.output_dim = action_dim_;
  spec_.output_activation = ad::OutputActivation::kTanh;
  spec_.validate();
  params_ = ad::init_mlp_params(spec_, init_rng);
  rescale_a_.resize(action_dim_);
  rescale_b_.resize(action_dim_);
  for (int i = 0; i < action_dim_; ++i) {
    if (!(low_[i] < high_[i]))
      throw ConfigError("PushForwardPolicy: action bounds must satisfy low < high");
    rescale_a_[i] = 0.5 * (high_[i] - low_[i]);
    rescale_b_[i] = 0.5 * (high_[i] + low_[i]);
  }
}

std::vector<ad::LayerShape> PushForwardPolicy::layout() const {
  return ad::mlp_layout(spec_);
}

std::vector<double> PushForwardPolicy::assemble_rows(
    const std::vector<double>& state, const double* xi_rows, int n) const {
  if (static_cast<int>(state.size()) != state_dim_)
    throw ConfigError("PushForwardPolicy: state has wrong dimension");
  std::vector<double> rows(static_cast<size_t>(n) * spec_.input_dim);
  for (int r = 0; r < n; ++r) {
    double* dst = rows.data() + static_cast<size_t>(r) * spec_.input_dim;
    std::copy(state.begin(), state.end(), dst);
    std::copy(xi_rows + static_cast<size_t>(r) * noise_dim_,
              xi_rows + static_cast<size_t>(r + 1) * noise_dim_,
              dst + state_dim_);
  }
  return rows;
}

void PushForwardPolicy::act_rows(const std::vector<double>& state,
                                 const double* xi_rows, int n,
                                 double* actions) const {
  const std::vector<double> rows = assemble_rows(state, xi_rows, n);
  std::vector<double> y(static_cast<size_t>(n) * action_dim_);
  ad::mlp_forward_rows(spec_, params_.raw(), rows.data(), n, y.data());
  for (int r = 0; r < n; ++r)
    for (int i = 0; i < action_dim_; ++i) {
      const size_t idx = static_cast<size_t>(r) * action_dim_ + i;
      actions[idx] = rescale_a_[i] * y[idx] + rescale_b_[i];
    }
}

int PushForwardPolicy::act_rows_taped(ad::Tape& tape,
                                      const std::vector<double>& state,
                                      const double* xi_rows, int n,
                                      double* grad_sink,
                                      bool input_grad) const {
  const int x = tape.leaf(assemble_rows(state, xi_rows, n), n);
  const int y =
      ad::mlp_forward_rows(spec_, params_.raw(), grad_sink, tape, x, input_grad);
  std::vector<double> a(static_cast<size_t>(n) * action_dim_);
  std::vector<double> b(static_cast<size_t>(n) * action_dim_);
  for (int r = 0; r < n; ++r)
    for (int i = 0; i < action_dim_; ++i) {
      a[static_cast<size_t>(r) * action_dim_ + i] = rescale_a_[i];
      b[static_cast<size_t>(r) * action_dim_ + i] = rescale_b_[i];
    }
  return tape.axpb(y, std::move(a), std::move(b));
}

void sample_uniform_box(const std::vector<double>& low,
                        const std::vector<double>& high, int n, Rng& rng,
                        double* rows) {
  const int d = static_cast<int>(low.size());
  for (int r = 0; r < n; ++r)
    for (int i = 0; i < d; ++i)
      rows[static_cast<size_t>(r) * d + i] = rng.uniform(low[i], high[i]);
}

}  // namespace pacer::actor
