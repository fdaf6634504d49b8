#include "pacer/encourager/mmd.hpp"

#include <cmath>

#include "pacer/errors.hpp"

namespace pacer::encourager {

MmdKernel MmdKernel::gaussian(double h2) {
  if (h2 <= 0.0) throw ConfigError("MmdKernel: bandwidth_sq must be > 0");
  return {h2};
}

MmdKernel MmdKernel::for_action_dim(int action_dim) {
  return gaussian(static_cast<double>(std::max(1, action_dim)));
}

double MmdKernel::operator()(const double* x, const double* y, int d) const {
  double sq = 0.0;
  for (int i = 0; i < d; ++i) {
    const double diff = x[i] - y[i];
    sq += diff * diff;
  }
  return std::exp(-sq / (2.0 * bandwidth_sq));
}

double mmd_rows(const MmdKernel& kernel, const double* xs, int m,
                const double* ys, int n, int d) {
  if (m < 1 || n < 1) throw ConfigError("mmd: sample sets must be nonempty");
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      sxx += kernel(xs + static_cast<size_t>(i) * d,
                    xs + static_cast<size_t>(j) * d, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      syy += kernel(ys + static_cast<size_t>(i) * d,
                    ys + static_cast<size_t>(j) * d, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      sxy += kernel(xs + static_cast<size_t>(i) * d,
                    ys + static_cast<size_t>(j) * d, d);
  const double d2 = sxx / (static_cast<double>(m) * m) +
                    syy / (static_cast<double>(n) * n) -
                    2.0 * sxy / (static_cast<double>(m) * n);
  return std::sqrt(std::max(0.0, d2));
}

double mmd(const MmdKernel& kernel, const std::vector<std::vector<double>>& xs,
           const std::vector<std::vector<double>>& ys) {
  if (xs.empty() || ys.empty())
    throw ConfigError("mmd: sample sets must be nonempty");
  const int d = static_cast<int>(xs.front().size());
  std::vector<double> xr, yr;
  xr.reserve(xs.size() * d);
  yr.reserve(ys.size() * d);
  for (const auto& x : xs) {
    if (static_cast<int>(x.size()) != d)
      throw ConfigError("mmd: ragged sample rows");
    xr.insert(xr.end(), x.begin(), x.end());
  }
  for (const auto& y : ys) {
    if (static_cast<int>(y.size()) != d)
      throw ConfigError("mmd: ragged sample rows");
    yr.insert(yr.end(), y.begin(), y.end());
  }
  return mmd_rows(kernel, xr.data(), static_cast<int>(xs.size()), yr.data(),
                  static_cast<int>(ys.size()), d);
}

double policy_mmd(const actor::Policy& policy, const std::vector<double>& state,
                  const MmdKernel& kernel, int n_samples, Rng& rng,
                  ad::Tape* tape, double* grad_sink, int* node_out) {
  if (n_samples < 2) throw ConfigError("policy_mmd: needs at least 2 samples");
  const int nd = policy.noise_dim();
  const int ad_ = policy.action_dim();
  std::vector<double> xi(static_cast<size_t>(n_samples) * nd);
  policy.sample_noise_rows(actor::NoiseMode::kTrain, rng, n_samples, xi.data());
  std::vector<double> ref(static_cast<size_t>(n_samples) * ad_);
  actor::sample_uniform_box(policy.action_low(), policy.action_high(), n_samples,
                            rng, ref.data());
  if (!tape) {
    std::vector<double> acts(static_cast<size_t>(n_samples) * ad_);
    policy.act_rows(state, xi.data(), n_samples, acts.data());
    return mmd_rows(kernel, acts.data(), n_samples, ref.data(), n_samples, ad_);
  }
  const int a = policy.act_rows_taped(*tape, state, xi.data(), n_samples, grad_sink);
  const int d = tape->mmd_vstat(a, std::move(ref), n_samples, kernel.bandwidth_sq);
  if (node_out) *node_out = d;
  return tape->value(d)[0];
}

double batch_regularizer(const actor::Policy& policy,
                         const std::vector<std::vector<double>>& states,
                         const MmdKernel& kernel, int n_samples, Rng& rng) {
  if (states.empty()) throw ConfigError("batch_regularizer: empty batch");
  double total = 0.0;
  for (const auto& s : states)
    total += policy_mmd(policy, s, kernel, n_samples, rng);
  return total / static_cast<double>(states.size());
}

}  // namespace pacer::encourager
