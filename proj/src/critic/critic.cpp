#include "pacer/critic/critic.hpp"

#include <algorithm>
#include <cmath>

#include "pacer/errors.hpp"

namespace pacer::critic {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

QuantileSample sample_quantiles(int k, Rng& rng) {
  if (k < 1) throw ConfigError("sample_quantiles: k must be >= 1");
  QuantileSample q;
  q.taus.resize(k + 2);
  q.taus[0] = 0.0;
  for (int i = 0; i < k; ++i) q.taus[i + 1] = rng.uniform();
  q.taus[k + 1] = 1.0;
  std::sort(q.taus.begin() + 1, q.taus.begin() + 1 + k);
  q.tau_hats.resize(k + 1);
  q.weights.resize(k + 1);
  for (int i = 0; i <= k; ++i) {
    q.tau_hats[i] = 0.5 * (q.taus[i] + q.taus[i + 1]);
    q.weights[i] = q.taus[i + 1] - q.taus[i];
  }
  return q;
}

QuantileSample even_quantile_grid(int k) {
  if (k < 1) throw ConfigError("even_quantile_grid: k must be >= 1");
  QuantileSample q;
  q.taus.resize(k + 2);
  for (int i = 0; i < k + 2; ++i)
    q.taus[i] = static_cast<double>(i) / static_cast<double>(k + 1);
  q.tau_hats.resize(k + 1);
  q.weights.resize(k + 1);
  for (int i = 0; i <= k; ++i) {
    q.tau_hats[i] = 0.5 * (q.taus[i] + q.taus[i + 1]);
    q.weights[i] = q.taus[i + 1] - q.taus[i];
  }
  return q;
}

double huber_quantile_loss(double delta, double tau, double kappa) {
  if (kappa <= 0.0) throw ConfigError("huber_quantile_loss: kappa must be > 0");
  const double a = std::abs(tau - (delta < 0.0 ? 1.0 : 0.0));
  if (std::abs(delta) <= kappa) return a * delta * delta / (2.0 * kappa);
  return a * (std::abs(delta) - 0.5 * kappa);
}

IqnNet::IqnNet(int state_dim, int action_dim, const std::vector<int>& hidden,
               Rng& init_rng)
    : state_dim_(state_dim), action_dim_(action_dim) {
  if (hidden.size() != 2)
    throw ConfigError("IqnNet: expects exactly two hidden layers");
  h1_ = hidden[0];
  h2_ = hidden[1];
  if (state_dim_ < 1 || action_dim_ < 1 || h1_ < 1 || h2_ < 1)
    throw ConfigError("IqnNet: dims must be positive");
  const int in = input_dim();
  off_w1_ = 0;
  off_b1_ = off_w1_ + h1_ * in;
  off_we_ = off_b1_ + h1_;
  off_be_ = off_we_ + h1_ * kCosFeatures;
  off_w2_ = off_be_ + h1_;
  off_b2_ = off_w2_ + h2_ * h1_;
  off_w3_ = off_b2_ + h2_;
  off_b3_ = off_w3_ + h2_;
  params_.data.resize(param_count());

  auto fill = [&](int off, int count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int i = 0; i < count; ++i)
      params_.data[off + i] = init_rng.uniform(-bound, bound);
  };
  fill(off_w1_, h1_ * in + h1_, in);
  fill(off_we_, h1_ * kCosFeatures + h1_, kCosFeatures);
  fill(off_w2_, h2_ * h1_ + h2_, h1_);
  fill(off_w3_, h2_ + 1, h2_);
}

int IqnNet::param_count() const {
  const int in = input_dim();
  return h1_ * in + h1_ + h1_ * kCosFeatures + h1_ + h2_ * h1_ + h2_ + h2_ + 1;
}

std::vector<ad::LayerShape> IqnNet::layout() const {
  return {{"trunk_w", {h1_, input_dim()}}, {"trunk_b", {h1_}},
          {"embed_w", {h1_, kCosFeatures}}, {"embed_b", {h1_}},
          {"merge_w", {h2_, h1_}},          {"merge_b", {h2_}},
          {"head_w", {1, h2_}},             {"head_b", {1}}};
}

std::vector<double> IqnNet::cosine_features(const double* tau_hats,
                                            int count) const {
  // cos(π j τ) via the Chebyshev recurrence: one cos call per τ
  std::vector<double> c(static_cast<size_t>(count) * kCosFeatures);
  for (int t = 0; t < count; ++t) {
    double* ct = c.data() + static_cast<size_t>(t) * kCosFeatures;
    const double c1 = std::cos(kPi * tau_hats[t]);
    ct[0] = 1.0;
    if (kCosFeatures > 1) ct[1] = c1;
    for (int j = 2; j < kCosFeatures; ++j)
      ct[j] = 2.0 * c1 * ct[j - 1] - ct[j - 2];
  }
  return c;
}

void IqnNet::quantile_values(const double* state_action, const double* tau_hats,
                             int count, double* z) const {
  const double* p = params_.raw();
  const int in = input_dim();
  std::vector<double> scratch;
  // trunk
  std::vector<double> h1(h1_);
  for (int o = 0; o < h1_; ++o) {
    const double* w = p + off_w1_ + static_cast<size_t>(o) * in;
    double acc = p[off_b1_ + o];
    for (int i = 0; i < in; ++i) acc += w[i] * state_action[i];
    h1[o] = acc > 0.0 ? acc : 0.0;
  }
  const std::vector<double> cos_feat = cosine_features(tau_hats, count);
  std::vector<double> merged(static_cast<size_t>(count) * h1_);
  ad::affine_rows_raw(cos_feat.data(), count, p + off_we_, p + off_be_,
                      kCosFeatures, h1_, merged.data(), scratch);
  for (int t = 0; t < count; ++t) {
    double* mt = merged.data() + static_cast<size_t>(t) * h1_;
    for (int o = 0; o < h1_; ++o) {
      const double e = mt[o] > 0.0 ? mt[o] : 0.0;
      mt[o] = e * h1[o];
    }
  }
  std::vector<double> h2(static_cast<size_t>(count) * h2_);
  ad::affine_rows_raw(merged.data(), count, p + off_w2_, p + off_b2_, h1_, h2_,
                      h2.data(), scratch);
  for (double& v : h2) v = v > 0.0 ? v : 0.0;
  for (int t = 0; t < count; ++t) {
    const double* ht = h2.data() + static_cast<size_t>(t) * h2_;
    const double* w = p + off_w3_;
    double acc = p[off_b3_];
    for (int i = 0; i < h2_; ++i) acc += w[i] * ht[i];
    z[t] = acc;
  }
}

std::vector<double> IqnNet::quantile_values(
    const std::vector<double>& state, const std::vector<double>& action,
    const std::vector<double>& tau_hats) const {
  if (static_cast<int>(state.size()) != state_dim_ ||
      static_cast<int>(action.size()) != action_dim_)
    throw ConfigError("IqnNet: state/action dims mismatch");
  std::vector<double> sa(state);
  sa.insert(sa.end(), action.begin(), action.end());
  std::vector<double> z(tau_hats.size());
  quantile_values(sa.data(), tau_hats.data(), static_cast<int>(tau_hats.size()),
                  z.data());
  return z;
}

int IqnNet::quantile_values_taped(ad::Tape& tape, int state_action_node,
                                  const std::vector<double>& tau_hats,
                                  double* grad_sink, bool input_grad) const {
  if (tape.cols(state_action_node) != input_dim())
    throw ConfigError("IqnNet: taped input has wrong width");
  const double* p = params_.raw();
  auto gp = [&](int off) -> double* { return grad_sink ? grad_sink + off : nullptr; };
  const int count = static_cast<int>(tau_hats.size());
  const int in = input_dim();

  const int trunk = tape.affine_rows(state_action_node, p + off_w1_, p + off_b1_,
                                     gp(off_w1_), gp(off_b1_), in, h1_,
                                     input_grad);
  const int h1 = tape.relu(trunk);
  const int cosf = tape.leaf(cosine_features(tau_hats.data(), count), count);
  const int embed = tape.affine_rows(cosf, p + off_we_, p + off_be_, gp(off_we_),
                                     gp(off_be_), kCosFeatures, h1_, false);
  const int e = tape.relu(embed);
  const int merged = tape.row_broadcast_mul(e, h1);
  const int l2 = tape.affine_rows(merged, p + off_w2_, p + off_b2_, gp(off_w2_),
                                  gp(off_b2_), h1_, h2_);
  const int h2 = tape.relu(l2);
  return tape.affine_rows(h2, p + off_w3_, p + off_b3_, gp(off_w3_), gp(off_b3_),
                          h2_, 1);
}

TwinCritics::TwinCritics(int state_dim, int action_dim,
                         const std::vector<int>& hidden, double polyak_rate,
                         Rng& init_rng)
    : online1(state_dim, action_dim, hidden, init_rng),
      online2(state_dim, action_dim, hidden, init_rng),
      target1(online1),
      target2(online2),
      polyak(polyak_rate) {}

std::vector<double> TwinCritics::target_min_atoms(
    const std::vector<double>& state, const std::vector<double>& action,
    const std::vector<double>& tau_hats) const {
  std::vector<double> z1 = target1.quantile_values(state, action, tau_hats);
  const std::vector<double> z2 = target2.quantile_values(state, action, tau_hats);
  for (size_t i = 0; i < z1.size(); ++i) z1[i] = std::min(z1[i], z2[i]);
  return z1;
}

std::vector<double> TwinCritics::online_min_atoms(
    const std::vector<double>& state, const std::vector<double>& action,
    const std::vector<double>& tau_hats) const {
  std::vector<double> z1 = online1.quantile_values(state, action, tau_hats);
  const std::vector<double> z2 = online2.quantile_values(state, action, tau_hats);
  for (size_t i = 0; i < z1.size(); ++i) z1[i] = std::min(z1[i], z2[i]);
  return z1;
}

void polyak_update(TwinCritics& critics, double rho) {
  if (!(rho > 0.0 && rho <= 1.0))
    throw ConfigError("polyak_update: rate must be in (0, 1]");
  auto blend = [rho](const IqnNet& online, IqnNet& target) {
    const auto& src = online.params().data;
    auto& dst = target.params().data;
    for (size_t i = 0; i < src.size(); ++i)
      dst[i] = (1.0 - rho) * dst[i] + rho * src[i];
  };
  blend(critics.online1, critics.target1);
  blend(critics.online2, critics.target2);
}

TdContext td_target(const TwinCritics& critics, const actor::Policy& policy,
                    const std::vector<double>& next_state_norm, double reward,
                    const QuantileSample& target_q, double gamma,
                    const utility::UtilityFunction& utility, Rng& rng) {
  TdContext ctx;
  const std::vector<double> xi = policy.sample_noise(actor::NoiseMode::kTrain, rng);
  ctx.next_action = policy.act(next_state_norm, xi);
  ctx.target_atoms =
      critics.target_min_atoms(next_state_norm, ctx.next_action, target_q.tau_hats);
  const double r_eff = utility.reshape_reward(reward);
  for (double& y : ctx.target_atoms) y = r_eff + gamma * y;
  return ctx;
}

std::vector<double> td_deltas(const TwinCritics& critics,
                              const actor::Policy& policy,
                              const env::Transition& item,
                              const QuantileSample& online_q,
                              const QuantileSample& target_q, double gamma,
                              const utility::UtilityFunction& utility, Rng& rng,
                              int which_online_twin) {
  const TdContext ctx = td_target(critics, policy, item.next_state, item.reward,
                                  target_q, gamma, utility, rng);
  const IqnNet& net = which_online_twin == 2 ? critics.online2 : critics.online1;
  const std::vector<double> z =
      net.quantile_values(item.state, item.action, online_q.tau_hats);
  const int rows = static_cast<int>(ctx.target_atoms.size());
  const int cols = static_cast<int>(z.size());
  std::vector<double> deltas(static_cast<size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      deltas[static_cast<size_t>(i) * cols + j] = ctx.target_atoms[i] - z[j];
  return deltas;
}

int critic_loss_item_taped(ad::Tape& tape, const TwinCritics& critics,
                           const actor::Policy& policy,
                           const std::vector<double>& state_norm,
                           const std::vector<double>& action, double reward,
                           const std::vector<double>& next_state_norm,
                           const QuantileHuberParams& params, double gamma,
                           const utility::UtilityFunction& utility, Rng& rng,
                           double* grad_online1, double* grad_online2) {
  const QuantileSample online_q = sample_quantiles(params.k, rng);
  const QuantileSample target_q = sample_quantiles(params.k, rng);
  const TdContext ctx = td_target(critics, policy, next_state_norm, reward,
                                  target_q, gamma, utility, rng);

  std::vector<double> sa(state_norm);
  sa.insert(sa.end(), action.begin(), action.end());
  const int x = tape.leaf(sa);

  const int z1 = critics.online1.quantile_values_taped(tape, x, online_q.tau_hats,
                                                       grad_online1, false);
  const int l1 = tape.quantile_huber_pair_loss(z1, ctx.target_atoms,
                                               online_q.tau_hats, params.kappa);
  const int z2 = critics.online2.quantile_values_taped(tape, x, online_q.tau_hats,
                                                       grad_online2, false);
  const int l2 = tape.quantile_huber_pair_loss(z2, ctx.target_atoms,
                                               online_q.tau_hats, params.kappa);
  return tape.add(l1, l2);
}

double critic_loss(const TwinCritics& critics, const actor::Policy& policy,
                   const std::vector<env::Transition>& batch,
                   const QuantileHuberParams& params, double gamma,
                   const utility::UtilityFunction& utility, Rng& rng,
                   double* grad_online1, double* grad_online2) {
  if (batch.empty()) throw ConfigError("critic_loss: empty batch");
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  std::vector<double> g1(critics.online1.param_count(), 0.0);
  std::vector<double> g2(critics.online2.param_count(), 0.0);
  std::vector<double> sum1(g1.size(), 0.0), sum2(g2.size(), 0.0);
  ad::Tape tape;
  for (const env::Transition& t : batch) {
    tape.clear();
    std::fill(g1.begin(), g1.end(), 0.0);
    std::fill(g2.begin(), g2.end(), 0.0);
    const int loss = critic_loss_item_taped(
        tape, critics, policy, t.state, t.action, t.reward, t.next_state, params,
        gamma, utility, rng, g1.data(), g2.data());
    tape.backward(loss);
    total += tape.value(loss)[0];
    for (size_t i = 0; i < g1.size(); ++i) sum1[i] += g1[i];
    for (size_t i = 0; i < g2.size(); ++i) sum2[i] += g2[i];
  }
  if (grad_online1)
    for (size_t i = 0; i < sum1.size(); ++i) grad_online1[i] += sum1[i] * inv_m;
  if (grad_online2)
    for (size_t i = 0; i < sum2.size(); ++i) grad_online2[i] += sum2[i] * inv_m;
  const double loss = total * inv_m;
  if (!std::isfinite(loss)) throw TrainingError("critic loss is not finite");
  return loss;
}

}  // namespace pacer::critic
