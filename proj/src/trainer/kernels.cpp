#include "pacer/trainer/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <cstring>
#include <exception>
#include <stdexcept>

#include "pacer/errors.hpp"

namespace pacer::trainer {

namespace {
constexpr std::uint64_t kCriticSalt = 0x637269746963ULL;  // "critic"
constexpr std::uint64_t kActorSalt = 0x6163746f72ULL;     // "actor"

// run body(i) for every item, serially or under OpenMP; first exception wins
template <typename F>
void for_items(int m, Exec exec, F&& body) {
  if (exec == Exec::kSerial) {
    for (int i = 0; i < m; ++i) body(i);
    return;
  }
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}
}  // namespace

void BatchWorkspace::configure(int m, int pa, int pc) {
  batch = m;
  actor_params = pa;
  critic_params = pc;
  const int threads = std::max(1, omp_get_max_threads());
  if (static_cast<int>(tapes.size()) < threads) tapes.resize(threads);
  item_loss.assign(m, 0.0);
  item_v.assign(m, 0.0);
  item_d.assign(m, 0.0);
  item_grad_actor.assign(static_cast<size_t>(m) * pa, 0.0);
  item_grad_c1.assign(static_cast<size_t>(m) * pc, 0.0);
  item_grad_c2.assign(static_cast<size_t>(m) * pc, 0.0);
}

CriticBatchResult critic_batch(const critic::TwinCritics& critics,
                               const actor::Policy& policy,
                               const std::vector<env::Transition>& batch,
                               const critic::QuantileHuberParams& params,
                               double gamma,
                               const utility::UtilityFunction& utility,
                               std::uint64_t step_key, Exec exec,
                               BatchWorkspace& ws) {
  const int m = static_cast<int>(batch.size());
  if (m == 0) throw ConfigError("critic_batch: empty batch");
  const int pc = critics.online1.param_count();
  if (ws.batch != m || ws.critic_params != pc)
    throw ConfigError("critic_batch: workspace not configured for this batch");

  for_items(m, exec, [&](int i) {
    ad::Tape& tape = ws.tapes[omp_get_thread_num()];
    tape.clear();
    double* g1 = ws.item_grad_c1.data() + static_cast<size_t>(i) * pc;
    double* g2 = ws.item_grad_c2.data() + static_cast<size_t>(i) * pc;
    std::memset(g1, 0, sizeof(double) * pc);
    std::memset(g2, 0, sizeof(double) * pc);
    Rng rng(mix64(step_key, kCriticSalt, static_cast<std::uint64_t>(i)));
    const env::Transition& t = batch[i];
    const int loss = critic::critic_loss_item_taped(
        tape, critics, policy, t.state, t.action, t.reward, t.next_state, params,
        gamma, utility, rng, g1, g2);
    tape.backward(loss);
    ws.item_loss[i] = tape.value(loss)[0];
  });

  CriticBatchResult out;
  out.grad1.assign(pc, 0.0);
  out.grad2.assign(pc, 0.0);
  double total = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (int i = 0; i < m; ++i) {
    total += ws.item_loss[i];
    const double* g1 = ws.item_grad_c1.data() + static_cast<size_t>(i) * pc;
    const double* g2 = ws.item_grad_c2.data() + static_cast<size_t>(i) * pc;
    for (int p = 0; p < pc; ++p) out.grad1[p] += g1[p];
    for (int p = 0; p < pc; ++p) out.grad2[p] += g2[p];
  }
  for (int p = 0; p < pc; ++p) out.grad1[p] *= inv_m;
  for (int p = 0; p < pc; ++p) out.grad2[p] *= inv_m;
  out.loss = total * inv_m;
  if (!std::isfinite(out.loss))
    throw TrainingError("critic loss is not finite");
  return out;
}

ActorBatchResult actor_batch(const critic::TwinCritics& critics,
                             const actor::Policy& policy,
                             const std::vector<env::Transition>& batch,
                             int k_quantiles, const encourager::MmdKernel& kernel,
                             int n_mmd, bool with_mmd, double alpha,
                             const utility::UtilityFunction& utility,
                             std::uint64_t step_key, Exec exec,
                             BatchWorkspace& ws) {
  const int m = static_cast<int>(batch.size());
  if (m == 0) throw ConfigError("actor_batch: empty batch");
  const int pa = static_cast<int>(policy.params().data.size());
  if (ws.batch != m || ws.actor_params != pa)
    throw ConfigError("actor_batch: workspace not configured for this batch");
  const int nd = policy.noise_dim();
  const int ad_dim = policy.action_dim();

  for_items(m, exec, [&](int i) {
    ad::Tape& tape = ws.tapes[omp_get_thread_num()];
    tape.clear();
    double* grad = ws.item_grad_actor.data() + static_cast<size_t>(i) * pa;
    std::memset(grad, 0, sizeof(double) * pa);
    Rng rng(mix64(step_key, kActorSalt, static_cast<std::uint64_t>(i)));
    const std::vector<double>& s = batch[i].state;

    std::vector<double> xi(nd);
    policy.sample_noise_rows(actor::NoiseMode::kTrain, rng, 1, xi.data());
    const critic::QuantileSample q = critic::sample_quantiles(k_quantiles, rng);

    const int a_node =
        policy.act_rows_taped(tape, s, xi.data(), 1, grad, false);
    const int s_node = tape.leaf(s);
    const int sa = tape.concat(s_node, a_node);
    const int z1 =
        critics.online1.quantile_values_taped(tape, sa, q.tau_hats, nullptr);
    const int z2 =
        critics.online2.quantile_values_taped(tape, sa, q.tau_hats, nullptr);
    const int zmin = tape.elem_min(z1, z2);
    const int v_node =
        tape.weighted_sum(zmin, utility.combined_weights(q.tau_hats, q.weights));

    int loss;
    if (with_mmd) {
      std::vector<double> xi_rows(static_cast<size_t>(n_mmd) * nd);
      policy.sample_noise_rows(actor::NoiseMode::kTrain, rng, n_mmd,
                               xi_rows.data());
      std::vector<double> ref(static_cast<size_t>(n_mmd) * ad_dim);
      actor::sample_uniform_box(policy.action_low(), policy.action_high(), n_mmd,
                                rng, ref.data());
      const int a_rows =
          policy.act_rows_taped(tape, s, xi_rows.data(), n_mmd, grad, false);
      const int d_node =
          tape.mmd_vstat(a_rows, std::move(ref), n_mmd, kernel.bandwidth_sq);
      ws.item_d[i] = tape.value(d_node)[0];
      loss = tape.add(tape.scale(v_node, -1.0), tape.scale(d_node, alpha));
    } else {
      ws.item_d[i] = 0.0;
      loss = tape.scale(v_node, -1.0);
    }
    tape.backward(loss);
    ws.item_loss[i] = tape.value(loss)[0];
    ws.item_v[i] = tape.value(v_node)[0];
  });

  ActorBatchResult out;
  out.grad.assign(pa, 0.0);
  double total = 0.0, vsum = 0.0, dsum = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (int i = 0; i < m; ++i) {
    total += ws.item_loss[i];
    vsum += ws.item_v[i];
    dsum += ws.item_d[i];
    const double* g = ws.item_grad_actor.data() + static_cast<size_t>(i) * pa;
    for (int p = 0; p < pa; ++p) out.grad[p] += g[p];
  }
  for (int p = 0; p < pa; ++p) out.grad[p] *= inv_m;
  out.loss = total * inv_m;
  out.v_mean = vsum * inv_m;
  out.d_mean = dsum * inv_m;
  if (!std::isfinite(out.loss)) {
    if (!std::isfinite(out.v_mean))
      throw TrainingError("actor loss: distorted value term is not finite");
    if (!std::isfinite(out.d_mean))
      throw TrainingError("actor loss: regularizer term is not finite");
    throw TrainingError("actor loss is not finite");
  }
  return out;
}

}  // namespace pacer::trainer
