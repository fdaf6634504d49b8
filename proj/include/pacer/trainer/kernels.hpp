#pragma once

#include <cstdint>
#include <vector>

#include "pacer/actor/policy.hpp"
#include "pacer/ad/tape.hpp"
#include "pacer/critic/critic.hpp"
#include "pacer/encourager/mmd.hpp"
#include "pacer/env/env.hpp"
#include "pacer/utility/utility.hpp"

namespace pacer::trainer {

enum class Exec { kSerial, kParallel };

// Per-batch gradient kernels. Items are independent: each derives its own
// RNG stream from (step_key, index) and writes loss/gradient into its own
// slot, so the OpenMP path is bitwise identical to the serial reference for
// any thread count. Reduction always runs serially in item order.
class BatchWorkspace {
 public:
  void configure(int batch, int actor_params, int critic_params);

  std::vector<ad::Tape> tapes;            // one per OpenMP thread
  std::vector<double> item_loss;          // M
  std::vector<double> item_v;             // M
  std::vector<double> item_d;             // M
  std::vector<double> item_grad_actor;    // M × P_actor
  std::vector<double> item_grad_c1;       // M × P_critic
  std::vector<double> item_grad_c2;       // M × P_critic
  int batch = 0;
  int actor_params = 0;
  int critic_params = 0;
};

struct CriticBatchResult {
  double loss = 0.0;
  std::vector<double> grad1, grad2;  // already divided by the batch size
};

struct ActorBatchResult {
  double loss = 0.0;
  double v_mean = 0.0;
  double d_mean = 0.0;
  std::vector<double> grad;
};

// Distributional TD loss over the batch; states must be pre-normalized and
// rewards pre-scaled. Per-item draws: online τ, target τ, next-action noise.
CriticBatchResult critic_batch(const critic::TwinCritics& critics,
                               const actor::Policy& policy,
                               const std::vector<env::Transition>& batch,
                               const critic::QuantileHuberParams& params,
                               double gamma,
                               const utility::UtilityFunction& utility,
                               std::uint64_t step_key, Exec exec,
                               BatchWorkspace& ws);

// Actor objective mean(-V_ψ + α·d) with the critics frozen. The MMD term is
// skipped entirely when with_mmd is false. Per-item draws: value-term noise,
// τ, regularizer policy noise rows, reference rows.
ActorBatchResult actor_batch(const critic::TwinCritics& critics,
                             const actor::Policy& policy,
                             const std::vector<env::Transition>& batch,
                             int k_quantiles, const encourager::MmdKernel& kernel,
                             int n_mmd, bool with_mmd, double alpha,
                             const utility::UtilityFunction& utility,
                             std::uint64_t step_key, Exec exec,
                             BatchWorkspace& ws);

}  // namespace pacer::trainer
