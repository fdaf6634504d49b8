#pragma once

#include <vector>

#include "pacer/actor/policy.hpp"
#include "pacer/ad/mlp.hpp"
#include "pacer/ad/tape.hpp"
#include "pacer/env/env.hpp"
#include "pacer/rng.hpp"
#include "pacer/utility/utility.hpp"

namespace pacer::critic {

// K uniform draws sorted and bracketed by 0 and 1. Atoms sit at the K+1
// interval midpoints; interval lengths are the mixture weights and sum to 1.
struct QuantileSample {
  std::vector<double> taus;      // K+2 grid points
  std::vector<double> tau_hats;  // K+1 midpoints
  std::vector<double> weights;   // K+1 interval lengths

  int atom_count() const { return static_cast<int>(tau_hats.size()); }
};

QuantileSample sample_quantiles(int k, Rng& rng);
// evenly spaced grid (diagnostics and convergence checks)
QuantileSample even_quantile_grid(int k);

struct QuantileHuberParams {
  double kappa = 1.0;
  int k = 32;
};

// Asymmetric Huber quantile regression loss ρ^κ_τ(δ).
double huber_quantile_loss(double delta, double tau, double kappa);

// Implicit quantile network: an MLP trunk on (s ⊕ a) whose first hidden
// layer is gated multiplicatively by a cosine-feature embedding of τ.
class IqnNet {
 public:
  static constexpr int kCosFeatures = 64;

  IqnNet(int state_dim, int action_dim, const std::vector<int>& hidden,
         Rng& init_rng);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int input_dim() const { return state_dim_ + action_dim_; }
  int param_count() const;
  ad::ParamVector& params() { return params_; }
  const ad::ParamVector& params() const { return params_; }
  std::vector<ad::LayerShape> layout() const;

  // one atom per τ̂, in order
  void quantile_values(const double* state_action, const double* tau_hats,
                       int count, double* z) const;
  std::vector<double> quantile_values(const std::vector<double>& state,
                                      const std::vector<double>& action,
                                      const std::vector<double>& tau_hats) const;

  // Recorded forward from an existing (1×input_dim) node, so gradients reach
  // both the parameters (via grad_sink, optional) and the action input.
  int quantile_values_taped(ad::Tape& tape, int state_action_node,
                            const std::vector<double>& tau_hats,
                            double* grad_sink, bool input_grad = true) const;

 private:
  std::vector<double> cosine_features(const double* tau_hats, int count) const;

  int state_dim_;
  int action_dim_;
  int h1_;
  int h2_;
  ad::ParamVector params_;
  // parameter block offsets: trunk, tau embedding, merge layer, head
  int off_w1_, off_b1_, off_we_, off_be_, off_w2_, off_b2_, off_w3_, off_b3_;
};

// Online pair plus slow-moving target copies combined pessimistically.
struct TwinCritics {
  IqnNet online1, online2, target1, target2;
  double polyak = 0.005;

  TwinCritics(int state_dim, int action_dim, const std::vector<int>& hidden,
              double polyak_rate, Rng& init_rng);

  // elementwise minimum of the two target nets' atoms at matched τ̂
  std::vector<double> target_min_atoms(const std::vector<double>& state,
                                       const std::vector<double>& action,
                                       const std::vector<double>& tau_hats) const;
  std::vector<double> online_min_atoms(const std::vector<double>& state,
                                       const std::vector<double>& action,
                                       const std::vector<double>& tau_hats) const;
};

// θ̂ ← (1−ρ)·θ̂ + ρ·θ for both twins.
void polyak_update(TwinCritics& critics, double rho);

// Pairwise TD errors δ_ij = ψ_r(r) + γ·min-target(τ̂_i) − online(τ̂_j) for one
// online twin, row-major over (i, j). The next action comes from the online
// actor with fresh noise.
struct TdContext {
  std::vector<double> target_atoms;  // y_i = ψ_r(r) + γ·z_min(s', a', τ̂_i)
  std::vector<double> next_action;
};

TdContext td_target(const TwinCritics& critics, const actor::Policy& policy,
                    const std::vector<double>& next_state_norm, double reward,
                    const QuantileSample& target_q, double gamma,
                    const utility::UtilityFunction& utility, Rng& rng);

std::vector<double> td_deltas(const TwinCritics& critics,
                              const actor::Policy& policy,
                              const env::Transition& item_normalized,
                              const QuantileSample& online_q,
                              const QuantileSample& target_q, double gamma,
                              const utility::UtilityFunction& utility, Rng& rng,
                              int which_online_twin = 1);

// Recorded per-item critic loss Σ_twin Σ_i Σ_j ρ^κ_{τ̂_j}(δ_ij); gradients
// accumulate into the twin sinks, target nets and the actor stay frozen.
// Quantile draws: online τ, then target τ, then the actor noise.
int critic_loss_item_taped(ad::Tape& tape, const TwinCritics& critics,
                           const actor::Policy& policy,
                           const std::vector<double>& state_norm,
                           const std::vector<double>& action, double reward,
                           const std::vector<double>& next_state_norm,
                           const QuantileHuberParams& params, double gamma,
                           const utility::UtilityFunction& utility, Rng& rng,
                           double* grad_online1, double* grad_online2);

// Batch mean over items on one tape (module-level contract; the trainer has
// a parallel kernel that matches it bitwise).
double critic_loss(const TwinCritics& critics, const actor::Policy& policy,
                   const std::vector<env::Transition>& batch_normalized,
                   const QuantileHuberParams& params, double gamma,
                   const utility::UtilityFunction& utility, Rng& rng,
                   double* grad_online1, double* grad_online2);

}  // namespace pacer::critic
