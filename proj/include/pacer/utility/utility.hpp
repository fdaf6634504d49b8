#pragma once

#include <string>
#include <vector>

namespace pacer::utility {

enum class Kind { kRewardReshape, kDistortion };
enum class ReshapeMap { kIdentity, kTanh, kScale };

// ψ: either a per-step reward reshape or a distortion of the quantile
// measure. The two are mutually exclusive per run; a distortion-kind utility
// leaves rewards untouched and reweights return atoms instead.
struct UtilityFunction {
  Kind kind = Kind::kDistortion;
  double cvar_level = 1.0;  // η; 1.0 is the identity distortion
  ReshapeMap reshape = ReshapeMap::kIdentity;
  double reshape_scale = 1.0;

  static UtilityFunction neutral() { return {}; }
  static UtilityFunction cvar(double eta);
  static UtilityFunction reward_reshape(ReshapeMap map, double scale = 1.0);

  void validate() const;

  // ψ(r) for reward-reshape kind; identity otherwise.
  double reshape_reward(double r) const;

  // ψ(τ) of the distortion (CVaR_η: min(τ/η, 1)).
  double distortion(double tau) const;
  // ψ'(τ̂) (CVaR_η: 1{τ ≤ η}/η).
  double distortion_derivative(double tau) const;

  // Σ_i weight_i · ψ'(τ̂_i) · z_i
  double distorted_value(const std::vector<double>& atoms,
                         const std::vector<double>& tau_hats,
                         const std::vector<double>& weights) const;

  // weight_i · ψ'(τ̂_i), the coefficients making distorted_value linear in z
  std::vector<double> combined_weights(const std::vector<double>& tau_hats,
                                       const std::vector<double>& weights) const;

  // Σ weight_i · ψ'(τ̂_i); approaches 1 on fine quantile grids
  double distortion_weight_check(const std::vector<double>& tau_hats,
                                 const std::vector<double>& weights) const;

  std::string describe() const;
};

}  // namespace pacer::utility
