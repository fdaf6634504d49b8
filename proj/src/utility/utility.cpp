#include "pacer/utility/utility.hpp"

#include <algorithm>
#include <cmath>

#include "pacer/errors.hpp"

namespace pacer::utility {

UtilityFunction UtilityFunction::cvar(double eta) {
  UtilityFunction u;
  u.kind = Kind::kDistortion;
  u.cvar_level = eta;
  u.validate();
  return u;
}

UtilityFunction UtilityFunction::reward_reshape(ReshapeMap map, double scale) {
  UtilityFunction u;
  u.kind = Kind::kRewardReshape;
  u.reshape = map;
  u.reshape_scale = scale;
  u.validate();
  return u;
}

void UtilityFunction::validate() const {
  if (kind == Kind::kDistortion) {
    if (!(cvar_level > 0.0 && cvar_level <= 1.0))
      throw ConfigError("utility: cvar level must be in (0, 1]");
  } else if (reshape == ReshapeMap::kScale && reshape_scale == 0.0) {
    throw ConfigError("utility: reshape scale must be nonzero");
  }
}

double UtilityFunction::reshape_reward(double r) const {
  if (kind != Kind::kRewardReshape) return r;
  switch (reshape) {
    case ReshapeMap::kIdentity:
      return r;
    case ReshapeMap::kTanh:
      return std::tanh(r);
    case ReshapeMap::kScale:
      return reshape_scale * r;
  }
  return r;
}

double UtilityFunction::distortion(double tau) const {
  if (kind != Kind::kDistortion || cvar_level >= 1.0)
    return tau;  // identity
  return std::min(tau / cvar_level, 1.0);
}

double UtilityFunction::distortion_derivative(double tau) const {
  if (kind != Kind::kDistortion || cvar_level >= 1.0) return 1.0;
  return tau <= cvar_level ? 1.0 / cvar_level : 0.0;
}

double UtilityFunction::distorted_value(const std::vector<double>& atoms,
                                        const std::vector<double>& tau_hats,
                                        const std::vector<double>& weights) const {
  if (atoms.size() != tau_hats.size() || atoms.size() != weights.size())
    throw ConfigError("distorted_value: atom/quantile length mismatch");
  double v = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i)
    v += weights[i] * distortion_derivative(tau_hats[i]) * atoms[i];
  return v;
}

std::vector<double> UtilityFunction::combined_weights(
    const std::vector<double>& tau_hats,
    const std::vector<double>& weights) const {
  std::vector<double> w(tau_hats.size());
  for (size_t i = 0; i < w.size(); ++i)
    w[i] = weights[i] * distortion_derivative(tau_hats[i]);
  return w;
}

double UtilityFunction::distortion_weight_check(
    const std::vector<double>& tau_hats,
    const std::vector<double>& weights) const {
  double s = 0.0;
  for (size_t i = 0; i < tau_hats.size(); ++i)
    s += weights[i] * distortion_derivative(tau_hats[i]);
  return s;
}

std::string UtilityFunction::describe() const {
  if (kind == Kind::kDistortion) {
    if (cvar_level >= 1.0) return "neutral";
    return "cvar" + std::to_string(cvar_level);
  }
  switch (reshape) {
    case ReshapeMap::kIdentity:
      return "reshape-identity";
    case ReshapeMap::kTanh:
      return "reshape-tanh";
    case ReshapeMap::kScale:
      return "reshape-scale" + std::to_string(reshape_scale);
  }
  return "utility";
}

}  // namespace pacer::utility
