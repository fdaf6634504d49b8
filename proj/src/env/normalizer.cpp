#include "pacer/env/normalizer.hpp"

#include <algorithm>
#include <cmath>

#include "pacer/errors.hpp"

namespace pacer::env {

void ObsNormalizer::update(const std::vector<double>& x) {
  if (x.size() != mean_.size())
    throw ConfigError("ObsNormalizer: dimension mismatch");
  count_ += 1;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean_[i];
    mean_[i] += d / static_cast<double>(count_);
    m2_[i] += d * (x[i] - mean_[i]);
  }
}

std::vector<double> ObsNormalizer::variance() const {
  std::vector<double> var(mean_.size(), 0.0);
  if (count_ > 0)
    for (size_t i = 0; i < var.size(); ++i)
      var[i] = m2_[i] / static_cast<double>(count_);
  return var;
}

std::vector<double> ObsNormalizer::normalize(const std::vector<double>& x) const {
  if (x.size() != mean_.size())
    throw ConfigError("ObsNormalizer: dimension mismatch");
  if (count_ == 0) return std::vector<double>(x.size(), 0.0);  // no stats yet
  double max_sigma = 0.0;
  if (count_ > 0)
    for (size_t i = 0; i < m2_.size(); ++i)
      max_sigma = std::max(max_sigma,
                           std::sqrt(m2_[i] / static_cast<double>(count_)));
  const double divisor = std::max(max_sigma, 1e-8);
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    out[i] = std::clamp((x[i] - mean_[i]) / divisor, -clip_, clip_);
  return out;
}

std::vector<double> ObsNormalizer::pack() const {
  std::vector<double> flat;
  flat.reserve(mean_.size() * 2 + 1);
  flat.insert(flat.end(), mean_.begin(), mean_.end());
  flat.insert(flat.end(), m2_.begin(), m2_.end());
  flat.push_back(static_cast<double>(count_));
  return flat;
}

ObsNormalizer ObsNormalizer::unpack(const std::vector<double>& flat, int dim,
                                    double clip_bound) {
  if (static_cast<int>(flat.size()) != 2 * dim + 1)
    throw ConfigError("ObsNormalizer: bad packed size");
  ObsNormalizer n(dim, clip_bound);
  std::copy(flat.begin(), flat.begin() + dim, n.mean_.begin());
  std::copy(flat.begin() + dim, flat.begin() + 2 * dim, n.m2_.begin());
  n.count_ = static_cast<std::int64_t>(flat[2 * dim]);
  return n;
}

}  // namespace pacer::env
