#pragma once

#include <cstdint>
#include <vector>

namespace pacer::env {

// Running observation statistics (Welford). Normalization divides by the
// largest per-dimension standard deviation, floored at 1e-8, and clips to
// ±clip_bound. Statistics update only during data collection.
class ObsNormalizer {
 public:
  explicit ObsNormalizer(int dim = 0, double clip_bound = 5.0)
      : mean_(dim, 0.0), m2_(dim, 0.0), clip_(clip_bound) {}

  void update(const std::vector<double>& x);
  std::vector<double> normalize(const std::vector<double>& x) const;

  int dim() const { return static_cast<int>(mean_.size()); }
  std::int64_t count() const { return count_; }
  double clip_bound() const { return clip_; }
  const std::vector<double>& mean() const { return mean_; }
  std::vector<double> variance() const;

  // flat (mean..., m2..., count) for checkpointing
  std::vector<double> pack() const;
  static ObsNormalizer unpack(const std::vector<double>& flat, int dim,
                              double clip_bound = 5.0);

 private:
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::int64_t count_ = 0;
  double clip_ = 5.0;
};

}  // namespace pacer::env
