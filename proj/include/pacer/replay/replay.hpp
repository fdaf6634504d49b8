#pragma once

#include <cstdint>
#include <vector>

#include "pacer/env/env.hpp"
#include "pacer/rng.hpp"

namespace pacer::replay {

// Fixed-capacity ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1000000, std::uint64_t seed = 0);

  void push(env::Transition t);
  std::vector<env::Transition> sample_batch(int m);
  // sampling indices only; batch assembly normalizes states elsewhere
  std::vector<std::size_t> sample_indices(int m);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  const env::Transition& at(std::size_t i) const { return storage_[i]; }

 private:
  std::size_t capacity_;
  std::vector<env::Transition> storage_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  Rng rng_;
};

}  // namespace pacer::replay
