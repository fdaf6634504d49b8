#include "pacer/replay/replay.hpp"

#include <cmath>

#include "pacer/errors.hpp"

namespace pacer::replay {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  if (capacity_ == 0) throw ConfigError("ReplayBuffer: capacity must be positive");
  storage_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(env::Transition t) {
  if (!std::isfinite(t.reward))
    throw ConfigError("ReplayBuffer: non-finite reward");
  if (size_ < capacity_) {
    storage_.push_back(std::move(t));
    size_ += 1;
  } else {
    storage_[head_] = std::move(t);
  }
  head_ = (head_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(int m) {
  if (m < 0) throw ConfigError("ReplayBuffer: negative batch size");
  if (static_cast<std::size_t>(m) > size_)
    throw NotReadyError("ReplayBuffer: requested batch of " + std::to_string(m) +
                        " with only " + std::to_string(size_) + " stored");
  std::vector<std::size_t> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = rng_.randint(size_);
  return idx;
}

std::vector<env::Transition> ReplayBuffer::sample_batch(int m) {
  std::vector<env::Transition> batch;
  batch.reserve(m);
  for (std::size_t i : sample_indices(m)) batch.push_back(storage_[i]);
  return batch;
}

}  // namespace pacer::replay
