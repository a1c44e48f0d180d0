#include "metaran/replay_buffer.hpp"

#include <algorithm>
#include <string>

#include "metaran/errors.hpp"

namespace metaran {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : slots_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  slots_[pushed_ % slots_.size()] = std::move(t);
  ++pushed_;
  size_ = std::min(size_ + 1, slots_.size());
}

void ReplayBuffer::clear() {
  size_ = 0;
  pushed_ = 0;
}

const Transition& ReplayBuffer::by_insertion_index(std::uint64_t index) const {
  if (index < oldest_index() || index >= pushed_)
    throw ContractViolation("replay buffer: transition " + std::to_string(index) + " not stored");
  return slots_[index % slots_.size()];
}

std::optional<Batch> ReplayBuffer::sample(int batch_size, Partition partition, Rng& rng) const {
  if (batch_size <= 0) throw ContractViolation("replay buffer: batch size must be positive");
  if (!ready(batch_size)) return std::nullopt;

  // Members of the partition are oldest + offset + 2r for r in [0, members).
  const std::uint64_t oldest = oldest_index();
  const std::uint64_t wanted = partition == Partition::kSupport ? 0 : 1;
  const std::uint64_t offset = (wanted + 2 - oldest % 2) % 2;
  const std::uint64_t members = (size_ - offset + 1) / 2;

  // Floyd's algorithm: batch_size distinct ranks from [0, members).
  std::vector<std::uint64_t> ranks;
  ranks.reserve(batch_size);
  for (std::uint64_t j = members - batch_size; j < members; ++j) {
    std::uniform_int_distribution<std::uint64_t> pick(0, j);
    const std::uint64_t t = pick(rng);
    if (std::find(ranks.begin(), ranks.end(), t) == ranks.end()) ranks.push_back(t);
    else ranks.push_back(j);
  }

  const Transition& first = by_insertion_index(oldest + offset + 2 * ranks.front());
  Batch b;
  b.states.resize(first.state.size(), batch_size);
  b.actions.resize(first.action.size(), batch_size);
  b.rewards.resize(batch_size);
  b.next_states.resize(first.next_state.size(), batch_size);
  b.insertion_indices.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const std::uint64_t index = oldest + offset + 2 * ranks[i];
    const Transition& t = by_insertion_index(index);
    b.states.col(i) = t.state;
    b.actions.col(i) = t.action;
    b.rewards(i) = t.reward;
    b.next_states.col(i) = t.next_state;
    b.insertion_indices.push_back(index);
  }
  return b;
}

}  // namespace metaran
