#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "metaran/rng.hpp"

namespace metaran {

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
};

// Support samples drive inner updates, query samples the meta-update. A transition's
// partition is fixed by the parity of its insertion index, so the two never overlap.
enum class Partition { kSupport, kQuery };

// Column-major batch: one sample per column.
struct Batch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_states;
  std::vector<std::uint64_t> insertion_indices;

  int size() const { return static_cast<int>(rewards.size()); }
};

// Fixed-capacity FIFO experience store.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  void clear();

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return slots_.size(); }
  std::uint64_t total_pushed() const { return pushed_; }
  // Insertion index of the oldest stored transition.
  std::uint64_t oldest_index() const { return pushed_ - size_; }
  const Transition& by_insertion_index(std::uint64_t index) const;

  static Partition partition_of(std::uint64_t insertion_index) {
    return insertion_index % 2 == 0 ? Partition::kSupport : Partition::kQuery;
  }

  bool ready(int batch_size) const { return size_ >= 2 * static_cast<std::size_t>(batch_size); }

  // Uniform draw without replacement from one partition. Empty when fewer than
  // 2 * batch_size transitions are stored.
  std::optional<Batch> sample(int batch_size, Partition partition, Rng& rng) const;

 private:
  std::vector<Transition> slots_;
  std::size_t size_ = 0;
  std::uint64_t pushed_ = 0;
};

}  // namespace metaran
