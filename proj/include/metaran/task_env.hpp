#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "metaran/mdp.hpp"
#include "metaran/rng.hpp"

namespace metaran {

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

struct StepResult {
  Eigen::VectorXd observation;
  double reward = 0.0;
  QosStats qos;  // bits/s, active UEs only
};

// Episodic interface the learners drive. reset() fully determines the episode.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int observation_size() const = 0;
  virtual int action_size() const = 0;
  virtual Eigen::VectorXd reset(std::uint64_t episode_seed) = 0;
  virtual StepResult step(std::span<const double> action) = 0;
};

// One simulated cell wrapped as an MDP. Each step runs
// mobility -> traffic -> channel draw -> decode action -> rates -> reward.
class TaskEnvironment final : public Environment {
 public:
  static constexpr double kStepSeconds = 1.0;

  explicit TaskEnvironment(TaskSpec task);

  int observation_size() const override { return MdpState::dimension(task_.cell.num_ues); }
  int action_size() const override { return action_dimension(task_.cell.num_ues); }
  Eigen::VectorXd reset(std::uint64_t episode_seed) override;
  StepResult step(std::span<const double> action) override;

  const TaskSpec& task() const { return task_; }
  const EnvSnapshot& snapshot() const { return snapshot_; }
  const RateReport& last_report() const { return last_report_; }
  const AllocationAction& last_allocation() const { return prev_; }

 private:
  TaskSpec task_;
  Rng rng_;
  EnvSnapshot snapshot_;
  AllocationAction prev_;
  RateReport last_report_;
};

}  // namespace metaran
