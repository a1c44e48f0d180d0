#pragma once

#include <span>

#include <Eigen/Core>

#include "metaran/allocation.hpp"
#include "metaran/cell.hpp"

namespace metaran {

// One learning task: a cell plus the demand window that shapes its reward.
struct TaskSpec {
  int task_id = 0;
  double demand_min_bps = 1e6;   // c_m
  double demand_max_bps = 10e6;  // c_x
  CellConfig cell;

  void validate() const;
};

// Flat observation: [Q_a, Q_m, Q_x, rb_requested / K (N entries), power in [-1, 1] (N entries)].
// QoS entries are divided by the task's demand_max.
struct MdpState {
  double q_avg = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  Eigen::VectorXd prev_rb_action;
  Eigen::VectorXd prev_power_action;

  Eigen::VectorXd to_vector() const;
  static int dimension(int num_ues) { return 3 + 2 * num_ues; }
};

struct Penalties {
  double power = 0.0;      // consumed power / (K * p_max)
  double rb_excess = 0.0;  // max(0, requested - K) / K
};

// Active-UE rate statistics in bits/s. When every UE is idle all three equal demand_max.
struct QosStats {
  double avg = 0.0;
  double min = 0.0;
  double max = 0.0;
};

inline int action_dimension(int num_ues) { return 2 * num_ues; }

double sigmoid(double x);

// Maps a raw actor output in [-1, 1]^{2N} to a feasible allocation. The first N
// entries set each UE's requested RB count, the last N its power level. RBs are
// handed out first-fit in ascending UE order until K is exhausted; idle UEs get none.
AllocationAction decode_action(std::span<const double> raw, const CellConfig& config,
                               const EnvSnapshot& snapshot);

Penalties compute_penalties(const AllocationAction& alloc, const CellConfig& config);

QosStats qos_stats(const RateReport& report, const TaskSpec& task);

// r = sigmoid(Qn_m) - sigmoid(power penalty) - sigmoid(rb penalty).
double reward_from_terms(double normalized_min_qos, const Penalties& penalties);
double compute_reward(const RateReport& report, const AllocationAction& alloc,
                      const TaskSpec& task);

MdpState encode_state(const RateReport& report, const AllocationAction& prev,
                      const TaskSpec& task);

}  // namespace metaran
