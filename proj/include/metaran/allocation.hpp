#pragma once

#include <vector>

#include <Eigen/Core>

namespace metaran {

struct CellConfig;

// Decoded joint RB / power decision for one step.
struct AllocationAction {
  Eigen::MatrixXd rb_indicator;   // N x K, entries 0 or 1
  std::vector<int> rb_requested;  // per UE, before truncation to K
  Eigen::VectorXd per_rb_power;   // K, mW on assigned RBs, 0 elsewhere
  Eigen::VectorXd ue_power;       // N, decoded power level of each UE

  // No RBs assigned, every UE at p_min.
  static AllocationAction empty(const CellConfig& config);

  int assigned_rbs(int u) const;
  int total_requested() const;
};

}  // namespace metaran
