#include "metaran/task_env.hpp"

#include <utility>

#include "metaran/errors.hpp"

namespace metaran {

namespace {

RateReport silent_report(const EnvSnapshot& s, const CellConfig& config) {
  RateReport r;
  r.per_ue_rate = Eigen::VectorXd::Zero(s.num_ues());
  r.interference = Eigen::MatrixXd::Zero(s.num_ues(), config.num_rbs);
  r.sinr = Eigen::MatrixXd::Zero(s.num_ues(), config.num_rbs);
  r.active.resize(s.num_ues());
  for (int u = 0; u < s.num_ues(); ++u) r.active[u] = s.is_active(u);
  return r;
}

}  // namespace

TaskEnvironment::TaskEnvironment(TaskSpec task) : task_(std::move(task)) {
  task_.validate();
  reset(0);
}

Eigen::VectorXd TaskEnvironment::reset(std::uint64_t episode_seed) {
  rng_.seed(episode_seed);
  snapshot_ = reset_snapshot(task_.cell, rng_);
  prev_ = AllocationAction::empty(task_.cell);
  last_report_ = silent_report(snapshot_, task_.cell);
  return encode_state(last_report_, prev_, task_).to_vector();
}

StepResult TaskEnvironment::step(std::span<const double> action) {
  snapshot_ = step_mobility(std::move(snapshot_), task_.cell, kStepSeconds, rng_);
  snapshot_ = step_traffic(std::move(snapshot_), task_.cell.traffic_switch_prob, rng_);
  const ChannelRealization channel = sample_channel(snapshot_, task_.cell, rng_);
  AllocationAction alloc = decode_action(action, task_.cell, snapshot_);
  last_report_ = compute_rates(alloc, channel, snapshot_, task_.cell);

  StepResult out;
  out.reward = compute_reward(last_report_, alloc, task_);
  out.qos = qos_stats(last_report_, task_);
  prev_ = std::move(alloc);
  out.observation = encode_state(last_report_, prev_, task_).to_vector();
  return out;
}

}  // namespace metaran
