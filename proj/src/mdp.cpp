#include "metaran/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metaran/errors.hpp"

namespace metaran {

void TaskSpec::validate() const {
  cell.validate();
  if (!(demand_min_bps >= 0)) throw ConfigError("task.demand_min_bps: must be nonnegative");
  if (!(demand_max_bps > demand_min_bps))
    throw ConfigError("task.demand_max_bps: must exceed demand_min_bps");
}

Eigen::VectorXd MdpState::to_vector() const {
  const auto n = prev_rb_action.size();
  Eigen::VectorXd v(3 + 2 * n);
  v << q_avg, q_min, q_max, prev_rb_action, prev_power_action;
  return v;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

AllocationAction AllocationAction::empty(const CellConfig& config) {
  AllocationAction a;
  a.rb_indicator = Eigen::MatrixXd::Zero(config.num_ues, config.num_rbs);
  a.rb_requested.assign(config.num_ues, 0);
  a.per_rb_power = Eigen::VectorXd::Zero(config.num_rbs);
  a.ue_power = Eigen::VectorXd::Constant(config.num_ues, config.p_min_mw);
  return a;
}

int AllocationAction::assigned_rbs(int u) const {
  return static_cast<int>(rb_indicator.row(u).sum());
}

int AllocationAction::total_requested() const {
  int total = 0;
  for (int r : rb_requested) total += r;
  return total;
}

AllocationAction decode_action(std::span<const double> raw, const CellConfig& config,
                               const EnvSnapshot& snapshot) {
  const int n = config.num_ues;
  const int k = config.num_rbs;
  if (static_cast<int>(raw.size()) != action_dimension(n))
    throw ContractViolation("decode_action: expected " + std::to_string(action_dimension(n)) +
                            " entries, got " + std::to_string(raw.size()));
  if (snapshot.num_ues() != n) throw ContractViolation("decode_action: snapshot has wrong UE count");

  AllocationAction a = AllocationAction::empty(config);
  int next_rb = 0;
  for (int u = 0; u < n; ++u) {
    const double rb_raw = std::clamp(raw[u], -1.0, 1.0);
    const double power_raw = std::clamp(raw[n + u], -1.0, 1.0);
    const double level = (power_raw + 1.0) / 2.0;
    a.ue_power(u) = std::min(config.p_max_mw,
                             config.p_min_mw + level * (config.p_max_mw - config.p_min_mw));
    if (!snapshot.is_active(u)) continue;

    const int requested = static_cast<int>(std::lround((rb_raw + 1.0) / 2.0 * k));
    a.rb_requested[u] = requested;
    const int granted = std::min(requested, k - next_rb);
    for (int j = next_rb; j < next_rb + granted; ++j) {
      a.rb_indicator(u, j) = 1.0;
      a.per_rb_power(j) = a.ue_power(u);
    }
    next_rb += granted;
  }
  return a;
}

Penalties compute_penalties(const AllocationAction& alloc, const CellConfig& config) {
  const double k = config.num_rbs;
  Penalties p;
  p.power = (alloc.rb_indicator.colwise().sum().transpose().array() * alloc.per_rb_power.array())
                .sum() /
            (k * config.p_max_mw);
  p.rb_excess = std::max(0.0, alloc.total_requested() - k) / k;
  return p;
}

QosStats qos_stats(const RateReport& report, const TaskSpec& task) {
  QosStats q;
  int count = 0;
  double sum = 0.0;
  for (Eigen::Index u = 0; u < report.per_ue_rate.size(); ++u) {
    if (!report.active[u]) continue;
    const double c = report.per_ue_rate(u);
    q.min = count == 0 ? c : std::min(q.min, c);
    q.max = count == 0 ? c : std::max(q.max, c);
    sum += c;
    ++count;
  }
  if (count == 0) return {task.demand_max_bps, task.demand_max_bps, task.demand_max_bps};
  q.avg = sum / count;
  return q;
}

double reward_from_terms(double normalized_min_qos, const Penalties& penalties) {
  return sigmoid(normalized_min_qos) - sigmoid(penalties.power) - sigmoid(penalties.rb_excess);
}

double compute_reward(const RateReport& report, const AllocationAction& alloc,
                      const TaskSpec& task) {
  const double span = task.demand_max_bps - task.demand_min_bps;
  if (!(span > 0)) throw ConfigError("task: demand_max_bps must exceed demand_min_bps");
  const QosStats q = qos_stats(report, task);
  const double normalized = (q.min - task.demand_min_bps) / span;
  return reward_from_terms(normalized, compute_penalties(alloc, task.cell));
}

MdpState encode_state(const RateReport& report, const AllocationAction& prev,
                      const TaskSpec& task) {
  const CellConfig& cell = task.cell;
  const int n = cell.num_ues;
  if (report.per_ue_rate.size() != n || static_cast<int>(prev.rb_requested.size()) != n ||
      prev.ue_power.size() != n)
    throw ContractViolation("encode_state: dimension mismatch");

  const QosStats q = qos_stats(report, task);
  MdpState s;
  s.q_avg = q.avg / task.demand_max_bps;
  s.q_min = q.min / task.demand_max_bps;
  s.q_max = q.max / task.demand_max_bps;
  s.prev_rb_action.resize(n);
  s.prev_power_action.resize(n);
  const double span = cell.p_max_mw - cell.p_min_mw;
  for (int u = 0; u < n; ++u) {
    s.prev_rb_action(u) = static_cast<double>(prev.rb_requested[u]) / cell.num_rbs;
    s.prev_power_action(u) = span > 0 ? 2.0 * (prev.ue_power(u) - cell.p_min_mw) / span - 1.0 : 0.0;
  }
  return s;
}

}  // namespace metaran
