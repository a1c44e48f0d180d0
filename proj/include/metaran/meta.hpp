#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "metaran/ddpg.hpp"
#include "metaran/mdp.hpp"

namespace metaran {

struct MetaSchedule {
  int outer_iterations = 100;  // T
  int inner_episodes = 10;     // T_e, episodes per task per outer iteration
  int num_tasks = 6;           // N_g
  double adapt_fraction = 0.1;

  // T_new = round(adapt_fraction * T)
  int adapt_episodes() const;
  void validate() const;
};

struct LearnerSettings {
  DdpgConfig agent;
  double meta_lr = 1e-4;
  int eval_episodes = 1;
  std::uint64_t eval_seed = 1000003;  // greedy evaluations replay episodes from here
  bool parallel_tasks = false;

  void validate() const;
};

// Shared initialization theta_M for every task agent.
struct MetaModel {
  DenseNetwork actor;
  DenseNetwork critic;
  AdamState actor_opt;
  AdamState critic_opt;
  int completed_iterations = 0;

  // Same parameters a fresh DdpgAgent built with init_seed would get.
  static MetaModel initial(int observation_size, int action_size, const LearnerSettings& settings,
                           std::uint64_t init_seed);

  void save(std::ostream& out) const;
  static MetaModel load(std::istream& in);
};

// Sums per-task query gradients and applies one meta Adam step. Returns false and
// leaves the model untouched when no task contributed.
bool apply_meta_update(MetaModel& model, const std::vector<LossGradients>& task_gradients);

struct IterationRecord {
  int iteration = 0;
  double mean_train_return = 0.0;
  double mean_query_critic_loss = 0.0;
  double mean_query_actor_loss = 0.0;
  int contributing_tasks = 0;
};

// Drives the outer loop one stage at a time so each stage can be inspected.
class MetaTrainer {
 public:
  MetaTrainer(std::vector<TaskSpec> tasks, MetaSchedule schedule, LearnerSettings settings,
              std::uint64_t seed);

  // Copies theta_M into every task agent (online and target networks).
  void broadcast();
  // T_e noisy training episodes for task g, with inner updates on support samples.
  double run_inner(int g);
  // Loss gradients of task g on a query sample, evaluated at its adapted parameters.
  std::optional<LossGradients> query_gradient(int g);
  // broadcast -> inner loops -> query gradients -> meta-update.
  IterationRecord run_iteration();

  const MetaModel& model() const { return model_; }
  MetaModel& model() { return model_; }
  const std::vector<DdpgAgent>& agents() const { return agents_; }
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  const MetaSchedule& schedule() const { return schedule_; }

 private:
  std::vector<TaskSpec> tasks_;
  MetaSchedule schedule_;
  LearnerSettings settings_;
  std::uint64_t seed_;
  MetaModel model_;
  std::vector<DdpgAgent> agents_;
  std::vector<TaskEnvironment> envs_;
  std::vector<Rng> episode_seeds_;
};

struct MetaTrainResult {
  MetaModel model;
  std::vector<IterationRecord> history;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

MetaTrainResult meta_train(const std::vector<TaskSpec>& tasks, const MetaSchedule& schedule,
                           const LearnerSettings& settings, std::uint64_t seed,
                           const IterationCallback& on_iteration = {});

// One adaptation/training episode followed by a greedy evaluation on the target task.
struct ShotRecord {
  int shot = 0;  // 1-based episode count
  int trained_task_id = 0;
  double train_return = 0.0;
  double eval_return = 0.0;
  QosStats eval_qos;
};

struct AdaptationResult {
  DdpgAgent agent;
  std::vector<ShotRecord> trace;
};

// Trains `agent` for `budget` episodes on `task`, evaluating after each one.
// Episode seeds depend only on (seed, task id), so runs with a larger budget
// replay the shorter run as a prefix.
std::vector<ShotRecord> train_on_task(DdpgAgent& agent, const TaskSpec& task, int budget,
                                      const LearnerSettings& settings, std::uint64_t seed);

AdaptationResult inner_adapt(const MetaModel& meta, const TaskSpec& task, int budget,
                             const LearnerSettings& settings, std::uint64_t seed);

AdaptationResult meta_adapt_new(const MetaModel& meta, const TaskSpec& new_task,
                                const MetaSchedule& schedule, const LearnerSettings& settings,
                                std::uint64_t seed);

enum class BaselineKind { kScratch, kTransfer, kMultiTask };

BaselineKind parse_baseline_kind(const std::string& name);
std::string to_string(BaselineKind kind);

// Random-init agent on its own task, used as the transfer-learning donor.
DdpgAgent train_donor(const TaskSpec& donor_task, int episodes, const LearnerSettings& settings,
                      std::uint64_t seed);

// scratch: random init, `budget` episodes on new_task.
// transfer: start from *donor_agent, fine-tune `budget` episodes.
// multi-task: one agent alternating episodes between a randomly chosen donor task and
//   new_task, new task last, evaluated on new_task after every episode.
AdaptationResult run_baseline(BaselineKind kind, const TaskSpec& new_task,
                              const std::vector<TaskSpec>& donor_tasks, int budget,
                              const LearnerSettings& settings, std::uint64_t seed,
                              const DdpgAgent* donor_agent = nullptr);

}  // namespace metaran
