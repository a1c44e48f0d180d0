#include "metaran/meta.hpp"

#include <cmath>
#include <future>
#include <istream>
#include <ostream>
#include <utility>

#include "metaran/errors.hpp"
#include "metaran/snapshot.hpp"

namespace metaran {

int MetaSchedule::adapt_episodes() const {
  return static_cast<int>(std::lround(adapt_fraction * outer_iterations));
}

void MetaSchedule::validate() const {
  if (outer_iterations < 0) throw ConfigError("schedule.outer_iterations: must be nonnegative");
  if (inner_episodes < 1) throw ConfigError("schedule.inner_episodes: must be at least 1");
  if (num_tasks < 1) throw ConfigError("schedule.num_tasks: must be at least 1");
  if (!(adapt_fraction >= 0)) throw ConfigError("schedule.adapt_fraction: must be nonnegative");
}

void LearnerSettings::validate() const {
  agent.validate();
  if (!(meta_lr >= 0)) throw ConfigError("agent.meta_lr: must be nonnegative");
  if (eval_episodes < 1) throw ConfigError("agent.eval_episodes: must be at least 1");
}

MetaModel MetaModel::initial(int observation_size, int action_size,
                             const LearnerSettings& settings, std::uint64_t init_seed) {
  const DdpgAgent prototype(observation_size, action_size, settings.agent, init_seed, 0);
  MetaModel m;
  m.actor = prototype.actor();
  m.critic = prototype.critic();
  m.actor_opt = AdamState::zeros(m.actor.parameter_count(), settings.meta_lr);
  m.critic_opt = AdamState::zeros(m.critic.parameter_count(), settings.meta_lr);
  return m;
}

void MetaModel::save(std::ostream& out) const {
  out << "metaran-meta 1\niteration " << completed_iterations << '\n';
  write_network(out, actor);
  write_network(out, critic);
  write_adam(out, actor_opt);
  write_adam(out, critic_opt);
}

MetaModel MetaModel::load(std::istream& in) {
  expect_token(in, "metaran-meta");
  expect_token(in, "1");
  expect_token(in, "iteration");
  MetaModel m;
  if (!(in >> m.completed_iterations)) throw FormatError("meta checkpoint: missing iteration");
  m.actor = read_network(in);
  m.critic = read_network(in);
  m.actor_opt = read_adam(in);
  m.critic_opt = read_adam(in);
  if (m.actor_opt.first_moment.size() != m.actor.parameter_count() ||
      m.critic_opt.first_moment.size() != m.critic.parameter_count())
    throw FormatError("meta checkpoint: optimizer state size mismatch");
  return m;
}

bool apply_meta_update(MetaModel& model, const std::vector<LossGradients>& task_gradients) {
  if (task_gradients.empty()) return false;
  Eigen::VectorXd actor_sum = Eigen::VectorXd::Zero(model.actor.parameter_count());
  Eigen::VectorXd critic_sum = Eigen::VectorXd::Zero(model.critic.parameter_count());
  for (const auto& g : task_gradients) {
    if (g.actor.size() != actor_sum.size() || g.critic.size() != critic_sum.size())
      throw ContractViolation("meta-update: task gradient shape differs from the meta-model");
    actor_sum += g.actor;
    critic_sum += g.critic;
  }
  if (!actor_sum.allFinite() || !critic_sum.allFinite())
    throw TrainingDivergence("meta-update: non-finite summed query gradient after iteration " +
                             std::to_string(model.completed_iterations));
  adam_step(model.actor, actor_sum, model.actor_opt);
  adam_step(model.critic, critic_sum, model.critic_opt);
  return true;
}

namespace {

std::uint64_t derived_seed(std::uint64_t seed, int task_id, StreamPurpose purpose) {
  return make_stream(seed, static_cast<std::uint64_t>(task_id), purpose)();
}

void check_compatible(const std::vector<TaskSpec>& tasks) {
  if (tasks.empty()) throw ConfigError("meta: need at least one task");
  for (const auto& t : tasks) {
    t.validate();
    if (t.cell.num_ues != tasks.front().cell.num_ues)
      throw ConfigError("meta: every task must have the same num_ues (task " +
                        std::to_string(t.task_id) + " differs)");
  }
}

}  // namespace

MetaTrainer::MetaTrainer(std::vector<TaskSpec> tasks, MetaSchedule schedule,
                         LearnerSettings settings, std::uint64_t seed)
    : tasks_(std::move(tasks)), schedule_(schedule), settings_(std::move(settings)), seed_(seed) {
  schedule_.validate();
  settings_.validate();
  check_compatible(tasks_);
  if (static_cast<int>(tasks_.size()) != schedule_.num_tasks)
    throw ConfigError("meta: schedule.num_tasks does not match the task list");
  const int n = tasks_.front().cell.num_ues;
  const int obs = MdpState::dimension(n);
  const int act = action_dimension(n);
  model_ = MetaModel::initial(obs, act, settings_, seed_);
  agents_.reserve(tasks_.size());
  envs_.reserve(tasks_.size());
  for (const auto& t : tasks_) {
    agents_.emplace_back(obs, act, settings_.agent, seed_,
                         derived_seed(seed_, t.task_id, StreamPurpose::kExploration));
    envs_.emplace_back(t);
    episode_seeds_.push_back(make_stream(seed_, t.task_id, StreamPurpose::kEnvironment));
  }
}

void MetaTrainer::broadcast() {
  for (auto& agent : agents_) agent.load_parameters(model_.actor.params(), model_.critic.params());
}

double MetaTrainer::run_inner(int g) {
  double total = 0.0;
  for (int e = 0; e < schedule_.inner_episodes; ++e)
    total += run_training_episode(agents_[g], envs_[g], episode_seeds_[g]()).discounted_return;
  return total / schedule_.inner_episodes;
}

std::optional<LossGradients> MetaTrainer::query_gradient(int g) {
  DdpgAgent& agent = agents_[g];
  auto batch = agent.buffer().sample(settings_.agent.batch_size, Partition::kQuery, agent.replay_rng());
  if (!batch) return std::nullopt;
  return agent.loss_gradients(*batch);
}

IterationRecord MetaTrainer::run_iteration() {
  IterationRecord rec;
  rec.iteration = model_.completed_iterations + 1;
  broadcast();

  const int n = static_cast<int>(tasks_.size());
  std::vector<double> returns(n);
  if (settings_.parallel_tasks && n > 1) {
    std::vector<std::future<double>> jobs;
    for (int g = 0; g < n; ++g) jobs.push_back(std::async(std::launch::async, [this, g] { return run_inner(g); }));
    for (int g = 0; g < n; ++g) returns[g] = jobs[g].get();
  } else {
    for (int g = 0; g < n; ++g) returns[g] = run_inner(g);
  }

  std::vector<LossGradients> grads;
  for (int g = 0; g < n; ++g) {
    rec.mean_train_return += returns[g] / n;
    if (auto q = query_gradient(g)) {
      rec.mean_query_critic_loss += q->losses.critic_loss;
      rec.mean_query_actor_loss += q->losses.actor_loss;
      grads.push_back(std::move(*q));
    }
  }
  rec.contributing_tasks = static_cast<int>(grads.size());
  if (!grads.empty()) {
    rec.mean_query_critic_loss /= rec.contributing_tasks;
    rec.mean_query_actor_loss /= rec.contributing_tasks;
  }
  apply_meta_update(model_, grads);
  ++model_.completed_iterations;
  return rec;
}

MetaTrainResult meta_train(const std::vector<TaskSpec>& tasks, const MetaSchedule& schedule,
                           const LearnerSettings& settings, std::uint64_t seed,
                           const IterationCallback& on_iteration) {
  MetaTrainer trainer(tasks, schedule, settings, seed);
  MetaTrainResult out;
  for (int t = 0; t < schedule.outer_iterations; ++t) {
    out.history.push_back(trainer.run_iteration());
    if (on_iteration) on_iteration(out.history.back());
  }
  out.model = trainer.model();
  return out;
}

namespace {

ShotRecord train_and_evaluate(DdpgAgent& agent, TaskEnvironment& train_env,
                              std::uint64_t episode_seed, TaskEnvironment& eval_env,
                              const LearnerSettings& settings, int shot) {
  ShotRecord rec;
  rec.shot = shot;
  rec.trained_task_id = train_env.task().task_id;
  rec.train_return = run_training_episode(agent, train_env, episode_seed).discounted_return;
  const EvaluationResult eval = evaluate_policy(agent, eval_env, settings.eval_episodes,
                                                settings.agent.horizon, settings.eval_seed);
  rec.eval_return = eval.mean_return;
  rec.eval_qos = eval.mean_qos;
  return rec;
}

DdpgAgent fresh_agent(const TaskSpec& task, const LearnerSettings& settings, std::uint64_t seed) {
  const int n = task.cell.num_ues;
  return DdpgAgent(MdpState::dimension(n), action_dimension(n), settings.agent, seed,
                   derived_seed(seed, task.task_id, StreamPurpose::kExploration));
}

}  // namespace

std::vector<ShotRecord> train_on_task(DdpgAgent& agent, const TaskSpec& task, int budget,
                                      const LearnerSettings& settings, std::uint64_t seed) {
  if (budget < 0) throw ContractViolation("train_on_task: budget must be nonnegative");
  TaskEnvironment train_env(task);
  TaskEnvironment eval_env(task);
  Rng episode_seeds = make_stream(seed, task.task_id, StreamPurpose::kEnvironment);
  std::vector<ShotRecord> trace;
  trace.reserve(budget);
  for (int e = 0; e < budget; ++e)
    trace.push_back(train_and_evaluate(agent, train_env, episode_seeds(), eval_env, settings, e + 1));
  return trace;
}

AdaptationResult inner_adapt(const MetaModel& meta, const TaskSpec& task, int budget,
                             const LearnerSettings& settings, std::uint64_t seed) {
  settings.validate();
  task.validate();
  DdpgAgent agent = fresh_agent(task, settings, seed);
  if (!meta.actor.same_shape(agent.actor()) || !meta.critic.same_shape(agent.critic()))
    throw ConfigError("inner_adapt: meta-model shape does not fit the task");
  agent.load_parameters(meta.actor.params(), meta.critic.params());
  auto trace = train_on_task(agent, task, budget, settings, seed);
  return {std::move(agent), std::move(trace)};
}

AdaptationResult meta_adapt_new(const MetaModel& meta, const TaskSpec& new_task,
                                const MetaSchedule& schedule, const LearnerSettings& settings,
                                std::uint64_t seed) {
  return inner_adapt(meta, new_task, schedule.adapt_episodes(), settings, seed);
}

BaselineKind parse_baseline_kind(const std::string& name) {
  if (name == "scratch") return BaselineKind::kScratch;
  if (name == "tl") return BaselineKind::kTransfer;
  if (name == "mtl") return BaselineKind::kMultiTask;
  throw ConfigError("unknown baseline kind '" + name + "' (expected scratch, tl or mtl)");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kScratch: return "scratch";
    case BaselineKind::kTransfer: return "tl";
    case BaselineKind::kMultiTask: return "mtl";
  }
  return "unknown";
}

DdpgAgent train_donor(const TaskSpec& donor_task, int episodes, const LearnerSettings& settings,
                      std::uint64_t seed) {
  settings.validate();
  donor_task.validate();
  DdpgAgent agent = fresh_agent(donor_task, settings, seed);
  TaskEnvironment env(donor_task);
  Rng episode_seeds = make_stream(seed, donor_task.task_id, StreamPurpose::kEnvironment);
  for (int e = 0; e < episodes; ++e) run_training_episode(agent, env, episode_seeds());
  return agent;
}

AdaptationResult run_baseline(BaselineKind kind, const TaskSpec& new_task,
                              const std::vector<TaskSpec>& donor_tasks, int budget,
                              const LearnerSettings& settings, std::uint64_t seed,
                              const DdpgAgent* donor_agent) {
  settings.validate();
  new_task.validate();
  if (budget < 0) throw ContractViolation("run_baseline: budget must be nonnegative");
  DdpgAgent agent = fresh_agent(new_task, settings, seed);

  switch (kind) {
    case BaselineKind::kScratch: {
      auto trace = train_on_task(agent, new_task, budget, settings, seed);
      return {std::move(agent), std::move(trace)};
    }
    case BaselineKind::kTransfer: {
      if (donor_agent == nullptr) throw ConfigError("transfer baseline: no trained donor agent");
      agent.copy_networks_from(*donor_agent);
      auto trace = train_on_task(agent, new_task, budget, settings, seed);
      return {std::move(agent), std::move(trace)};
    }
    case BaselineKind::kMultiTask: {
      if (donor_tasks.empty()) throw ConfigError("multi-task baseline: no donor task");
      check_compatible({new_task, donor_tasks.front()});
      Rng pick = make_stream(seed, new_task.task_id, StreamPurpose::kBaseline);
      std::uniform_int_distribution<std::size_t> which(0, donor_tasks.size() - 1);
      const TaskSpec& donor = donor_tasks[which(pick)];
      check_compatible({new_task, donor});

      TaskEnvironment new_env(new_task);
      TaskEnvironment donor_env(donor);
      TaskEnvironment eval_env(new_task);
      Rng new_seeds = make_stream(seed, new_task.task_id, StreamPurpose::kEnvironment);
      Rng donor_seeds = make_stream(seed, donor.task_id, StreamPurpose::kEnvironment);
      std::vector<ShotRecord> trace;
      for (int e = 0; e < budget; ++e) {
        // Alternate so that the final episode is always on the new task.
        const bool on_new = (budget - 1 - e) % 2 == 0;
        TaskEnvironment& env = on_new ? new_env : donor_env;
        const std::uint64_t episode_seed = on_new ? new_seeds() : donor_seeds();
        trace.push_back(train_and_evaluate(agent, env, episode_seed, eval_env, settings, e + 1));
      }
      return {std::move(agent), std::move(trace)};
    }
  }
  throw ConfigError("run_baseline: unknown kind");
}

}  // namespace metaran
