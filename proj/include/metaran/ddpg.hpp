#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "metaran/dense.hpp"
#include "metaran/mdp.hpp"
#include "metaran/replay_buffer.hpp"
#include "metaran/rng.hpp"
#include "metaran/task_env.hpp"

namespace metaran {

struct DdpgConfig {
  std::vector<int> hidden = {300, 400, 400};
  double gamma = 0.99;
  double actor_lr = 1e-4;
  double critic_lr = 1e-4;
  double tau = 0.005;
  double noise_std = 0.2;
  double noise_decay = 0.999;  // per episode
  double noise_floor = 0.02;
  int batch_size = 128;
  std::size_t buffer_capacity = 100000;
  int horizon = 200;
  // Minimum stored transitions before updates start (never below 2 * batch_size).
  int warmup = 256;

  void validate() const;
};

struct TrainStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

// Loss gradients at the agent's current parameters, without applying them.
struct LossGradients {
  Eigen::VectorXd actor;
  Eigen::VectorXd critic;
  TrainStats losses;
};

// Actor-critic learner with target networks, Gaussian exploration and its own
// replay buffer. The actor head is tanh (actions in [-1, 1]); the critic sees
// [state; action] and has an identity head.
class DdpgAgent {
 public:
  DdpgAgent(int observation_size, int action_size, DdpgConfig config, std::uint64_t init_seed,
            std::uint64_t stream_seed);

  int observation_size() const { return actor_.input_size(); }
  int action_size() const { return actor_.output_size(); }
  const DdpgConfig& config() const { return config_; }

  const DenseNetwork& actor() const { return actor_; }
  const DenseNetwork& critic() const { return critic_; }
  const DenseNetwork& target_actor() const { return target_actor_; }
  const DenseNetwork& target_critic() const { return target_critic_; }
  const AdamState& actor_optimizer() const { return actor_opt_; }
  const AdamState& critic_optimizer() const { return critic_opt_; }

  // Overwrites online and target networks and restarts both optimizers.
  void load_parameters(const Eigen::VectorXd& actor_params, const Eigen::VectorXd& critic_params);
  // Copies networks (online and target) from another agent of identical shape.
  void copy_networks_from(const DdpgAgent& other);

  Eigen::VectorXd select_action(const Eigen::VectorXd& state, bool explore, Rng& rng) const;
  Eigen::VectorXd select_action(const Eigen::VectorXd& state, bool explore);

  // One critic step on the TD error, one actor step on -Q(s, mu(s)), then soft
  // target updates. Throws TrainingDivergence on non-finite losses.
  TrainStats train_step(const Batch& batch);

  Eigen::VectorXd critic_gradient(const Batch& batch, double* loss = nullptr) const;
  Eigen::VectorXd actor_gradient(const Batch& batch, double* loss = nullptr) const;
  LossGradients loss_gradients(const Batch& batch) const;

  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  Rng& replay_rng() { return replay_rng_; }

  double noise_std() const { return noise_std_; }
  void set_noise_std(double s) { noise_std_ = s; }
  std::int64_t episodes_completed() const { return episodes_; }
  // Advances the exploration schedule.
  void end_episode();

  // Networks, optimizers and noise schedule. The replay buffer is not saved.
  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  DdpgConfig config_;
  DenseNetwork actor_, critic_, target_actor_, target_critic_;
  AdamState actor_opt_, critic_opt_;
  ReplayBuffer buffer_;
  Rng explore_rng_;
  Rng replay_rng_;
  double noise_std_;
  std::int64_t episodes_ = 0;
};

struct EpisodeResult {
  double discounted_return = 0.0;
  QosStats mean_qos;  // per-step QoS averaged over the episode
  int updates = 0;
};

// Noisy rollout that stores every transition and runs one train_step per step once
// the buffer holds enough experience.
EpisodeResult run_training_episode(DdpgAgent& agent, Environment& env, std::uint64_t episode_seed);

// Greedy rollout; nothing is stored or trained.
EpisodeResult run_greedy_episode(const DdpgAgent& agent, Environment& env,
                                 std::uint64_t episode_seed, int horizon);

struct EvaluationResult {
  double mean_return = 0.0;
  QosStats mean_qos;
  std::vector<double> returns;
};

// Mean discounted return of the greedy policy over episodes seeded
// first_seed, first_seed + 1, ...
EvaluationResult evaluate_policy(const DdpgAgent& agent, Environment& env, int episodes,
                                 int horizon, std::uint64_t first_seed);

}  // namespace metaran
