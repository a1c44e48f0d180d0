#include "metaran/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <utility>

#include "metaran/errors.hpp"
#include "metaran/snapshot.hpp"

namespace metaran {

void DdpgConfig::validate() const {
  if (hidden.empty()) throw ConfigError("agent.hidden: need at least one hidden layer");
  for (int h : hidden)
    if (h <= 0) throw ConfigError("agent.hidden: sizes must be positive");
  if (!(gamma >= 0 && gamma < 1)) throw ConfigError("agent.gamma: must lie in [0, 1)");
  if (!(actor_lr >= 0) || !(critic_lr >= 0)) throw ConfigError("agent.*_lr: must be nonnegative");
  if (!(tau >= 0 && tau <= 1)) throw ConfigError("agent.tau: must lie in [0, 1]");
  if (!(noise_std >= 0) || !(noise_floor >= 0)) throw ConfigError("agent.noise_*: must be nonnegative");
  if (!(noise_decay > 0 && noise_decay <= 1)) throw ConfigError("agent.noise_decay: must lie in (0, 1]");
  if (batch_size <= 0) throw ConfigError("agent.batch_size: must be positive");
  if (buffer_capacity < 2 * static_cast<std::size_t>(batch_size))
    throw ConfigError("agent.buffer_capacity: must hold at least two batches");
  if (horizon < 0) throw ConfigError("agent.horizon: must be nonnegative");
  if (warmup < 0) throw ConfigError("agent.warmup: must be nonnegative");
}

namespace {

std::vector<int> stack(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

Eigen::MatrixXd concat_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd m(top.rows() + bottom.rows(), top.cols());
  m << top, bottom;
  return m;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw TrainingDivergence(std::string("ddpg: non-finite ") + what);
}

}  // namespace

DdpgAgent::DdpgAgent(int observation_size, int action_size, DdpgConfig config,
                     std::uint64_t init_seed, std::uint64_t stream_seed)
    : config_(std::move(config)),
      buffer_((config_.validate(), config_.buffer_capacity)),
      explore_rng_(make_stream(stream_seed, 0, StreamPurpose::kExploration)),
      replay_rng_(make_stream(stream_seed, 0, StreamPurpose::kReplay)),
      noise_std_(config_.noise_std) {
  if (observation_size <= 0 || action_size <= 0)
    throw ConfigError("ddpg: observation and action sizes must be positive");
  Rng init = make_stream(init_seed, 0, StreamPurpose::kInit);
  actor_ = DenseNetwork::init(stack(observation_size, config_.hidden, action_size),
                              Activation::kTanh, init());
  critic_ = DenseNetwork::init(stack(observation_size + action_size, config_.hidden, 1),
                               Activation::kIdentity, init());
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_opt_ = AdamState::zeros(actor_.parameter_count(), config_.actor_lr);
  critic_opt_ = AdamState::zeros(critic_.parameter_count(), config_.critic_lr);
}

void DdpgAgent::load_parameters(const Eigen::VectorXd& actor_params,
                                const Eigen::VectorXd& critic_params) {
  actor_.set_params(actor_params);
  critic_.set_params(critic_params);
  target_actor_.set_params(actor_params);
  target_critic_.set_params(critic_params);
  actor_opt_ = AdamState::zeros(actor_.parameter_count(), config_.actor_lr);
  critic_opt_ = AdamState::zeros(critic_.parameter_count(), config_.critic_lr);
}

void DdpgAgent::copy_networks_from(const DdpgAgent& other) {
  if (!actor_.same_shape(other.actor_) || !critic_.same_shape(other.critic_))
    throw ConfigError("ddpg: cannot copy networks between agents of different shapes");
  actor_.set_params(other.actor_.params());
  critic_.set_params(other.critic_.params());
  target_actor_.set_params(other.target_actor_.params());
  target_critic_.set_params(other.target_critic_.params());
}

Eigen::VectorXd DdpgAgent::select_action(const Eigen::VectorXd& state, bool explore,
                                         Rng& rng) const {
  if (state.size() != observation_size())
    throw ContractViolation("select_action: state dimension mismatch");
  Eigen::VectorXd a = predict(actor_, state);
  if (explore && noise_std_ > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_std_);
    for (auto& v : a) v = std::clamp(v + noise(rng), -1.0, 1.0);
  }
  return a;
}

Eigen::VectorXd DdpgAgent::select_action(const Eigen::VectorXd& state, bool explore) {
  return select_action(state, explore, explore_rng_);
}

Eigen::VectorXd DdpgAgent::critic_gradient(const Batch& batch, double* loss) const {
  const double n = batch.size();
  const Eigen::MatrixXd next_actions = predict(target_actor_, batch.next_states);
  const Eigen::RowVectorXd next_q =
      predict(target_critic_, concat_rows(batch.next_states, next_actions)).row(0);
  const Eigen::RowVectorXd target = batch.rewards.transpose() + config_.gamma * next_q;

  Tape tape;
  const Eigen::RowVectorXd q = forward(critic_, concat_rows(batch.states, batch.actions), tape).row(0);
  const Eigen::RowVectorXd diff = q - target;
  const double l = diff.squaredNorm() / n;
  require_finite(l, "critic loss");
  if (loss) *loss = l;
  return backward(critic_, tape, (2.0 / n) * diff).params;
}

Eigen::VectorXd DdpgAgent::actor_gradient(const Batch& batch, double* loss) const {
  const double n = batch.size();
  Tape actor_tape;
  const Eigen::MatrixXd actions = forward(actor_, batch.states, actor_tape);
  Tape critic_tape;
  const Eigen::MatrixXd q = forward(critic_, concat_rows(batch.states, actions), critic_tape);
  const double l = -q.mean();
  require_finite(l, "actor loss");
  if (loss) *loss = l;
  const Gradients through_critic =
      backward(critic_, critic_tape, Eigen::MatrixXd::Constant(1, batch.size(), -1.0 / n));
  return backward(actor_, actor_tape, through_critic.input.bottomRows(action_size())).params;
}

LossGradients DdpgAgent::loss_gradients(const Batch& batch) const {
  LossGradients g;
  g.critic = critic_gradient(batch, &g.losses.critic_loss);
  g.actor = actor_gradient(batch, &g.losses.actor_loss);
  return g;
}

TrainStats DdpgAgent::train_step(const Batch& batch) {
  if (batch.size() == 0) throw ContractViolation("train_step: empty batch");
  TrainStats stats;
  const Eigen::VectorXd critic_grad = critic_gradient(batch, &stats.critic_loss);
  adam_step(critic_, critic_grad, critic_opt_);
  const Eigen::VectorXd actor_grad = actor_gradient(batch, &stats.actor_loss);
  adam_step(actor_, actor_grad, actor_opt_);
  soft_update(target_critic_, critic_, config_.tau);
  soft_update(target_actor_, actor_, config_.tau);
  return stats;
}

void DdpgAgent::end_episode() {
  ++episodes_;
  noise_std_ = std::max(config_.noise_floor, noise_std_ * config_.noise_decay);
}

void DdpgAgent::save(std::ostream& out) const {
  out << "metaran-agent 1\n";
  for (const auto* net : {&actor_, &critic_, &target_actor_, &target_critic_}) write_network(out, *net);
  write_adam(out, actor_opt_);
  write_adam(out, critic_opt_);
  out << "noise ";
  write_double(out, noise_std_);
  out << "\nepisodes " << episodes_ << '\n';
}

void DdpgAgent::load(std::istream& in) {
  expect_token(in, "metaran-agent");
  expect_token(in, "1");
  DenseNetwork nets[4];
  for (auto& net : nets) net = read_network(in);
  if (!nets[0].same_shape(actor_) || !nets[1].same_shape(critic_) ||
      !nets[2].same_shape(actor_) || !nets[3].same_shape(critic_))
    throw FormatError("agent checkpoint: network shapes do not match this agent");
  AdamState actor_opt = read_adam(in);
  AdamState critic_opt = read_adam(in);
  if (actor_opt.first_moment.size() != actor_.parameter_count() ||
      critic_opt.first_moment.size() != critic_.parameter_count())
    throw FormatError("agent checkpoint: optimizer state size mismatch");
  expect_token(in, "noise");
  const double noise = read_double(in);
  expect_token(in, "episodes");
  std::int64_t episodes = 0;
  if (!(in >> episodes)) throw FormatError("agent checkpoint: missing episode count");

  actor_.set_params(nets[0].params());
  critic_.set_params(nets[1].params());
  target_actor_.set_params(nets[2].params());
  target_critic_.set_params(nets[3].params());
  actor_opt_ = std::move(actor_opt);
  critic_opt_ = std::move(critic_opt);
  noise_std_ = noise;
  episodes_ = episodes;
}

namespace {

void accumulate(QosStats& sum, const QosStats& q) {
  sum.avg += q.avg;
  sum.min += q.min;
  sum.max += q.max;
}

QosStats averaged(QosStats sum, int steps) {
  if (steps == 0) return {};
  return {sum.avg / steps, sum.min / steps, sum.max / steps};
}

}  // namespace

EpisodeResult run_training_episode(DdpgAgent& agent, Environment& env, std::uint64_t episode_seed) {
  const DdpgConfig& cfg = agent.config();
  const auto min_stored = static_cast<std::size_t>(std::max(cfg.warmup, 2 * cfg.batch_size));
  EpisodeResult result;
  QosStats qos_sum;
  Eigen::VectorXd state = env.reset(episode_seed);
  double discount = 1.0;
  for (int t = 0; t < cfg.horizon; ++t) {
    Eigen::VectorXd action = agent.select_action(state, true);
    StepResult step = env.step(as_span(action));
    result.discounted_return += discount * step.reward;
    discount *= cfg.gamma;
    accumulate(qos_sum, step.qos);
    agent.buffer().push({state, std::move(action), step.reward, step.observation});
    state = std::move(step.observation);
    if (agent.buffer().size() >= min_stored) {
      if (auto batch = agent.buffer().sample(cfg.batch_size, Partition::kSupport, agent.replay_rng())) {
        agent.train_step(*batch);
        ++result.updates;
      }
    }
  }
  result.mean_qos = averaged(qos_sum, cfg.horizon);
  agent.end_episode();
  return result;
}

EpisodeResult run_greedy_episode(const DdpgAgent& agent, Environment& env,
                                 std::uint64_t episode_seed, int horizon) {
  EpisodeResult result;
  QosStats qos_sum;
  Eigen::VectorXd state = env.reset(episode_seed);
  double discount = 1.0;
  Rng unused(0);
  for (int t = 0; t < horizon; ++t) {
    StepResult step = env.step(as_span(agent.select_action(state, false, unused)));
    result.discounted_return += discount * step.reward;
    discount *= agent.config().gamma;
    accumulate(qos_sum, step.qos);
    state = std::move(step.observation);
  }
  result.mean_qos = averaged(qos_sum, horizon);
  return result;
}

EvaluationResult evaluate_policy(const DdpgAgent& agent, Environment& env, int episodes,
                                 int horizon, std::uint64_t first_seed) {
  if (episodes < 1) throw ContractViolation("evaluate_policy: need at least one episode");
  EvaluationResult out;
  QosStats qos_sum;
  for (int e = 0; e < episodes; ++e) {
    const EpisodeResult r = run_greedy_episode(agent, env, first_seed + e, horizon);
    out.returns.push_back(r.discounted_return);
    accumulate(qos_sum, r.mean_qos);
  }
  double total = 0.0;
  for (double r : out.returns) total += r;
  out.mean_return = total / episodes;
  out.mean_qos = averaged(qos_sum, episodes);
  return out;
}

}  // namespace metaran
