#include "metaran/dense.hpp"

#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "metaran/errors.hpp"
#include "metaran/rng.hpp"

namespace metaran {

namespace {

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw ConfigError("network: need at least input and output layers");
  for (int s : sizes)
    if (s <= 0) throw ConfigError("network: layer sizes must be positive");
}

}  // namespace

Eigen::Index DenseNetwork::parameter_count(std::span<const int> layer_sizes) {
  Eigen::Index count = 0;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i)
    count += static_cast<Eigen::Index>(layer_sizes[i]) * layer_sizes[i + 1] + layer_sizes[i + 1];
  return count;
}

DenseNetwork::DenseNetwork(std::vector<int> layer_sizes, Activation output_activation)
    : sizes_(std::move(layer_sizes)), output_activation_(output_activation) {
  check_sizes(sizes_);
  Eigen::Index offset = 0;
  for (int i = 0; i < num_layers(); ++i) {
    offsets_.push_back(offset);
    offset += static_cast<Eigen::Index>(sizes_[i]) * sizes_[i + 1] + sizes_[i + 1];
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

DenseNetwork DenseNetwork::init(std::vector<int> layer_sizes, Activation output_activation,
                                std::uint64_t seed) {
  DenseNetwork net(std::move(layer_sizes), output_activation);
  Rng rng(seed);
  for (int i = 0; i < net.num_layers(); ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.sizes_[i]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const Eigen::Index begin = net.offsets_[i];
    const Eigen::Index len = static_cast<Eigen::Index>(net.sizes_[i]) * net.sizes_[i + 1] + net.sizes_[i + 1];
    for (Eigen::Index j = begin; j < begin + len; ++j) net.params_(j) = dist(rng);
  }
  return net;
}

void DenseNetwork::set_params(const Eigen::VectorXd& flat) {
  if (flat.size() != params_.size())
    throw ContractViolation("network: parameter vector has " + std::to_string(flat.size()) +
                            " entries, expected " + std::to_string(params_.size()));
  params_ = flat;
  ++version_;
}

Eigen::VectorXd& DenseNetwork::mutable_params() {
  ++version_;
  return params_;
}

Eigen::Map<const Eigen::MatrixXd> DenseNetwork::weights(int layer) const {
  return {params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<const Eigen::VectorXd> DenseNetwork::bias(int layer) const {
  return {params_.data() + offsets_[layer] + static_cast<Eigen::Index>(sizes_[layer]) * sizes_[layer + 1],
          sizes_[layer + 1]};
}

namespace {

void check_input(const DenseNetwork& net, const Eigen::MatrixXd& inputs) {
  if (net.num_layers() < 1) throw ContractViolation("forward: network is empty");
  if (inputs.rows() != net.input_size())
    throw ContractViolation("forward: input has " + std::to_string(inputs.rows()) +
                            " rows, network expects " + std::to_string(net.input_size()));
}

Eigen::MatrixXd affine(const DenseNetwork& net, int layer, const Eigen::MatrixXd& x, bool last) {
  Eigen::MatrixXd z = net.weights(layer) * x;
  z.colwise() += net.bias(layer);
  if (!last || net.output_activation() == Activation::kTanh) z = z.array().tanh().matrix();
  return z;
}

}  // namespace

Eigen::MatrixXd predict(const DenseNetwork& net, const Eigen::MatrixXd& inputs) {
  check_input(net, inputs);
  Eigen::MatrixXd x = inputs;
  for (int i = 0; i < net.num_layers(); ++i) x = affine(net, i, x, i + 1 == net.num_layers());
  return x;
}

Eigen::VectorXd predict(const DenseNetwork& net, const Eigen::VectorXd& input) {
  return predict(net, Eigen::MatrixXd(input)).col(0);
}

Eigen::MatrixXd forward(const DenseNetwork& net, const Eigen::MatrixXd& inputs, Tape& tape) {
  check_input(net, inputs);
  tape.network = &net;
  tape.version = net.version();
  tape.activations.clear();
  tape.activations.reserve(net.num_layers() + 1);
  tape.activations.push_back(inputs);
  for (int i = 0; i < net.num_layers(); ++i)
    tape.activations.push_back(affine(net, i, tape.activations.back(), i + 1 == net.num_layers()));
  return tape.activations.back();
}

Gradients backward(const DenseNetwork& net, const Tape& tape, const Eigen::MatrixXd& output_grad) {
  if (tape.network != &net || tape.version != net.version() ||
      static_cast<int>(tape.activations.size()) != net.num_layers() + 1)
    throw ContractViolation("backward: tape does not belong to the current network state");
  const Eigen::MatrixXd& out = tape.activations.back();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols())
    throw ContractViolation("backward: output gradient shape mismatch");

  Gradients g;
  g.params = Eigen::VectorXd::Zero(net.parameter_count());
  Eigen::MatrixXd delta = output_grad;
  for (int i = net.num_layers() - 1; i >= 0; --i) {
    const bool tanh_layer = i + 1 < net.num_layers() || net.output_activation() == Activation::kTanh;
    if (tanh_layer) {
      const auto& y = tape.activations[i + 1];
      delta = (delta.array() * (1.0 - y.array().square())).matrix();
    }
    const auto& x = tape.activations[i];
    const int rows = net.layer_sizes()[i + 1];
    const int cols = net.layer_sizes()[i];
    const Eigen::Index w_offset = net.parameter_count(std::span<const int>(net.layer_sizes().data(), i + 1));
    Eigen::Map<Eigen::MatrixXd>(g.params.data() + w_offset, rows, cols).noalias() = delta * x.transpose();
    g.params.segment(w_offset + static_cast<Eigen::Index>(rows) * cols, rows) = delta.rowwise().sum();
    delta = net.weights(i).transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

AdamState AdamState::zeros(Eigen::Index size, double lr) {
  AdamState s;
  s.first_moment = Eigen::VectorXd::Zero(size);
  s.second_moment = Eigen::VectorXd::Zero(size);
  s.lr = lr;
  return s;
}

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads,
               AdamState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size())
    throw ContractViolation("adam_step: shape mismatch");
  ++state.step_count;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment =
      state.beta2 * state.second_moment + (1.0 - state.beta2) * grads.array().square().matrix();
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  params.array() -= state.lr * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + state.epsilon);
}

void adam_step(DenseNetwork& net, const Eigen::VectorXd& grads, AdamState& state) {
  adam_step(net.mutable_params(), grads, state);
}

void soft_update(DenseNetwork& target, const DenseNetwork& source, double tau) {
  if (!target.same_shape(source)) throw ContractViolation("soft_update: shape mismatch");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ContractViolation("soft_update: tau must lie in [0, 1]");
  auto& t = target.mutable_params();
  if (tau == 1.0) {
    t = source.params();
    return;
  }
  // Written as a step toward the source so equal networks stay bitwise equal.
  t += tau * (source.params() - t);
}

}  // namespace metaran
