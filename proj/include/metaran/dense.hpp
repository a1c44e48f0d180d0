#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace metaran {

enum class Activation { kTanh, kIdentity };

// Fully-connected MLP with tanh hidden layers. Parameters live in one flat vector in
// canonical order: for each layer, the weight matrix (out x in, column-major) then the bias.
class DenseNetwork {
 public:
  DenseNetwork() = default;
  // All-zero parameters.
  DenseNetwork(std::vector<int> layer_sizes, Activation output_activation);

  // Weights and biases uniform in +-1/sqrt(fan_in).
  static DenseNetwork init(std::vector<int> layer_sizes, Activation output_activation,
                           std::uint64_t seed);

  static Eigen::Index parameter_count(std::span<const int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  Activation output_activation() const { return output_activation_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  const Eigen::VectorXd& params() const { return params_; }
  void set_params(const Eigen::VectorXd& flat);
  // Any write through this reference invalidates outstanding tapes.
  Eigen::VectorXd& mutable_params();

  Eigen::Map<const Eigen::MatrixXd> weights(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  std::uint64_t version() const { return version_; }
  bool same_shape(const DenseNetwork& other) const {
    return sizes_ == other.sizes_ && output_activation_ == other.output_activation_;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;  // start of each layer's weights
  Activation output_activation_ = Activation::kIdentity;
  Eigen::VectorXd params_;
  std::uint64_t version_ = 0;
};

// Activations recorded by a forward pass; columns are batch samples.
struct Tape {
  const DenseNetwork* network = nullptr;
  std::uint64_t version = 0;
  std::vector<Eigen::MatrixXd> activations;  // [0] = input, [i + 1] = output of layer i
};

struct Gradients {
  Eigen::VectorXd params;  // same layout as DenseNetwork::params()
  Eigen::MatrixXd input;   // d objective / d input, one column per sample
};

Eigen::MatrixXd predict(const DenseNetwork& net, const Eigen::MatrixXd& inputs);
Eigen::VectorXd predict(const DenseNetwork& net, const Eigen::VectorXd& input);

Eigen::MatrixXd forward(const DenseNetwork& net, const Eigen::MatrixXd& inputs, Tape& tape);

// Reverse-mode pass for the objective whose gradient w.r.t. the network output is
// output_grad. Sample gradients are summed, so pass already-averaged output gradients.
Gradients backward(const DenseNetwork& net, const Tape& tape, const Eigen::MatrixXd& output_grad);

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step_count = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros(Eigen::Index size, double lr);
};

// Bias-corrected Adam update in place.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads,
               AdamState& state);
void adam_step(DenseNetwork& net, const Eigen::VectorXd& grads, AdamState& state);

// target <- (1 - tau) * target + tau * source
void soft_update(DenseNetwork& target, const DenseNetwork& source, double tau);

}  // namespace metaran
