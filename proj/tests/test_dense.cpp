#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "metaran/dense.hpp"
#include "metaran/errors.hpp"
#include "metaran/snapshot.hpp"
#include "oracles.hpp"

using namespace metaran;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("parameter count follows the layer shapes") {
  const std::vector<int> sizes{5, 300, 400, 400, 2};
  const auto net = DenseNetwork::init(sizes, Activation::kTanh, 1);
  const Eigen::Index expected = 5 * 300 + 300 + 300 * 400 + 400 + 400 * 400 + 400 + 400 * 2 + 2;
  CHECK(net.parameter_count() == expected);
  CHECK(DenseNetwork::parameter_count(sizes) == expected);
}

TEST_CASE("initialization is seeded and fan-in scaled") {
  const auto a = DenseNetwork::init({4, 16, 3}, Activation::kTanh, 9);
  const auto b = DenseNetwork::init({4, 16, 3}, Activation::kTanh, 9);
  const auto c = DenseNetwork::init({4, 16, 3}, Activation::kTanh, 10);
  CHECK(a.params() == b.params());
  CHECK(a.params() != c.params());
  CHECK(a.weights(0).cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(4.0));
  CHECK(a.weights(1).cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(16.0));
  const Eigen::VectorXd y = predict(a, Eigen::VectorXd(Eigen::VectorXd::Zero(4)));
  CHECK((y.array().abs() < 1.0).all());
}

TEST_CASE("degenerate layer lists are rejected") {
  CHECK_THROWS_AS(DenseNetwork({}, Activation::kTanh), ConfigError);
  CHECK_THROWS_AS(DenseNetwork({3}, Activation::kTanh), ConfigError);
  CHECK_THROWS_AS(DenseNetwork({3, 0, 1}, Activation::kTanh), ConfigError);
}

TEST_CASE("forward pass") {
  SUBCASE("zero network outputs zero") {
    const DenseNetwork net({3, 5, 2}, Activation::kTanh);
    CHECK(predict(net, Eigen::VectorXd(Eigen::VectorXd::Ones(3))).isZero());
  }

  SUBCASE("1-1 linear net computes w*x") {
    DenseNetwork net({1, 1}, Activation::kIdentity);
    net.set_params(Eigen::Vector2d(2.5, 0.0));
    CHECK(predict(net, Eigen::VectorXd(Eigen::VectorXd::Constant(1, 3.0)))(0) == 7.5);
  }

  SUBCASE("matches the loop oracle on random nets") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> width(1, 7);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<int> sizes{width(rng), width(rng), width(rng), width(rng)};
      const auto act = trial % 2 ? Activation::kTanh : Activation::kIdentity;
      const auto net = DenseNetwork::init(sizes, act, trial);
      Eigen::VectorXd x(sizes[0]);
      for (auto& v : x) v = normal(rng);
      const Eigen::VectorXd y = predict(net, x);
      const auto expected = oracle::forward(net, to_std(x));
      for (int i = 0; i < y.size(); ++i) CHECK(std::abs(y(i) - expected[i]) < 1e-12);
    }
  }

  SUBCASE("batch columns are independent samples") {
    const auto net = DenseNetwork::init({3, 6, 2}, Activation::kIdentity, 2);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
    const Eigen::MatrixXd y = predict(net, x);
    for (int j = 0; j < 4; ++j) CHECK(y.col(j).isApprox(predict(net, Eigen::VectorXd(x.col(j)))));
  }

  SUBCASE("input size mismatch is a contract violation") {
    const auto net = DenseNetwork::init({3, 2}, Activation::kTanh, 1);
    CHECK_THROWS_AS(predict(net, Eigen::VectorXd(Eigen::VectorXd::Zero(4))), ContractViolation);
  }

  SUBCASE("forward leaves parameters untouched") {
    const auto net = DenseNetwork::init({3, 4, 2}, Activation::kTanh, 1);
    const Eigen::VectorXd before = net.params();
    Tape tape;
    forward(net, Eigen::MatrixXd::Ones(3, 2), tape);
    CHECK(net.params() == before);
  }
}

TEST_CASE("backward pass") {
  SUBCASE("zero output gradient gives zero gradients") {
    const auto net = DenseNetwork::init({3, 4, 2}, Activation::kTanh, 1);
    Tape tape;
    forward(net, Eigen::MatrixXd::Ones(3, 1), tape);
    const Gradients g = backward(net, tape, Eigen::MatrixXd::Zero(2, 1));
    CHECK(g.params.isZero());
    CHECK(g.input.isZero());
  }

  SUBCASE("closed form for tanh(w*x)") {
    DenseNetwork net({1, 1}, Activation::kTanh);
    const double w = 0.7, x = 1.3;
    net.set_params(Eigen::Vector2d(w, 0.0));
    Tape tape;
    forward(net, Eigen::MatrixXd::Constant(1, 1, x), tape);
    const Gradients g = backward(net, tape, Eigen::MatrixXd::Ones(1, 1));
    const double t = std::tanh(w * x);
    CHECK(g.params(0) == doctest::Approx(x * (1 - t * t)).epsilon(1e-14));
    CHECK(g.params(1) == doctest::Approx(1 - t * t).epsilon(1e-14));
    CHECK(g.input(0, 0) == doctest::Approx(w * (1 - t * t)).epsilon(1e-14));
  }

  SUBCASE("matches central finite differences") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> width(1, 6);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<int> sizes{width(rng), width(rng), width(rng), width(rng)};
      const auto act = trial % 2 ? Activation::kTanh : Activation::kIdentity;
      const auto net = DenseNetwork::init(sizes, act, 100 + trial);
      Eigen::VectorXd x(sizes.front()), dy(sizes.back());
      for (auto& v : x) v = normal(rng);
      for (auto& v : dy) v = normal(rng);
      Tape tape;
      forward(net, Eigen::MatrixXd(x), tape);
      const Gradients g = backward(net, tape, Eigen::MatrixXd(dy));
      const auto fd = oracle::finite_difference_check(net, to_std(x), to_std(dy), g.params,
                                                      Eigen::VectorXd(g.input.col(0)));
      CHECK(fd.max_param_error < 1e-4);
      CHECK(fd.max_input_error < 1e-4);
    }
  }

  SUBCASE("batch gradients are summed over samples") {
    const auto net = DenseNetwork::init({2, 3, 1}, Activation::kIdentity, 4);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 2);
    Tape both, first, second;
    forward(net, x, both);
    forward(net, Eigen::MatrixXd(x.col(0)), first);
    forward(net, Eigen::MatrixXd(x.col(1)), second);
    const auto g = backward(net, both, Eigen::MatrixXd::Ones(1, 2));
    const auto g0 = backward(net, first, Eigen::MatrixXd::Ones(1, 1));
    const auto g1 = backward(net, second, Eigen::MatrixXd::Ones(1, 1));
    CHECK(g.params.isApprox(g0.params + g1.params, 1e-14));
  }

  SUBCASE("a tape older than the parameters is rejected") {
    auto net = DenseNetwork::init({2, 2}, Activation::kTanh, 1);
    Tape tape;
    forward(net, Eigen::MatrixXd::Ones(2, 1), tape);
    net.mutable_params()(0) += 1.0;
    CHECK_THROWS_AS(backward(net, tape, Eigen::MatrixXd::Ones(2, 1)), ContractViolation);
    const auto other = DenseNetwork::init({2, 2}, Activation::kTanh, 1);
    CHECK_THROWS_AS(backward(other, tape, Eigen::MatrixXd::Ones(2, 1)), ContractViolation);
  }
}

TEST_CASE("Adam") {
  SUBCASE("first step from zero with unit gradient") {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
    AdamState s = AdamState::zeros(1, 1e-4);
    adam_step(theta, Eigen::VectorXd::Ones(1), s);
    const double hand = oracle::adam_scalar(0.0, 1.0, 1e-4, 0.9, 0.999, 1e-8, 0.0, 0.0, 1);
    CHECK(std::abs(theta(0) - hand) < 1e-12);
    CHECK(theta(0) == doctest::Approx(-9.99999994e-5).epsilon(1e-8));
    CHECK(s.step_count == 1);
  }

  SUBCASE("several steps track the scalar recurrence") {
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.3);
    AdamState s = AdamState::zeros(1, 1e-2);
    double t = 0.3, m = 0.0, v = 0.0;
    const double grads[] = {0.5, -1.5, 2.0, 0.1, -0.2};
    for (int i = 0; i < 5; ++i) {
      const double g = grads[i];
      adam_step(theta, Eigen::VectorXd::Constant(1, g), s);
      t = oracle::adam_scalar(t, g, 1e-2, 0.9, 0.999, 1e-8, m, v, i + 1);
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      CHECK(std::abs(theta(0) - t) < 1e-12);
    }
  }

  SUBCASE("zero gradient leaves parameters and decays moments") {
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(3, 0.5);
    AdamState s = AdamState::zeros(3, 1e-3);
    s.first_moment.setConstant(0.2);
    s.second_moment.setConstant(0.4);
    s.step_count = 0;
    adam_step(theta, Eigen::VectorXd::Zero(3), s);
    CHECK(s.first_moment(0) == doctest::Approx(0.18));
    CHECK(s.second_moment(0) == doctest::Approx(0.3996));
    // The stored moments move theta; a fresh state does not.
    Eigen::VectorXd fresh = Eigen::VectorXd::Constant(3, 0.5);
    AdamState z = AdamState::zeros(3, 1e-3);
    adam_step(fresh, Eigen::VectorXd::Zero(3), z);
    CHECK(fresh == Eigen::VectorXd::Constant(3, 0.5));
  }

  SUBCASE("two steps differ from one step at double lr") {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(1), b = Eigen::VectorXd::Zero(1);
    AdamState sa = AdamState::zeros(1, 1e-3), sb = AdamState::zeros(1, 2e-3);
    const Eigen::VectorXd g = Eigen::VectorXd::Constant(1, 0.7);
    adam_step(a, g, sa);
    adam_step(a, g, sa);
    adam_step(b, g, sb);
    CHECK(a(0) != b(0));
  }

  SUBCASE("zero betas reduce to sign descent") {
    for (double g : {3.0, -0.25, 1e-3}) {
      Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 1.0);
      AdamState s = AdamState::zeros(1, 0.01);
      s.beta1 = s.beta2 = 0.0;
      s.epsilon = 1e-14;
      adam_step(theta, Eigen::VectorXd::Constant(1, g), s);
      CHECK(std::abs(theta(0) - (1.0 - 0.01 * g / std::abs(g))) < 1e-9);
    }
  }

  SUBCASE("shape mismatch is a contract violation") {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
    AdamState s = AdamState::zeros(2, 1e-3);
    CHECK_THROWS_AS(adam_step(theta, Eigen::VectorXd::Zero(3), s), ContractViolation);
  }
}

TEST_CASE("soft update") {
  DenseNetwork target({1, 1}, Activation::kIdentity);
  DenseNetwork source({1, 1}, Activation::kIdentity);
  source.set_params(Eigen::Vector2d(2.0, 2.0));

  SUBCASE("tau 0.5 averages") {
    soft_update(target, source, 0.5);
    CHECK(target.params() == Eigen::Vector2d(1.0, 1.0));
  }
  SUBCASE("tau 1 copies") {
    soft_update(target, source, 1.0);
    CHECK(target.params() == source.params());
  }
  SUBCASE("tau 0 is a no-op") {
    soft_update(target, source, 0.0);
    CHECK(target.params().isZero());
  }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(soft_update(target, source, 1.5), ContractViolation);
    DenseNetwork wider({1, 2}, Activation::kIdentity);
    CHECK_THROWS_AS(soft_update(target, wider, 0.5), ContractViolation);
  }
}

TEST_CASE("flat parameter round trips") {
  auto net = DenseNetwork::init({3, 5, 2}, Activation::kTanh, 8);
  const Eigen::VectorXd flat = net.params();
  CHECK(flat.size() == DenseNetwork::parameter_count(std::vector<int>{3, 5, 2}));
  DenseNetwork copy({3, 5, 2}, Activation::kTanh);
  copy.set_params(flat);
  CHECK(copy.params() == flat);
  copy.set_params(Eigen::VectorXd::Zero(flat.size()));
  CHECK(predict(copy, Eigen::VectorXd(Eigen::VectorXd::Ones(3))).isZero());
  CHECK(copy.weights(0).isZero());
  CHECK_THROWS_AS(copy.set_params(Eigen::VectorXd::Zero(flat.size() + 1)), ContractViolation);

  // Canonical order: first weight column-major, then bias.
  CHECK(net.weights(0)(1, 0) == flat(1));
  CHECK(net.weights(0)(0, 1) == flat(5));
  CHECK(net.bias(0)(0) == flat(15));
}

TEST_CASE("network snapshots are lossless and versioned") {
  const auto net = DenseNetwork::init({4, 7, 3}, Activation::kTanh, 21);
  std::stringstream ss;
  write_network(ss, net);
  const DenseNetwork back = read_network(ss);
  CHECK(back.params() == net.params());
  CHECK(back.layer_sizes() == net.layer_sizes());
  CHECK(back.output_activation() == Activation::kTanh);

  AdamState s = AdamState::zeros(4, 3e-4);
  s.first_moment << 0.1, -0.2, 1.0 / 3.0, 1e-300;
  s.second_moment << 1, 2, 3, 4;
  s.step_count = 42;
  std::stringstream as;
  write_adam(as, s);
  const AdamState sb = read_adam(as);
  CHECK(sb.first_moment == s.first_moment);
  CHECK(sb.second_moment == s.second_moment);
  CHECK(sb.step_count == 42);
  CHECK(sb.lr == 3e-4);

  std::stringstream wrong("metaran-network 2\n");
  CHECK_THROWS_AS(read_network(wrong), FormatError);

  const auto path = std::filesystem::temp_directory_path() / "metaran_test_net.txt";
  save_network(path, net);
  CHECK(load_network(path).params() == net.params());
  std::filesystem::remove(path);
}
