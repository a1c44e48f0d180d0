#include "metaran/snapshot.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "metaran/errors.hpp"

namespace metaran {

namespace {

constexpr int kNetworkVersion = 1;
constexpr int kAdamVersion = 1;

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw FormatError(std::string("snapshot: could not read ") + what);
  return v;
}

}  // namespace

void write_double(std::ostream& out, double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.write(buf, end - buf);
}

double read_double(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw FormatError("snapshot: unexpected end of input");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw FormatError("snapshot: bad number '" + token + "'");
  return v;
}

void expect_token(std::istream& in, const char* token) {
  std::string got;
  if (!(in >> got) || got != token)
    throw FormatError(std::string("snapshot: expected '") + token + "', got '" + got + "'");
}

void write_network(std::ostream& out, const DenseNetwork& net) {
  out << "metaran-network " << kNetworkVersion << '\n';
  out << "activation " << (net.output_activation() == Activation::kTanh ? "tanh" : "identity") << '\n';
  out << "layers " << net.layer_sizes().size();
  for (int s : net.layer_sizes()) out << ' ' << s;
  out << "\nparams " << net.parameter_count() << '\n';
  for (double v : net.params()) {
    write_double(out, v);
    out << '\n';
  }
}

DenseNetwork read_network(std::istream& in) {
  expect_token(in, "metaran-network");
  if (read_value<int>(in, "network version") != kNetworkVersion)
    throw FormatError("snapshot: unsupported network version");
  expect_token(in, "activation");
  const auto act = read_value<std::string>(in, "activation");
  Activation activation;
  if (act == "tanh") activation = Activation::kTanh;
  else if (act == "identity") activation = Activation::kIdentity;
  else throw FormatError("snapshot: unknown activation '" + act + "'");
  expect_token(in, "layers");
  const auto count = read_value<std::size_t>(in, "layer count");
  if (count < 2 || count > 64) throw FormatError("snapshot: implausible layer count");
  std::vector<int> sizes(count);
  for (auto& s : sizes) s = read_value<int>(in, "layer size");
  DenseNetwork net;
  try {
    net = DenseNetwork(sizes, activation);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("snapshot: ") + e.what());
  }
  expect_token(in, "params");
  if (read_value<Eigen::Index>(in, "parameter count") != net.parameter_count())
    throw FormatError("snapshot: parameter count does not match layer sizes");
  Eigen::VectorXd flat(net.parameter_count());
  for (auto& v : flat) v = read_double(in);
  net.set_params(flat);
  return net;
}

void write_adam(std::ostream& out, const AdamState& state) {
  out << "metaran-adam " << kAdamVersion << '\n';
  out << "step " << state.step_count << '\n';
  out << "hyper ";
  for (double h : {state.lr, state.beta1, state.beta2, state.epsilon}) {
    write_double(out, h);
    out << ' ';
  }
  out << "\nmoments " << state.first_moment.size() << '\n';
  for (const auto* moment : {&state.first_moment, &state.second_moment}) {
    for (double v : *moment) {
      write_double(out, v);
      out << '\n';
    }
  }
}

AdamState read_adam(std::istream& in) {
  expect_token(in, "metaran-adam");
  if (read_value<int>(in, "adam version") != kAdamVersion)
    throw FormatError("snapshot: unsupported optimizer version");
  AdamState s;
  expect_token(in, "step");
  s.step_count = read_value<std::int64_t>(in, "step count");
  expect_token(in, "hyper");
  s.lr = read_double(in);
  s.beta1 = read_double(in);
  s.beta2 = read_double(in);
  s.epsilon = read_double(in);
  expect_token(in, "moments");
  const auto n = read_value<Eigen::Index>(in, "moment size");
  if (n < 0) throw FormatError("snapshot: negative moment size");
  s.first_moment.resize(n);
  s.second_moment.resize(n);
  for (auto& v : s.first_moment) v = read_double(in);
  for (auto& v : s.second_moment) v = read_double(in);
  return s;
}

void save_network(const std::filesystem::path& path, const DenseNetwork& net) {
  std::ofstream out(path);
  if (!out) throw FormatError("snapshot: cannot write " + path.string());
  write_network(out, net);
}

DenseNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("snapshot: cannot read " + path.string());
  return read_network(in);
}

}  // namespace metaran
