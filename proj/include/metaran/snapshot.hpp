#pragma once

#include <filesystem>
#include <iosfwd>

#include "metaran/dense.hpp"

// Plain-text parameter snapshots. A network block looks like
//
//   metaran-network 1
//   activation tanh
//   layers 3 5 300 2
//   params <count>
//   <one value per line, shortest round-trip decimal>
//
// and an optimizer block like
//
//   metaran-adam 1
//   step <n>
//   hyper <lr> <beta1> <beta2> <epsilon>
//   moments <count>
//   <first moment values>
//   <second moment values>
//
// Blocks are self-delimiting so checkpoints concatenate them.
namespace metaran {

void write_network(std::ostream& out, const DenseNetwork& net);
DenseNetwork read_network(std::istream& in);

void write_adam(std::ostream& out, const AdamState& state);
AdamState read_adam(std::istream& in);

void save_network(const std::filesystem::path& path, const DenseNetwork& net);
DenseNetwork load_network(const std::filesystem::path& path);

// Helpers shared by the checkpoint writers.
void write_double(std::ostream& out, double value);
double read_double(std::istream& in);
void expect_token(std::istream& in, const char* token);

}  // namespace metaran
