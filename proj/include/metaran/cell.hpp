#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "metaran/rng.hpp"

namespace metaran {

struct AllocationAction;

double dbm_to_mw(double dbm);

// Static parameters of one DU/RU cell. Powers are per RB.
struct CellConfig {
  int num_rbs = 60;
  int num_ues = 30;
  double rb_bandwidth_hz = 200e3;
  double p_min_mw = 1.9952623149688795;  // 3 dBm
  double p_max_mw = 3.9810717055349722;  // 6 dBm
  double path_loss_exponent = 3.0;
  double noise_psd_dbm_hz = -173.0;
  double cell_radius_m = 500.0;
  int num_neighbors = 2;
  double neighbor_distance_m = 1000.0;
  double neighbor_occupancy = 0.5;
  double subcarrier_spacing_hz = 15e3;
  double speed_min_mps = 10.0;
  double speed_max_mps = 20.0;
  double traffic_switch_prob = 0.01;

  // Throws ConfigError naming the offending field.
  void validate() const;

  // Thermal noise integrated over one RB, in mW.
  double noise_per_rb_mw() const;
};

enum class TrafficLevel : std::uint8_t { kIdle = 0, kLow = 1, kMid = 2, kHigh = 3 };
inline constexpr int kNumTrafficLevels = 4;

// Allowed UE headings, measured from the UE's travel axis.
inline constexpr std::array<double, 7> kHeadings = {
    0.0,
    std::numbers::pi / 12, -std::numbers::pi / 12,
    std::numbers::pi / 6,  -std::numbers::pi / 6,
    std::numbers::pi / 3,  -std::numbers::pi / 3,
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Position&) const = default;
};

double norm(const Position& p);

// Dynamic world state of one cell.
//
// A UE moves along (axis * cos(direction), sin(direction)) where direction is one
// of kHeadings and axis is +1 or -1. Reflection at the cell edge may flip the axis.
struct EnvSnapshot {
  std::vector<Position> ue_positions;
  std::vector<double> ue_speeds;
  std::vector<double> ue_directions;
  std::vector<int> ue_axis;
  std::vector<TrafficLevel> traffic_levels;
  std::int64_t time_index = 0;

  int num_ues() const { return static_cast<int>(ue_positions.size()); }
  bool is_active(int u) const { return traffic_levels[u] != TrafficLevel::kIdle; }
  int num_active() const;

  bool operator==(const EnvSnapshot&) const = default;
};

// Per-step fading draw plus background activity of the interfering RUs.
struct ChannelRealization {
  Eigen::MatrixXd gain;                      // N x K, |h_{u,k}|^2
  std::vector<Eigen::MatrixXd> neighbor_gain;  // per neighbor, N x K
  Eigen::MatrixXd neighbor_power;            // num_neighbors x K, mW (0 when RB idle)
};

struct RateReport {
  Eigen::VectorXd per_ue_rate;   // bits/s
  double min_rate = 0.0;         // over active UEs, 0 when none are active
  Eigen::MatrixXd interference;  // N x K, mW
  Eigen::MatrixXd sinr;          // N x K
  std::vector<bool> active;
};

// Interfering RUs sit on a ring of radius neighbor_distance_m, evenly spaced.
std::vector<Position> neighbor_positions(const CellConfig& config);

EnvSnapshot reset_snapshot(const CellConfig& config, Rng& rng);
EnvSnapshot reset_snapshot(const CellConfig& config, std::uint64_t seed);

// Advances every UE by speed*dt, reflecting specularly off the cell edge. Heading
// and speed are redrawn only for UEs that hit the edge.
EnvSnapshot step_mobility(EnvSnapshot s, const CellConfig& config, double dt, Rng& rng);

// Each UE independently jumps to a uniformly chosen *other* level with
// probability switch_prob.
EnvSnapshot step_traffic(EnvSnapshot s, double switch_prob, Rng& rng);

ChannelRealization sample_channel(const EnvSnapshot& s, const CellConfig& config, Rng& rng);

// Achievable per-UE rate with log2 capacity per assigned RB. The allocation must be
// physically feasible; violations raise ContractViolation.
RateReport compute_rates(const AllocationAction& alloc, const ChannelRealization& ch,
                         const EnvSnapshot& s, const CellConfig& config);

}  // namespace metaran
