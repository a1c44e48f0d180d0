#include "metaran/cell.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metaran/allocation.hpp"
#include "metaran/errors.hpp"

namespace metaran {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("cell." + field + ": " + what);
}

constexpr double kMinDistanceM = 1.0;

}  // namespace

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

void CellConfig::validate() const {
  require(num_rbs > 0, "num_rbs", "must be positive");
  require(num_ues > 0, "num_ues", "must be positive");
  require(rb_bandwidth_hz > 0, "rb_bandwidth_hz", "must be positive");
  require(p_min_mw > 0, "p_min", "must be positive");
  require(p_min_mw <= p_max_mw, "p_min", "must not exceed p_max");
  require(path_loss_exponent > 0, "path_loss_exponent", "must be positive");
  require(cell_radius_m > 0, "cell_radius_m", "must be positive");
  require(num_neighbors >= 0, "num_neighbors", "must be nonnegative");
  require(neighbor_distance_m > 0, "neighbor_distance_m", "must be positive");
  require(neighbor_occupancy >= 0 && neighbor_occupancy <= 1, "neighbor_occupancy",
          "must lie in [0, 1]");
  require(speed_min_mps >= 0 && speed_min_mps <= speed_max_mps, "speed_min_mps",
          "must satisfy 0 <= speed_min <= speed_max");
  require(traffic_switch_prob >= 0 && traffic_switch_prob <= 1, "traffic_switch_prob",
          "must lie in [0, 1]");
  require(std::isfinite(noise_psd_dbm_hz), "noise_psd_dbm_hz", "must be finite");
}

double CellConfig::noise_per_rb_mw() const {
  return dbm_to_mw(noise_psd_dbm_hz + 10.0 * std::log10(rb_bandwidth_hz));
}

double norm(const Position& p) { return std::hypot(p.x, p.y); }

int EnvSnapshot::num_active() const {
  return static_cast<int>(std::count_if(traffic_levels.begin(), traffic_levels.end(),
                                        [](TrafficLevel l) { return l != TrafficLevel::kIdle; }));
}

std::vector<Position> neighbor_positions(const CellConfig& config) {
  std::vector<Position> out;
  out.reserve(config.num_neighbors);
  for (int n = 0; n < config.num_neighbors; ++n) {
    const double angle = 2.0 * std::numbers::pi * n / config.num_neighbors;
    out.push_back({config.neighbor_distance_m * std::cos(angle),
                   config.neighbor_distance_m * std::sin(angle)});
  }
  return out;
}

namespace {

double draw_heading(Rng& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(kHeadings.size()) - 1);
  return kHeadings[pick(rng)];
}

}  // namespace

EnvSnapshot reset_snapshot(const CellConfig& config, Rng& rng) {
  config.validate();
  const int n = config.num_ues;
  EnvSnapshot s;
  s.ue_positions.reserve(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> speed(config.speed_min_mps, config.speed_max_mps);
  std::uniform_int_distribution<int> level(0, kNumTrafficLevels - 1);
  for (int u = 0; u < n; ++u) {
    const double r = config.cell_radius_m * std::sqrt(unit(rng));
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    s.ue_positions.push_back({r * std::cos(phi), r * std::sin(phi)});
    s.ue_speeds.push_back(speed(rng));
    s.ue_directions.push_back(draw_heading(rng));
    s.ue_axis.push_back(unit(rng) < 0.5 ? -1 : 1);
    s.traffic_levels.push_back(static_cast<TrafficLevel>(level(rng)));
  }
  return s;
}

EnvSnapshot reset_snapshot(const CellConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  return reset_snapshot(config, rng);
}

EnvSnapshot step_mobility(EnvSnapshot s, const CellConfig& config, double dt, Rng& rng) {
  if (!(dt > 0)) throw ContractViolation("step_mobility: dt must be positive");
  const double radius = config.cell_radius_m;
  std::uniform_real_distribution<double> speed(config.speed_min_mps, config.speed_max_mps);

  for (int u = 0; u < s.num_ues(); ++u) {
    Position p = s.ue_positions[u];
    double dx = s.ue_axis[u] * std::cos(s.ue_directions[u]) * s.ue_speeds[u] * dt;
    double dy = std::sin(s.ue_directions[u]) * s.ue_speeds[u] * dt;
    bool reflected = false;
    // Bounded number of bounces; anything left over is clamped onto the edge.
    for (int bounce = 0; bounce < 8; ++bounce) {
      const double ex = p.x + dx;
      const double ey = p.y + dy;
      if (ex * ex + ey * ey <= radius * radius) {
        p = {ex, ey};
        dx = dy = 0.0;
        break;
      }
      reflected = true;
      // Solve |p + t d| = R for the exit point t in (0, 1].
      const double a = dx * dx + dy * dy;
      const double b = 2.0 * (p.x * dx + p.y * dy);
      const double c = std::min(0.0, p.x * p.x + p.y * p.y - radius * radius);
      const double t = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
      const Position hit{p.x + t * dx, p.y + t * dy};
      const double hn = norm(hit);
      const double nx = hn > 0 ? hit.x / hn : 1.0;
      const double ny = hn > 0 ? hit.y / hn : 0.0;
      double rx = (1.0 - t) * dx;
      double ry = (1.0 - t) * dy;
      const double along = rx * nx + ry * ny;
      rx -= 2.0 * along * nx;
      ry -= 2.0 * along * ny;
      // Reflect the full velocity too so the travel axis follows the bounce.
      const double vdot = dx * nx + dy * ny;
      const double vx = dx - 2.0 * vdot * nx;
      if (vx != 0.0) s.ue_axis[u] = vx > 0 ? 1 : -1;
      p = hit;
      dx = rx;
      dy = ry;
    }
    if (dx != 0.0 || dy != 0.0) {
      p = {p.x + dx, p.y + dy};
    }
    const double r = norm(p);
    if (r > radius) {
      p.x *= radius / r;
      p.y *= radius / r;
    }
    s.ue_positions[u] = p;
    if (reflected) {
      s.ue_directions[u] = draw_heading(rng);
      s.ue_speeds[u] = speed(rng);
    }
  }
  ++s.time_index;
  return s;
}

EnvSnapshot step_traffic(EnvSnapshot s, double switch_prob, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> offset(1, kNumTrafficLevels - 1);
  for (auto& level : s.traffic_levels) {
    if (unit(rng) < switch_prob) {
      const int next = (static_cast<int>(level) + offset(rng)) % kNumTrafficLevels;
      level = static_cast<TrafficLevel>(next);
    }
  }
  return s;
}

ChannelRealization sample_channel(const EnvSnapshot& s, const CellConfig& config, Rng& rng) {
  const int n = s.num_ues();
  const int k = config.num_rbs;
  std::exponential_distribution<double> rayleigh_power(1.0);
  std::bernoulli_distribution occupied(config.neighbor_occupancy);
  std::uniform_real_distribution<double> power(config.p_min_mw, config.p_max_mw);

  ChannelRealization ch;
  ch.gain.resize(n, k);
  for (int j = 0; j < k; ++j)
    for (int u = 0; u < n; ++u) ch.gain(u, j) = rayleigh_power(rng);

  ch.neighbor_power = Eigen::MatrixXd::Zero(config.num_neighbors, k);
  ch.neighbor_gain.reserve(config.num_neighbors);
  for (int m = 0; m < config.num_neighbors; ++m) {
    Eigen::MatrixXd g(n, k);
    for (int j = 0; j < k; ++j)
      for (int u = 0; u < n; ++u) g(u, j) = rayleigh_power(rng);
    ch.neighbor_gain.push_back(std::move(g));
    for (int j = 0; j < k; ++j) {
      if (occupied(rng)) ch.neighbor_power(m, j) = power(rng);
    }
  }
  return ch;
}

namespace {

void check_allocation(const AllocationAction& alloc, const ChannelRealization& ch,
                      const EnvSnapshot& s, const CellConfig& config) {
  const int n = s.num_ues();
  const int k = config.num_rbs;
  auto fail = [](const std::string& what) { throw ContractViolation("compute_rates: " + what); };
  if (alloc.rb_indicator.rows() != n || alloc.rb_indicator.cols() != k)
    fail("rb_indicator must be num_ues x num_rbs");
  if (alloc.per_rb_power.size() != k) fail("per_rb_power must have num_rbs entries");
  if (ch.gain.rows() != n || ch.gain.cols() != k) fail("channel gain shape mismatch");
  if (static_cast<int>(ch.neighbor_gain.size()) != config.num_neighbors ||
      ch.neighbor_power.rows() != config.num_neighbors || ch.neighbor_power.cols() != k)
    fail("neighbor channel shape mismatch");

  const double tol = 1e-12 * config.p_max_mw;
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    double owners = 0.0;
    for (int u = 0; u < n; ++u) {
      const double e = alloc.rb_indicator(u, j);
      if (e != 0.0 && e != 1.0) fail("rb_indicator entries must be 0 or 1");
      owners += e;
    }
    if (owners > 1.0) fail("RB " + std::to_string(j) + " assigned to more than one UE");
    total += owners;
    const double p = alloc.per_rb_power(j);
    if (owners == 1.0) {
      if (p < config.p_min_mw - tol || p > config.p_max_mw + tol)
        fail("power on RB " + std::to_string(j) + " outside [p_min, p_max]");
    } else if (p != 0.0) {
      fail("unassigned RB " + std::to_string(j) + " carries power");
    }
  }
  if (total > k) fail("more RBs assigned than available");
}

}  // namespace

RateReport compute_rates(const AllocationAction& alloc, const ChannelRealization& ch,
                         const EnvSnapshot& s, const CellConfig& config) {
  check_allocation(alloc, ch, s, config);
  const int n = s.num_ues();
  const double eta = config.path_loss_exponent;

  Eigen::VectorXd path_gain(n);
  for (int u = 0; u < n; ++u)
    path_gain(u) = std::pow(std::max(kMinDistanceM, norm(s.ue_positions[u])), -eta);

  const auto neighbors = neighbor_positions(config);
  Eigen::MatrixXd interference = Eigen::MatrixXd::Zero(n, config.num_rbs);
  for (int m = 0; m < config.num_neighbors; ++m) {
    Eigen::VectorXd neighbor_path(n);
    for (int u = 0; u < n; ++u) {
      const Position rel{s.ue_positions[u].x - neighbors[m].x,
                         s.ue_positions[u].y - neighbors[m].y};
      neighbor_path(u) = std::pow(std::max(kMinDistanceM, norm(rel)), -eta);
    }
    interference.array() += (ch.neighbor_gain[m].array().colwise() * neighbor_path.array())
                                .rowwise() *
                            ch.neighbor_power.row(m).array();
  }

  const Eigen::ArrayXXd signal =
      (ch.gain.array().colwise() * path_gain.array()).rowwise() *
      alloc.per_rb_power.transpose().array();

  RateReport report;
  report.sinr = (signal / (interference.array() + config.noise_per_rb_mw())).matrix();
  report.interference = std::move(interference);
  report.per_ue_rate = config.rb_bandwidth_hz *
                       (alloc.rb_indicator.array() * (1.0 + report.sinr.array()).log2())
                           .rowwise()
                           .sum()
                           .matrix();

  report.active.resize(n);
  bool any = false;
  double lowest = 0.0;
  for (int u = 0; u < n; ++u) {
    report.active[u] = s.is_active(u);
    if (!report.active[u]) continue;
    lowest = any ? std::min(lowest, report.per_ue_rate(u)) : report.per_ue_rate(u);
    any = true;
  }
  report.min_rate = lowest;
  return report;
}

}  // namespace metaran
