#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "metaran/allocation.hpp"
#include "metaran/cell.hpp"
#include "metaran/errors.hpp"
#include "metaran/mdp.hpp"
#include "oracles.hpp"

using namespace metaran;

namespace {

CellConfig small_cell(int ues, int rbs, int neighbors) {
  CellConfig c;
  c.num_ues = ues;
  c.num_rbs = rbs;
  c.num_neighbors = neighbors;
  return c;
}

bool inside(const EnvSnapshot& s, double radius) {
  return std::all_of(s.ue_positions.begin(), s.ue_positions.end(),
                     [&](const Position& p) { return norm(p) <= radius * (1 + 1e-12); });
}

// Random feasible allocation: each RB owned by a random UE or nobody.
AllocationAction random_allocation(const CellConfig& c, Rng& rng) {
  AllocationAction a = AllocationAction::empty(c);
  std::uniform_int_distribution<int> owner(-1, c.num_ues - 1);
  std::uniform_real_distribution<double> power(c.p_min_mw, c.p_max_mw);
  for (int k = 0; k < c.num_rbs; ++k) {
    const int u = owner(rng);
    if (u < 0) continue;
    a.rb_indicator(u, k) = 1.0;
    a.per_rb_power(k) = power(rng);
  }
  return a;
}

EnvSnapshot all_active(EnvSnapshot s) {
  for (auto& l : s.traffic_levels) l = TrafficLevel::kMid;
  return s;
}

}  // namespace

TEST_CASE("reset places every UE inside the cell and is seed-deterministic") {
  const CellConfig c = small_cell(30, 60, 2);
  const EnvSnapshot a = reset_snapshot(c, 7);
  CHECK(a.num_ues() == 30);
  CHECK(inside(a, c.cell_radius_m));
  for (int u = 0; u < a.num_ues(); ++u) {
    CHECK(a.ue_speeds[u] >= 10.0);
    CHECK(a.ue_speeds[u] <= 20.0);
    CHECK(std::find(kHeadings.begin(), kHeadings.end(), a.ue_directions[u]) != kHeadings.end());
  }
  CHECK(reset_snapshot(c, 7) == a);
  CHECK(reset_snapshot(c, 8).ue_positions != a.ue_positions);
}

TEST_CASE("degenerate cell configurations are rejected") {
  CellConfig c;
  c.cell_radius_m = 0;
  CHECK_THROWS_AS(reset_snapshot(c, 1), ConfigError);
  c = CellConfig{};
  c.num_ues = 0;
  CHECK_THROWS_AS(reset_snapshot(c, 1), ConfigError);
  c = CellConfig{};
  c.num_rbs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = CellConfig{};
  c.p_min_mw = 5.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = CellConfig{};
  c.neighbor_occupancy = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("mobility moves in a straight line away from the edge") {
  const CellConfig c = small_cell(1, 4, 0);
  Rng rng(1);
  EnvSnapshot s = reset_snapshot(c, rng);
  s.ue_positions[0] = {0.0, 0.0};
  s.ue_directions[0] = 0.0;
  s.ue_axis[0] = 1;
  s.ue_speeds[0] = 10.0;
  const EnvSnapshot next = step_mobility(s, c, 1.0, rng);
  CHECK(next.ue_positions[0].x == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(next.ue_positions[0].y == doctest::Approx(0.0));
  CHECK(next.ue_speeds[0] == 10.0);
  CHECK(next.time_index == s.time_index + 1);
  CHECK_THROWS_AS(step_mobility(s, c, 0.0, rng), ContractViolation);
}

TEST_CASE("a UE leaving the disc is reflected back inside") {
  const CellConfig c = small_cell(1, 4, 0);
  Rng rng(3);
  EnvSnapshot s = reset_snapshot(c, rng);
  s.ue_positions[0] = {c.cell_radius_m - 1.0, 0.0};
  s.ue_directions[0] = 0.0;
  s.ue_axis[0] = 1;
  s.ue_speeds[0] = 20.0;
  const EnvSnapshot next = step_mobility(s, c, 1.0, rng);
  CHECK(norm(next.ue_positions[0]) <= c.cell_radius_m);
  // Specular bounce off the x-axis edge: 1 m out, 19 m back.
  CHECK(next.ue_positions[0].x == doctest::Approx(c.cell_radius_m - 19.0).epsilon(1e-9));
  CHECK(next.ue_axis[0] == -1);
  CHECK(std::find(kHeadings.begin(), kHeadings.end(), next.ue_directions[0]) != kHeadings.end());
}

TEST_CASE("long rollouts never leave the cell") {
  const CellConfig c = small_cell(20, 4, 0);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    Rng rng(seed);
    EnvSnapshot s = reset_snapshot(c, rng);
    for (int t = 0; t < 1000; ++t) {
      s = step_mobility(std::move(s), c, 1.0, rng);
      REQUIRE(inside(s, c.cell_radius_m));
    }
  }
}

TEST_CASE("equal seeds give bitwise-equal trajectories") {
  const CellConfig c = small_cell(10, 8, 2);
  Rng a(11), b(11);
  EnvSnapshot sa = reset_snapshot(c, a), sb = reset_snapshot(c, b);
  for (int t = 0; t < 200; ++t) {
    sa = step_traffic(step_mobility(std::move(sa), c, 1.0, a), 0.01, a);
    sb = step_traffic(step_mobility(std::move(sb), c, 1.0, b), 0.01, b);
  }
  CHECK(sa == sb);
}

TEST_CASE("traffic switching") {
  const CellConfig c = small_cell(100, 4, 0);
  Rng rng(5);
  EnvSnapshot s = reset_snapshot(c, rng);

  SUBCASE("zero probability never switches") {
    EnvSnapshot next = step_traffic(s, 0.0, rng);
    CHECK(next.traffic_levels == s.traffic_levels);
  }

  SUBCASE("empirical switch rate matches 0.01") {
    long switches = 0;
    long trials = 0;
    for (int t = 0; t < 10000; ++t) {
      EnvSnapshot next = step_traffic(s, 0.01, rng);
      for (int u = 0; u < s.num_ues(); ++u) {
        ++trials;
        if (next.traffic_levels[u] != s.traffic_levels[u]) ++switches;
      }
      s = std::move(next);
    }
    CHECK(trials == 1000000);
    CHECK(static_cast<double>(switches) / trials == doctest::Approx(0.01).epsilon(0.1));
  }

  SUBCASE("probability one always changes the level") {
    EnvSnapshot next = step_traffic(s, 1.0, rng);
    for (int u = 0; u < s.num_ues(); ++u) CHECK(next.traffic_levels[u] != s.traffic_levels[u]);
  }
}

TEST_CASE("channel draws are unit-mean exponential and nonnegative") {
  CellConfig c = small_cell(100, 100, 0);
  Rng rng(9);
  const EnvSnapshot s = reset_snapshot(c, rng);
  double sum = 0.0;
  long count = 0;
  for (int i = 0; i < 100; ++i) {
    const ChannelRealization ch = sample_channel(s, c, rng);
    CHECK((ch.gain.array() >= 0.0).all());
    sum += ch.gain.sum();
    count += ch.gain.size();
  }
  CHECK(count == 1000000);
  CHECK(std::abs(sum / count - 1.0) < 0.01);
}

TEST_CASE("idle neighbors produce no interference") {
  CellConfig c = small_cell(3, 6, 2);
  c.neighbor_occupancy = 0.0;
  Rng rng(2);
  const EnvSnapshot s = all_active(reset_snapshot(c, rng));
  const ChannelRealization ch = sample_channel(s, c, rng);
  CHECK(ch.neighbor_power.isZero());
  const RateReport r = compute_rates(random_allocation(c, rng), ch, s, c);
  CHECK(r.interference.isZero());
}

TEST_CASE("occupied neighbor RBs carry power within [p_min, p_max]") {
  CellConfig c = small_cell(2, 200, 3);
  c.neighbor_occupancy = 1.0;
  Rng rng(4);
  const ChannelRealization ch = sample_channel(reset_snapshot(c, rng), c, rng);
  CHECK((ch.neighbor_power.array() >= c.p_min_mw).all());
  CHECK((ch.neighbor_power.array() <= c.p_max_mw).all());
}

TEST_CASE("per-RB noise follows the dBm/Hz conversion") {
  const CellConfig c;
  const double hand = std::pow(10.0, (-173.0 + 10.0 * std::log10(200000.0)) / 10.0);
  CHECK(c.noise_per_rb_mw() == doctest::Approx(hand).epsilon(1e-14));
  CHECK(c.noise_per_rb_mw() == doctest::Approx(1.002e-12).epsilon(1e-3));
  CHECK(c.p_max_mw == doctest::Approx(std::pow(10.0, 0.6)).epsilon(1e-14));
  CHECK(c.p_min_mw == doctest::Approx(std::pow(10.0, 0.3)).epsilon(1e-14));
}

TEST_CASE("empty allocation yields zero rates") {
  const CellConfig c = small_cell(4, 6, 2);
  Rng rng(1);
  const EnvSnapshot s = all_active(reset_snapshot(c, rng));
  const RateReport r = compute_rates(AllocationAction::empty(c), sample_channel(s, c, rng), s, c);
  CHECK(r.per_ue_rate.isZero());
  CHECK(r.min_rate == 0.0);
}

TEST_CASE("unit SINR on one RB gives B bits/s") {
  CellConfig c = small_cell(1, 1, 0);
  Rng rng(1);
  EnvSnapshot s = all_active(reset_snapshot(c, rng));
  s.ue_positions[0] = {100.0, 0.0};
  ChannelRealization ch = sample_channel(s, c, rng);
  AllocationAction a = AllocationAction::empty(c);
  a.rb_indicator(0, 0) = 1.0;
  a.per_rb_power(0) = c.p_min_mw;
  ch.gain(0, 0) = c.noise_per_rb_mw() / (c.p_min_mw * std::pow(100.0, -c.path_loss_exponent));
  const RateReport r = compute_rates(a, ch, s, c);
  CHECK(r.sinr(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.per_ue_rate(0) == doctest::Approx(200000.0).epsilon(1e-12));
  CHECK(r.min_rate == r.per_ue_rate(0));
}

TEST_CASE("rates match the scalar oracle on random small instances") {
  Rng rng(2024);
  std::uniform_int_distribution<int> ues(1, 5), rbs(1, 8), nbrs(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    CellConfig c = small_cell(ues(rng), rbs(rng), nbrs(rng));
    const EnvSnapshot s = reset_snapshot(c, rng);
    const ChannelRealization ch = sample_channel(s, c, rng);
    const AllocationAction a = random_allocation(c, rng);
    const RateReport r = compute_rates(a, ch, s, c);
    const auto expected = oracle::scalar_rates(a, ch, s, c);
    for (int u = 0; u < c.num_ues; ++u) {
      const double scale = std::max(1.0, std::abs(expected[u]));
      REQUIRE(std::abs(r.per_ue_rate(u) - expected[u]) / scale < 1e-9);
    }
  }
}

TEST_CASE("min rate only looks at active UEs") {
  const CellConfig c = small_cell(3, 3, 0);
  Rng rng(6);
  EnvSnapshot s = all_active(reset_snapshot(c, rng));
  s.traffic_levels[1] = TrafficLevel::kIdle;
  AllocationAction a = AllocationAction::empty(c);
  for (int u : {0, 2}) {
    a.rb_indicator(u, u) = 1.0;
    a.per_rb_power(u) = c.p_max_mw;
  }
  const RateReport r = compute_rates(a, sample_channel(s, c, rng), s, c);
  CHECK(r.per_ue_rate(1) == 0.0);
  CHECK(r.min_rate == std::min(r.per_ue_rate(0), r.per_ue_rate(2)));
  CHECK(r.min_rate > 0.0);
}

TEST_CASE("rates rise with own power and fall with interference") {
  CellConfig c = small_cell(4, 6, 2);
  c.neighbor_occupancy = 1.0;
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const EnvSnapshot s = all_active(reset_snapshot(c, rng));
    const ChannelRealization ch = sample_channel(s, c, rng);
    AllocationAction a = random_allocation(c, rng);
    for (int k = 0; k < c.num_rbs; ++k)
      if (a.per_rb_power(k) > 0) a.per_rb_power(k) = c.p_min_mw;
    const RateReport base = compute_rates(a, ch, s, c);

    AllocationAction louder = a;
    for (int k = 0; k < c.num_rbs; ++k)
      if (louder.per_rb_power(k) > 0) louder.per_rb_power(k) = c.p_max_mw;
    const RateReport up = compute_rates(louder, ch, s, c);

    ChannelRealization noisier = ch;
    noisier.neighbor_power *= 1.5;
    const RateReport down = compute_rates(a, noisier, s, c);
    for (int u = 0; u < c.num_ues; ++u) {
      CHECK(up.per_ue_rate(u) >= base.per_ue_rate(u));
      CHECK(down.per_ue_rate(u) <= base.per_ue_rate(u));
    }
  }
}

TEST_CASE("infeasible allocations violate the rate contract") {
  const CellConfig c = small_cell(2, 3, 1);
  Rng rng(8);
  const EnvSnapshot s = all_active(reset_snapshot(c, rng));
  const ChannelRealization ch = sample_channel(s, c, rng);

  AllocationAction shared = AllocationAction::empty(c);
  shared.rb_indicator(0, 0) = shared.rb_indicator(1, 0) = 1.0;
  shared.per_rb_power(0) = c.p_min_mw;
  CHECK_THROWS_AS(compute_rates(shared, ch, s, c), ContractViolation);

  AllocationAction hot = AllocationAction::empty(c);
  hot.rb_indicator(0, 1) = 1.0;
  hot.per_rb_power(1) = 2.0 * c.p_max_mw;
  CHECK_THROWS_AS(compute_rates(hot, ch, s, c), ContractViolation);

  AllocationAction stray = AllocationAction::empty(c);
  stray.per_rb_power(2) = c.p_min_mw;
  CHECK_THROWS_AS(compute_rates(stray, ch, s, c), ContractViolation);

  AllocationAction wrong = AllocationAction::empty(small_cell(2, 4, 1));
  CHECK_THROWS_AS(compute_rates(wrong, ch, s, c), ContractViolation);
}
