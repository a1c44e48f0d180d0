#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metaran/mdp.hpp"

namespace metaran {

struct EpisodeMetric {
  std::string method;
  int task_id = 0;
  std::uint64_t seed = 0;
  int episode = 0;
  double episode_return = 0.0;
  QosStats qos;
};

struct PhaseTiming {
  std::string phase;
  std::uint64_t seed = 0;
  double seconds = 0.0;
};

// Append-only record of everything an experiment measured.
struct MetricsLog {
  std::vector<EpisodeMetric> records;
  std::vector<PhaseTiming> timings;

  void append(EpisodeMetric m) { records.push_back(std::move(m)); }
  std::vector<std::string> methods() const;  // sorted, unique
  std::vector<std::uint64_t> seeds(const std::string& method) const;
  // Records of one (method, seed) run ordered by episode.
  std::vector<EpisodeMetric> run(const std::string& method, std::uint64_t seed) const;
};

// One CSV per (method, task, seed): <method>_task<id>_seed<seed>.csv with columns
// episode,return,q_avg,q_min,q_max.
std::filesystem::path run_csv_path(const std::filesystem::path& dir, const std::string& method,
                                   int task_id, std::uint64_t seed);
void write_run_csv(const std::filesystem::path& dir, std::span<const EpisodeMetric> run);
// Loads every run CSV in dir; other files are ignored.
MetricsLog read_metrics_dir(const std::filesystem::path& dir);

// Shortest decimal that round-trips.
std::string format_number(double v);

// Empirical CDF: distinct sorted values x with F(x) = #{samples <= x} / n.
std::vector<std::pair<double, double>> compute_cdf(std::span<const double> samples);
double cdf_at(const std::vector<std::pair<double, double>>& cdf, double x);

struct FiveNumber {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};
// Quartiles by linear interpolation between order statistics.
FiveNumber five_number_summary(std::span<const double> samples);

double relative_gain(double method_return, double baseline_return);

struct MethodSummary {
  std::string method;
  int num_seeds = 0;
  double mean_final_return = 0.0;
  double std_final_return = 0.0;
  bool single_seed = false;     // std reported as 0
  FiveNumber min_qos;           // over every recorded episode's q_min
  std::vector<double> curve;    // mean return per shot across seeds
};

struct SummaryReport {
  std::vector<MethodSummary> methods;
  std::optional<double> gain;   // meta over best baseline
  std::string best_baseline;
  int final_window = 0;
  std::vector<std::string> warnings;
};

// Final return of a run = mean of its last `final_window` episode returns.
SummaryReport summarize(const MetricsLog& log, int final_window);
std::string format_summary(const SummaryReport& report);

// CDFs of q_avg / q_min / q_max per method: cdf_<metric>_<method>.csv (value,probability).
void write_qos_cdfs(const std::filesystem::path& dir, const MetricsLog& log);

}  // namespace metaran
