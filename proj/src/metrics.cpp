#include "metaran/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "metaran/errors.hpp"

namespace metaran {

std::vector<std::string> MetricsLog::methods() const {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.method);
  return {s.begin(), s.end()};
}

std::vector<std::uint64_t> MetricsLog::seeds(const std::string& method) const {
  std::set<std::uint64_t> s;
  for (const auto& r : records)
    if (r.method == method) s.insert(r.seed);
  return {s.begin(), s.end()};
}

std::vector<EpisodeMetric> MetricsLog::run(const std::string& method, std::uint64_t seed) const {
  std::vector<EpisodeMetric> out;
  for (const auto& r : records)
    if (r.method == method && r.seed == seed) out.push_back(r);
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.episode < b.episode; });
  return out;
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::filesystem::path run_csv_path(const std::filesystem::path& dir, const std::string& method,
                                   int task_id, std::uint64_t seed) {
  return dir / (method + "_task" + std::to_string(task_id) + "_seed" + std::to_string(seed) + ".csv");
}

void write_run_csv(const std::filesystem::path& dir, std::span<const EpisodeMetric> run) {
  if (run.empty()) return;
  std::filesystem::create_directories(dir);
  const auto& first = run.front();
  const auto path = run_csv_path(dir, first.method, first.task_id, first.seed);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("metrics: cannot write " + path.string());
  out << "episode,return,q_avg,q_min,q_max\n";
  for (const auto& r : run) {
    out << r.episode << ',' << format_number(r.episode_return) << ',' << format_number(r.qos.avg)
        << ',' << format_number(r.qos.min) << ',' << format_number(r.qos.max) << '\n';
  }
}

namespace {

double parse_field(const std::string& s, const std::filesystem::path& path) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("metrics: bad number '" + s + "' in " + path.string());
  return v;
}

}  // namespace

MetricsLog read_metrics_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw FormatError("metrics: no directory " + dir.string());
  static const std::regex name_re(R"(([A-Za-z0-9]+)_task(\d+)_seed(\d+)\.csv)");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  MetricsLog log;
  for (const auto& path : files) {
    std::smatch m;
    const std::string name = path.filename().string();
    if (!std::regex_match(name, m, name_re)) continue;
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line) || line != "episode,return,q_avg,q_min,q_max")
      throw FormatError("metrics: unexpected header in " + path.string());
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string f;
      while (std::getline(ss, f, ',')) fields.push_back(f);
      if (fields.size() != 5) throw FormatError("metrics: expected 5 columns in " + path.string());
      EpisodeMetric r;
      r.method = m[1];
      r.task_id = std::stoi(m[2]);
      r.seed = std::stoull(m[3]);
      r.episode = static_cast<int>(parse_field(fields[0], path));
      r.episode_return = parse_field(fields[1], path);
      r.qos = {parse_field(fields[2], path), parse_field(fields[3], path), parse_field(fields[4], path)};
      log.append(std::move(r));
    }
  }
  return log;
}

std::vector<std::pair<double, double>> compute_cdf(std::span<const double> samples) {
  if (samples.empty()) throw ContractViolation("compute_cdf: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> cdf;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return cdf;
}

double cdf_at(const std::vector<std::pair<double, double>>& cdf, double x) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), x,
                             [](double v, const auto& point) { return v < point.first; });
  return it == cdf.begin() ? 0.0 : std::prev(it)->second;
}

FiveNumber five_number_summary(std::span<const double> samples) {
  if (samples.empty()) throw ContractViolation("five_number_summary: no samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  auto quantile = [&](double p) {
    const double pos = p * (s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - lo) * (s[hi] - s[lo]);
  };
  return {s.front(), quantile(0.25), quantile(0.5), quantile(0.75), s.back()};
}

double relative_gain(double method_return, double baseline_return) {
  return (method_return - baseline_return) / std::abs(baseline_return);
}

SummaryReport summarize(const MetricsLog& log, int final_window) {
  SummaryReport report;
  report.final_window = final_window;
  for (const auto& method : log.methods()) {
    MethodSummary ms;
    ms.method = method;
    std::vector<double> finals;
    std::vector<double> min_qos;
    std::vector<double> curve_sum;
    std::vector<int> curve_count;
    for (auto seed : log.seeds(method)) {
      const auto run = log.run(method, seed);
      const std::size_t window = std::min<std::size_t>(final_window, run.size());
      double tail = 0.0;
      for (std::size_t i = run.size() - window; i < run.size(); ++i) tail += run[i].episode_return;
      finals.push_back(tail / window);
      for (std::size_t i = 0; i < run.size(); ++i) {
        min_qos.push_back(run[i].qos.min);
        if (curve_sum.size() <= i) {
          curve_sum.resize(i + 1, 0.0);
          curve_count.resize(i + 1, 0);
        }
        curve_sum[i] += run[i].episode_return;
        ++curve_count[i];
      }
    }
    ms.num_seeds = static_cast<int>(finals.size());
    double mean = 0.0;
    for (double f : finals) mean += f;
    mean /= finals.size();
    ms.mean_final_return = mean;
    if (finals.size() > 1) {
      double ss = 0.0;
      for (double f : finals) ss += (f - mean) * (f - mean);
      ms.std_final_return = std::sqrt(ss / (finals.size() - 1));
    } else {
      ms.single_seed = true;
    }
    ms.min_qos = five_number_summary(min_qos);
    for (std::size_t i = 0; i < curve_sum.size(); ++i) ms.curve.push_back(curve_sum[i] / curve_count[i]);
    report.methods.push_back(std::move(ms));
  }

  const MethodSummary* meta = nullptr;
  const MethodSummary* best = nullptr;
  for (const auto& m : report.methods) {
    if (m.method == "meta") meta = &m;
    else if (!best || m.mean_final_return > best->mean_final_return) best = &m;
  }
  if (report.methods.size() < 2) report.warnings.push_back("fewer than two methods in the log");
  if (!meta) report.warnings.push_back("no meta run found; gain not reported");
  if (!best) report.warnings.push_back("no baseline run found; gain not reported");
  if (meta && best) {
    report.best_baseline = best->method;
    if (best->mean_final_return == 0.0)
      report.warnings.push_back("best baseline return is zero; gain undefined");
    else
      report.gain = relative_gain(meta->mean_final_return, best->mean_final_return);
  }
  return report;
}

std::string format_summary(const SummaryReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "final return = mean over the last " << report.final_window << " episodes of each run\n\n";
  out << "method    seeds  final_return_mean  final_return_std\n";
  for (const auto& m : report.methods) {
    out << m.method << std::string(m.method.size() < 10 ? 10 - m.method.size() : 1, ' ') << m.num_seeds
        << "      " << m.mean_final_return << "            " << m.std_final_return
        << (m.single_seed ? "  (single seed)" : "") << '\n';
  }
  out << '\n';
  if (report.gain) {
    out << "relative gain of meta over best baseline (" << report.best_baseline
        << "): " << 100.0 * *report.gain << "%  (reference headline figure: 19.8%)\n\n";
  }
  out << "min-QoS five-number summary (bits/s): min q1 median q3 max\n";
  out.precision(1);
  for (const auto& m : report.methods) {
    out << m.method << ": " << m.min_qos.min << ' ' << m.min_qos.q1 << ' ' << m.min_qos.median
        << ' ' << m.min_qos.q3 << ' ' << m.min_qos.max << '\n';
  }
  out << "\nadaptation curve (mean return per shot)\nshot";
  for (const auto& m : report.methods) out << ',' << m.method;
  out << '\n';
  out.precision(4);
  std::size_t shots = 0;
  for (const auto& m : report.methods) shots = std::max(shots, m.curve.size());
  for (std::size_t i = 0; i < shots; ++i) {
    out << i + 1;
    for (const auto& m : report.methods) {
      out << ',';
      if (i < m.curve.size()) out << m.curve[i];
    }
    out << '\n';
  }
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  return out.str();
}

void write_qos_cdfs(const std::filesystem::path& dir, const MetricsLog& log) {
  std::filesystem::create_directories(dir);
  for (const auto& method : log.methods()) {
    std::map<std::string, std::vector<double>> series;
    for (const auto& r : log.records) {
      if (r.method != method) continue;
      series["q_avg"].push_back(r.qos.avg);
      series["q_min"].push_back(r.qos.min);
      series["q_max"].push_back(r.qos.max);
    }
    for (const auto& [metric, values] : series) {
      std::ofstream out(dir / ("cdf_" + metric + "_" + method + ".csv"), std::ios::binary);
      out << "value,probability\n";
      for (const auto& [x, p] : compute_cdf(values)) out << format_number(x) << ',' << format_number(p) << '\n';
    }
  }
}

}  // namespace metaran
