#include "doctor/eval/metrics.hpp"

#include <cmath>
#include <fstream>

#include "doctor/errors.hpp"
#include "doctor/numeric.hpp"

namespace doctor::eval {

double abs_error(double target_return, const std::vector<double>& rewards) {
  double total = 0.0;
  for (double r : rewards) total += r;
  return std::abs(target_return - total);
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

}  // namespace

void write_alignment_csv(const AlignmentReport& report, const std::string& path) {
  auto out = open_csv(path);
  out << "target,mean_return,std_return,mean_abs_err,episodes\n";
  for (const auto& row : report.rows) {
    out << format_double(row.target) << ',' << format_double(row.mean_return) << ','
        << format_double(row.std_return) << ',' << format_double(row.mean_abs_err) << ','
        << row.episodes << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
  auto out = open_csv(path);
  out << "variant_or_N,mean_abs_err\n";
  for (const auto& row : rows) {
    out << row.variant_or_n << ',' << format_double(row.mean_abs_err) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_safety_csv(const std::vector<SafetyReport>& reports, const std::string& path) {
  auto out = open_csv(path);
  out << "target_fraction,mean_return,adverse_per_1k,remission_rate,episodes\n";
  for (const auto& r : reports) {
    out << format_double(r.target_fraction) << ',' << format_double(r.mean_return) << ','
        << format_double(r.adverse_per_1k) << ',' << format_double(r.remission_rate) << ','
        << r.episodes << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<double> parse_target_grid(const std::string& spec) {
  auto first = spec.find(':');
  auto second = spec.find(':', first == std::string::npos ? first : first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    throw UsageError("target grid must be start:stop:step, got '" + spec + "'");
  }
  double start = parse_double(spec.substr(0, first));
  double stop = parse_double(spec.substr(first + 1, second - first - 1));
  double step = parse_double(spec.substr(second + 1));
  if (step <= 0.0) throw UsageError("target grid step must be positive");
  if (stop < start) throw UsageError("target grid stop must be >= start");
  std::vector<double> targets;
  int n = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) targets.push_back(start + step * i);
  return targets;
}

}  // namespace doctor::eval
