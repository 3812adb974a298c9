#pragma once

#include <string>
#include <vector>

namespace doctor::eval {

// |target - sum of rewards|.
double abs_error(double target_return, const std::vector<double>& rewards);

struct AlignmentRow {
  double target = 0.0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double mean_abs_err = 0.0;
  int episodes = 0;
};

struct AlignmentReport {
  std::vector<AlignmentRow> rows;
  double r_max = 0.0;
  double removal_percent = 0.0;
};

struct SafetyReport {
  double target_fraction = 0.0;
  double mean_return = 0.0;
  double adverse_per_1k = 0.0;
  double remission_rate = 0.0;
  int episodes = 0;
  int adverse_count = 0;
  int remission_count = 0;
  int exhausted_count = 0;
};

struct AblationRow {
  std::string variant_or_n;
  double mean_abs_err = 0.0;
};

// CSV emission: '.' decimal separator, newline-terminated rows, header
// row required, numbers in shortest round-trip form.
void write_alignment_csv(const AlignmentReport& report, const std::string& path);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);
void write_safety_csv(const std::vector<SafetyReport>& reports, const std::string& path);

// "start:stop:step", endpoints inclusive when step divides the range.
std::vector<double> parse_target_grid(const std::string& spec);

double mean_of(const std::vector<double>& xs);
double sample_std(const std::vector<double>& xs);

}  // namespace doctor::eval
