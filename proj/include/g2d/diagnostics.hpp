#pragma once

#include <span>
#include <string>
#include <vector>

#include "g2d/harvest.hpp"

namespace g2d {
namespace diag {

// Minimal group summary shared by internal harvests and ingested logs: the
// informativeness metrics depend only on (level, G', correct count).
struct GroupOutcome {
  int level = 0;
  int g_prime = 0;
  int correct = 0;

  bool pairable() const { return correct > 0 && correct < g_prime; }
  double p() const { return static_cast<double>(correct) / g_prime; }
  // middle band [3/8, 5/8], boundaries inclusive, compared in exact
  // integer arithmetic for any G'
  bool in_middle_band() const { return 8 * correct >= 3 * g_prime && 8 * correct <= 5 * g_prime; }
};

GroupOutcome outcome_of(const RolloutGroup& group);
GroupOutcome outcome_of(const ExternalGroupRecord& record);
std::vector<GroupOutcome> outcomes_of(std::span<const RolloutGroup> groups);
std::vector<GroupOutcome> outcomes_of(std::span<const ExternalGroupRecord> records);

// H(p) in bits; H(0) = H(1) = 0 by continuous extension. Throws
// std::domain_error outside [0,1].
double binary_entropy(double p);

// rho: fraction of groups with 0 < correct < G'. Throws on empty input.
double pairability(std::span<const GroupOutcome> groups);

// mu: in-band pairable groups / pairable groups. Throws std::domain_error
// when there are no pairable groups (undefined, never silently 0).
double middle_band_fraction(std::span<const GroupOutcome> groups);

// H(K): mean binary entropy of p(x) over pairable groups only.
double mean_rollout_entropy(std::span<const GroupOutcome> groups);

// Product-moment correlation. Throws std::invalid_argument on length
// mismatch or n < 2, std::domain_error when either series is constant.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct InformativenessReport {
  int k = 0;
  double rho = 0.0;
  int n_pairs = 0;
  double entropy = 0.0;
  double midband = 0.0;
  double harvest_pass1 = 0.0;  // mean p(x) over all groups
};

InformativenessReport informativeness(int k, std::span<const GroupOutcome> groups);

struct CalibrationRow {
  std::string label;  // level number, or "all"
  int n = 0;
  double pass1 = 0.0;  // mean p(x) over the row's groups
  int pairable = 0;
  int all_wrong = 0;
  int all_correct = 0;

  double pairable_frac() const { return n ? static_cast<double>(pairable) / n : 0.0; }
  double all_wrong_frac() const { return n ? static_cast<double>(all_wrong) / n : 0.0; }
  double all_correct_frac() const { return n ? static_cast<double>(all_correct) / n : 0.0; }
};

// Per-level rows (ascending) plus one aggregate row labeled "all".
std::vector<CalibrationRow> calibration_table(std::span<const GroupOutcome> groups);

std::string calibration_csv(std::span<const CalibrationRow> rows);
std::string calibration_pretty(std::span<const CalibrationRow> rows);

struct SweepRow {
  InformativenessReport report;
  double downstream_acc = 0.0;
};

struct SweepCorrelations {
  double r_rho = 0.0;
  double r_entropy = 0.0;
  double r_midband = 0.0;
};

// Pearson r of each metric against downstream accuracy across the K rows.
// Propagates pearson's errors (duplicate/constant rows surface as errors).
SweepCorrelations sweep_correlations(std::span<const SweepRow> rows);

std::string report_csv(std::span<const SweepRow> rows);

}  // namespace diag
}  // namespace g2d
