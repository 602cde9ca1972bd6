#include "g2d/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "g2d/io.hpp"

namespace g2d {
namespace diag {

GroupOutcome outcome_of(const RolloutGroup& group) {
  return {group.level, static_cast<int>(group.rollouts.size()), group.correct_count};
}

GroupOutcome outcome_of(const ExternalGroupRecord& record) {
  int correct = 0;
  for (int r : record.rewards) correct += r;
  return {record.level, static_cast<int>(record.rewards.size()), correct};
}

std::vector<GroupOutcome> outcomes_of(std::span<const RolloutGroup> groups) {
  std::vector<GroupOutcome> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(outcome_of(g));
  return out;
}

std::vector<GroupOutcome> outcomes_of(std::span<const ExternalGroupRecord> records) {
  std::vector<GroupOutcome> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(outcome_of(r));
  return out;
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binary_entropy: p outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double pairability(std::span<const GroupOutcome> groups) {
  if (groups.empty()) throw std::invalid_argument("pairability: no groups");
  long pairable = 0;
  for (const auto& g : groups) pairable += g.pairable() ? 1 : 0;
  return static_cast<double>(pairable) / static_cast<double>(groups.size());
}

double middle_band_fraction(std::span<const GroupOutcome> groups) {
  long pairable = 0, in_band = 0;
  for (const auto& g : groups) {
    if (!g.pairable()) continue;
    ++pairable;
    in_band += g.in_middle_band() ? 1 : 0;
  }
  if (pairable == 0) throw std::domain_error("middle_band_fraction: no pairable groups");
  return static_cast<double>(in_band) / static_cast<double>(pairable);
}

double mean_rollout_entropy(std::span<const GroupOutcome> groups) {
  long pairable = 0;
  double sum = 0.0;
  for (const auto& g : groups) {
    if (!g.pairable()) continue;
    ++pairable;
    sum += binary_entropy(g.p());
  }
  if (pairable == 0) throw std::domain_error("mean_rollout_entropy: no pairable groups");
  return sum / static_cast<double>(pairable);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::domain_error("pearson: constant series");
  return sxy / std::sqrt(sxx * syy);
}

InformativenessReport informativeness(int k, std::span<const GroupOutcome> groups) {
  InformativenessReport rep;
  rep.k = k;
  rep.rho = pairability(groups);
  long pairs = 0;
  double p_sum = 0.0;
  for (const auto& g : groups) {
    pairs += g.pairable() ? 1 : 0;
    p_sum += g.p();
  }
  rep.n_pairs = static_cast<int>(pairs);
  rep.entropy = mean_rollout_entropy(groups);
  rep.midband = middle_band_fraction(groups);
  rep.harvest_pass1 = p_sum / static_cast<double>(groups.size());
  return rep;
}

std::vector<CalibrationRow> calibration_table(std::span<const GroupOutcome> groups) {
  if (groups.empty()) throw std::invalid_argument("calibration_table: no groups");
  std::map<int, CalibrationRow> by_level;
  CalibrationRow all;
  all.label = "all";
  for (const auto& g : groups) {
    CalibrationRow& row = by_level[g.level];
    if (row.label.empty()) row.label = std::to_string(g.level);
    for (CalibrationRow* r : {&row, &all}) {
      r->n += 1;
      r->pass1 += g.p();
      if (g.pairable()) r->pairable += 1;
      else if (g.correct == 0) r->all_wrong += 1;
      else r->all_correct += 1;
    }
  }
  std::vector<CalibrationRow> rows;
  for (auto& [level, row] : by_level) {
    row.pass1 /= row.n;
    rows.push_back(row);
  }
  all.pass1 /= all.n;
  rows.push_back(all);
  return rows;
}

std::string calibration_csv(std::span<const CalibrationRow> rows) {
  std::string out = "level,n,pass1,pairable,pairable_frac,all_wrong,all_wrong_frac,"
                    "all_correct,all_correct_frac\n";
  for (const auto& r : rows) {
    out += r.label + "," + std::to_string(r.n) + "," + fmt_double(r.pass1) + "," +
           std::to_string(r.pairable) + "," + fmt_double(r.pairable_frac()) + "," +
           std::to_string(r.all_wrong) + "," + fmt_double(r.all_wrong_frac()) + "," +
           std::to_string(r.all_correct) + "," + fmt_double(r.all_correct_frac()) + "\n";
  }
  return out;
}

std::string calibration_pretty(std::span<const CalibrationRow> rows) {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-6s %6s %8s %16s %16s %16s\n", "level", "N", "pass@1",
                "pairable", "all-wrong", "all-correct");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-6s %6d %7.1f%% %10d (%2.0f%%) %10d (%2.0f%%) %10d (%2.0f%%)\n",
                  r.label.c_str(), r.n, 100.0 * r.pass1, r.pairable, 100.0 * r.pairable_frac(),
                  r.all_wrong, 100.0 * r.all_wrong_frac(), r.all_correct,
                  100.0 * r.all_correct_frac());
    out += buf;
  }
  return out;
}

SweepCorrelations sweep_correlations(std::span<const SweepRow> rows) {
  if (rows.size() < 2) throw std::invalid_argument("sweep_correlations: need >= 2 K values");
  std::vector<double> acc, rho, ent, mid;
  for (const auto& r : rows) {
    acc.push_back(r.downstream_acc);
    rho.push_back(r.report.rho);
    ent.push_back(r.report.entropy);
    mid.push_back(r.report.midband);
  }
  SweepCorrelations c;
  c.r_rho = pearson(rho, acc);
  c.r_entropy = pearson(ent, acc);
  c.r_midband = pearson(mid, acc);
  return c;
}

std::string report_csv(std::span<const SweepRow> rows) {
  std::string out = "K,rho,n_pairs,entropy,midband,harvest_pass1,downstream_acc\n";
  for (const auto& r : rows) {
    out += std::to_string(r.report.k) + "," + fmt_double(r.report.rho) + "," +
           std::to_string(r.report.n_pairs) + "," + fmt_double(r.report.entropy) + "," +
           fmt_double(r.report.midband) + "," + fmt_double(r.report.harvest_pass1) + "," +
           fmt_double(r.downstream_acc) + "\n";
  }
  return out;
}

}  // namespace diag
}  // namespace g2d
