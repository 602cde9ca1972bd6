#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "g2d/config.hpp"
#include "g2d/diagnostics.hpp"
#include "g2d/grpo.hpp"

namespace g2d {

// Records config hash, seeds, artifact paths and failures for a run; every
// referenced artifact exists once the manifest is written on success.
class Manifest {
 public:
  Manifest(const ExperimentConfig& cfg, const std::string& command);
  void add_artifact(const std::string& name, const std::filesystem::path& path);
  void add_failure(const std::string& what);
  void add_note(const std::string& key, const std::string& value);
  void finish_and_write(const std::filesystem::path& path);
  bool has_failures() const { return n_failures_ > 0; }

 private:
  std::string head_;
  std::vector<std::pair<std::string, std::string>> artifacts_;
  std::vector<std::string> failures_;
  std::vector<std::pair<std::string, std::string>> notes_;
  int n_failures_ = 0;
};

// Everything shared by the K cells of one pipeline seed: the task sets, M0
// and the warm-up trajectory with pi_K snapshots at the requested steps.
struct SeedContext {
  uint64_t seed = 0;
  TaskSet train_tasks;
  TaskSet harvest_tasks;  // == train_tasks unless harvest_split = heldout
  PolicyParams m0;
  std::map<int, PolicyParams> snapshots;
  std::vector<StepStats> trajectory;
};

SeedContext prepare_seed(const ExperimentConfig& cfg, uint64_t seed, std::span<const int> k_values,
                         ExecMode mode);

struct CellResult {
  int k = 0;
  uint64_t seed = 0;
  diag::InformativenessReport report;
  double acc_mean = 0.0;
  double acc_sd = 0.0;
  bool ok = false;
  std::string error;
};

// One full G2D cell: harvest D_k from the pi_K snapshot, train a fresh copy
// of M0 with DPO, evaluate greedily on held-out task sets. With
// grpo_baseline set, stages 2-3 are skipped and pi_K is evaluated directly.
CellResult run_cell(const ExperimentConfig& cfg, const SeedContext& ctx, int k, ExecMode mode,
                    const std::filesystem::path& cell_dir, bool grpo_baseline,
                    Manifest* manifest);

struct SweepResult {
  std::vector<CellResult> cells;  // all (seed, K) cells that completed
  std::filesystem::path table_csv, curve_csv, correlations_csv, manifest_path;
  bool complete = true;
};

SweepResult run_sweep(const ExperimentConfig& cfg, ExecMode mode, bool verbose);

struct AnalyzeResult {
  std::vector<diag::SweepRow> reports;  // one per distinct K, downstream acc unknown (nan)
  std::map<int, std::vector<diag::CalibrationRow>> calibration;  // per K
};

AnalyzeResult analyze_records(std::span<const ExternalGroupRecord> records);
AnalyzeResult analyze_log_file(const std::filesystem::path& log,
                               const std::filesystem::path& out_dir);

// mean and (sample) standard deviation
std::pair<double, double> mean_sd(std::span<const double> xs);

}  // namespace g2d
