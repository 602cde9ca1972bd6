#include "g2d/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <set>

#include <nlohmann/json.hpp>

#include "g2d/errors.hpp"
#include "g2d/eval.hpp"
#include "g2d/io.hpp"

namespace g2d {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "g2d 0.1.0";

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

std::pair<double, double> mean_sd(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var)};
}

Manifest::Manifest(const ExperimentConfig& cfg, const std::string& command) {
  json j;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  char hex[24];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  j["config_hash"] = hex;
  j["seeds"] = cfg.seeds;
  j["started"] = now_iso8601();
  head_ = j.dump();
}

void Manifest::add_artifact(const std::string& name, const fs::path& path) {
  artifacts_.emplace_back(name, path.string());
}

void Manifest::add_failure(const std::string& what) {
  failures_.push_back(what);
  ++n_failures_;
}

void Manifest::add_note(const std::string& key, const std::string& value) {
  notes_.emplace_back(key, value);
}

void Manifest::finish_and_write(const fs::path& path) {
  json j = json::parse(head_);
  j["finished"] = now_iso8601();
  json arts = json::object();
  for (const auto& [name, p] : artifacts_) arts[name] = p;
  j["artifacts"] = arts;
  j["failures"] = failures_;
  for (const auto& [k, v] : notes_) j["notes"][k] = v;
  atomic_write_file(path, j.dump(2) + "\n");
}

SeedContext prepare_seed(const ExperimentConfig& cfg, uint64_t seed, std::span<const int> k_values,
                         ExecMode mode) {
  SeedContext ctx;
  ctx.seed = seed;
  // the full pipeline varies per seed: tasks, M0 init and all stage streams
  ctx.train_tasks = make_dataset(cfg.mixture, derive_seed(cfg.task_seed, {0x7a5cu, seed}),
                                 cfg.task_gen, "t");
  if (cfg.harvest_split == "heldout") {
    ctx.harvest_tasks = make_dataset(cfg.mixture, derive_seed(cfg.task_seed, {0x8a3bu, seed}),
                                     cfg.task_gen, "h");
  } else {
    ctx.harvest_tasks = ctx.train_tasks;
  }
  ctx.m0 = init_policy(cfg.arch, derive_seed(seed, {0x30du, 0}));

  std::set<int> wanted(k_values.begin(), k_values.end());
  const int k_max = wanted.empty() ? 0 : *wanted.rbegin();
  if (wanted.count(0)) ctx.snapshots.emplace(0, ctx.m0);

  GrpoConfig grpo_cfg = cfg.grpo;
  grpo_cfg.steps = k_max;
  WarmupResult res = warmup(ctx.m0, ctx.train_tasks, grpo_cfg, derive_seed(seed, {0x9a4fu, 0}),
                            mode, [&](int step, const PolicyParams& p) {
                              if (wanted.count(step)) ctx.snapshots.emplace(step, p);
                            });
  ctx.trajectory = std::move(res.trajectory);
  ctx.snapshots.emplace(k_max, std::move(res.policy));
  return ctx;
}

CellResult run_cell(const ExperimentConfig& cfg, const SeedContext& ctx, int k, ExecMode mode,
                    const fs::path& cell_dir, bool grpo_baseline, Manifest* manifest) {
  CellResult cell;
  cell.k = k;
  cell.seed = ctx.seed;
  const auto snap = ctx.snapshots.find(k);
  if (snap == ctx.snapshots.end()) throw StageError("no warm-up snapshot for K=" + std::to_string(k));
  const PolicyParams& pi_k = snap->second;
  const std::string tag = "k" + std::to_string(k) + "/seed" + std::to_string(ctx.seed);

  save_policy(pi_k, cell_dir / "policy_k.txt");
  if (manifest) manifest->add_artifact(tag + "/policy_k", cell_dir / "policy_k.txt");

  const PolicyParams* eval_policy = &pi_k;
  PolicyParams trained;
  std::vector<RolloutGroup> groups;
  if (!grpo_baseline) {
    // Stage 2: freeze pi_k, harvest D_k
    PreferenceDataset dk = harvest_dataset(pi_k, ctx.harvest_tasks, cfg.harvest, k,
                                           derive_seed(ctx.seed, {0xa4e0u, static_cast<uint64_t>(k)}),
                                           mode, &groups);
    const Vocab vocab = cfg.arch.vocab();
    write_pairs(dk, vocab, cell_dir / "pairs.jsonl");
    atomic_write_file(cell_dir / "harvest_stats.json", harvest_stats_to_json(dk.stats));
    atomic_write_file(cell_dir / "rollouts.jsonl", rollout_log_jsonl(groups, k));
    if (manifest) {
      manifest->add_artifact(tag + "/pairs", cell_dir / "pairs.jsonl");
      manifest->add_artifact(tag + "/harvest_stats", cell_dir / "harvest_stats.json");
      manifest->add_artifact(tag + "/rollouts", cell_dir / "rollouts.jsonl");
    }
    auto outcomes = diag::outcomes_of(std::span<const RolloutGroup>(groups));
    if (dk.pairs.empty()) {
      cell.error = "empty preference dataset at K=" + std::to_string(k) +
                   "; offline stage aborted";
      cell.report.k = k;
      cell.report.rho = 0.0;
      return cell;
    }
    cell.report = diag::informativeness(k, outcomes);

    // Stage 3: offline DPO from a fresh copy of M0
    DpoConfig dpo_cfg = cfg.dpo;
    dpo_cfg.shuffle_seed = derive_seed(ctx.seed, {0xd40u, static_cast<uint64_t>(k)});
    DpoResult dpo_res = train_dpo(ctx.m0, dk, dpo_cfg, mode);
    trained = std::move(dpo_res.policy);
    save_policy(trained, cell_dir / "policy_dpo.txt");
    atomic_write_file(cell_dir / "dpo_trace.csv", dpo_trace_csv(dpo_res.trace));
    if (manifest) {
      manifest->add_artifact(tag + "/policy_dpo", cell_dir / "policy_dpo.txt");
      manifest->add_artifact(tag + "/dpo_trace", cell_dir / "dpo_trace.csv");
    }
    eval_policy = &trained;
  } else {
    cell.report.k = k;
  }

  // greedy pass@1 over independent held-out task sets
  std::vector<double> accs;
  for (int r = 0; r < cfg.eval.replicas; ++r) {
    TaskSet eval_tasks =
        make_dataset(cfg.eval.mixture,
                     derive_seed(ctx.seed, {0xe7a1u, static_cast<uint64_t>(r)}), cfg.task_gen, "e");
    accs.push_back(pass_at_1(*eval_policy, eval_tasks, cfg.eval.max_len, mode).accuracy);
  }
  auto [mean, sd] = mean_sd(accs);
  cell.acc_mean = mean;
  cell.acc_sd = sd;
  cell.ok = true;

  json ev;
  ev["k"] = k;
  ev["seed"] = ctx.seed;
  ev["accuracy_mean"] = cell.acc_mean;
  ev["accuracy_sd"] = cell.acc_sd;
  ev["replicas"] = cfg.eval.replicas;
  ev["grpo_baseline"] = grpo_baseline;
  atomic_write_file(cell_dir / "eval.json", ev.dump(2) + "\n");
  if (manifest) manifest->add_artifact(tag + "/eval", cell_dir / "eval.json");
  return cell;
}

SweepResult run_sweep(const ExperimentConfig& cfg, ExecMode mode, bool verbose) {
  cfg.validate();
  if (cfg.k_grid.size() < 2) throw ConfigError("sweep needs at least 2 K values");
  const fs::path out(cfg.output_dir);
  Manifest manifest(cfg, "sweep");
  SweepResult result;

  // per-K accumulators across seeds
  std::map<int, std::vector<double>> acc_by_k, rho_by_k, ent_by_k, mid_by_k, pass1_by_k;
  std::map<int, std::vector<double>> pairs_by_k;
  std::string corr_csv = "seed,r_rho,r_entropy,r_midband\n";

  for (uint64_t seed : cfg.seeds) {
    if (verbose) std::fprintf(stderr, "[sweep] seed %llu: warm-up\n", (unsigned long long)seed);
    SeedContext ctx = prepare_seed(cfg, seed, cfg.k_grid, mode);
    const fs::path seed_dir = out / ("seed" + std::to_string(seed));
    write_tasks(ctx.train_tasks, cfg.task_gen, seed_dir / "tasks.jsonl");
    save_policy(ctx.m0, seed_dir / "m0.txt");
    atomic_write_file(seed_dir / "warmup_stats.csv", warmup_stats_csv(ctx.trajectory));
    manifest.add_artifact("seed" + std::to_string(seed) + "/tasks", seed_dir / "tasks.jsonl");
    manifest.add_artifact("seed" + std::to_string(seed) + "/m0", seed_dir / "m0.txt");
    manifest.add_artifact("seed" + std::to_string(seed) + "/warmup_stats",
                          seed_dir / "warmup_stats.csv");

    std::vector<diag::SweepRow> rows;
    for (int k : cfg.k_grid) {
      if (verbose) std::fprintf(stderr, "[sweep] seed %llu: K=%d\n", (unsigned long long)seed, k);
      const fs::path cell_dir = seed_dir / ("k" + std::to_string(k));
      CellResult cell = run_cell(cfg, ctx, k, mode, cell_dir, false, &manifest);
      if (!cell.ok) {
        manifest.add_failure(cell.error);
        result.complete = false;
        continue;  // completed K rows are still emitted
      }
      result.cells.push_back(cell);
      rows.push_back({cell.report, cell.acc_mean});
      acc_by_k[k].push_back(cell.acc_mean);
      rho_by_k[k].push_back(cell.report.rho);
      ent_by_k[k].push_back(cell.report.entropy);
      mid_by_k[k].push_back(cell.report.midband);
      pass1_by_k[k].push_back(cell.report.harvest_pass1);
      pairs_by_k[k].push_back(cell.report.n_pairs);
    }
    atomic_write_file(seed_dir / "report.csv", diag::report_csv(rows));
    manifest.add_artifact("seed" + std::to_string(seed) + "/report", seed_dir / "report.csv");
    try {
      diag::SweepCorrelations c = diag::sweep_correlations(rows);
      corr_csv += std::to_string(seed) + "," + fmt_double(c.r_rho) + "," +
                  fmt_double(c.r_entropy) + "," + fmt_double(c.r_midband) + "\n";
    } catch (const std::exception& e) {
      corr_csv += std::to_string(seed) + ",undefined,undefined,undefined\n";
      manifest.add_failure("seed " + std::to_string(seed) + " correlations: " + e.what());
      result.complete = false;
    }
  }

  // Table analogue: one row per K, mean +/- sd over seeds
  std::string table = "K,pass1_mean,rho_mean,n_pairs_mean,entropy_mean,midband_mean,"
                      "acc_mean,acc_sd\n";
  std::string curve = "K,acc_mean,acc_sd,rho,entropy,midband\n";
  for (int k : cfg.k_grid) {
    if (acc_by_k[k].empty()) continue;
    auto [acc_m, acc_s] = mean_sd(acc_by_k[k]);
    auto [rho_m, rho_s] = mean_sd(rho_by_k[k]);
    auto [ent_m, ent_s] = mean_sd(ent_by_k[k]);
    auto [mid_m, mid_s] = mean_sd(mid_by_k[k]);
    auto [p1_m, p1_s] = mean_sd(pass1_by_k[k]);
    auto [np_m, np_s] = mean_sd(pairs_by_k[k]);
    table += std::to_string(k) + "," + fmt_double(p1_m) + "," + fmt_double(rho_m) + "," +
             fmt_double(np_m) + "," + fmt_double(ent_m) + "," + fmt_double(mid_m) + "," +
             fmt_double(acc_m) + "," + fmt_double(acc_s) + "\n";
    curve += std::to_string(k) + "," + fmt_double(acc_m) + "," + fmt_double(acc_s) + "," +
             fmt_double(rho_m) + "," + fmt_double(ent_m) + "," + fmt_double(mid_m) + "\n";
  }

  result.table_csv = out / "sweep_table.csv";
  result.curve_csv = out / "sweep_curve.csv";
  result.correlations_csv = out / "correlations.csv";
  result.manifest_path = out / "manifest.json";
  atomic_write_file(result.table_csv, table);
  atomic_write_file(result.curve_csv, curve);
  atomic_write_file(result.correlations_csv, corr_csv);
  manifest.add_artifact("sweep_table", result.table_csv);
  manifest.add_artifact("sweep_curve", result.curve_csv);
  manifest.add_artifact("correlations", result.correlations_csv);
  manifest.finish_and_write(result.manifest_path);
  return result;
}

AnalyzeResult analyze_records(std::span<const ExternalGroupRecord> records) {
  AnalyzeResult res;
  std::map<int, std::vector<diag::GroupOutcome>> by_k;
  for (const auto& rec : records) by_k[rec.k].push_back(diag::outcome_of(rec));
  for (const auto& [k, outcomes] : by_k) {
    diag::SweepRow row;
    row.report = diag::informativeness(k, outcomes);
    row.downstream_acc = std::nan("");
    res.reports.push_back(row);
    res.calibration[k] = diag::calibration_table(outcomes);
  }
  return res;
}

AnalyzeResult analyze_log_file(const fs::path& log, const fs::path& out_dir) {
  std::vector<ExternalGroupRecord> records = read_external_log(log);
  AnalyzeResult res = analyze_records(records);
  atomic_write_file(out_dir / "report.csv", diag::report_csv(res.reports));
  for (const auto& [k, rows] : res.calibration) {
    atomic_write_file(out_dir / ("calibration_k" + std::to_string(k) + ".csv"),
                      diag::calibration_csv(rows));
  }
  return res;
}

}  // namespace g2d
