// g2d command line: task generation, the three pipeline stages, the K-sweep
// driver and external rollout-log analysis.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime/stage failure,
// 3 schema/ingest error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "g2d/config.hpp"
#include "g2d/errors.hpp"
#include "g2d/eval.hpp"
#include "g2d/io.hpp"
#include "g2d/pipeline.hpp"

namespace fs = std::filesystem;
using namespace g2d;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string output;
  uint64_t seed = 0;
  bool seed_set = false;
  bool serial = false;
  int threads = 0;
  bool verbose = false;
};

ExperimentConfig load_or_default(const CommonOpts& opts) {
  ExperimentConfig cfg =
      opts.config_path.empty() ? default_config() : load_config(opts.config_path);
  if (!opts.output.empty()) cfg.output_dir = opts.output;
  if (const char* root = std::getenv("G2D_OUTPUT_ROOT"); root && *root) {
    fs::path dir(cfg.output_dir);
    if (dir.is_relative()) cfg.output_dir = (fs::path(root) / dir).string();
  }
  cfg.validate();
  return cfg;
}

uint64_t pick_seed(const CommonOpts& opts, const ExperimentConfig& cfg) {
  return opts.seed_set ? opts.seed : cfg.seeds.front();
}

ExecMode mode_of(const CommonOpts& opts) {
  if (opts.threads > 0) set_threads(opts.threads);
  return opts.serial ? ExecMode::Serial : ExecMode::Parallel;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_seed = true) {
  cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
  cmd->add_option("--output", opts.output, "output directory (overrides config)");
  if (with_seed) {
    cmd->add_option("--seed", opts.seed, "pipeline seed (default: first config seed)")
        ->each([&](const std::string&) { opts.seed_set = true; });
  }
  cmd->add_flag("--serial", opts.serial, "use the serial reference kernels");
  cmd->add_option("--threads", opts.threads, "worker thread count");
  cmd->add_flag("-v,--verbose", opts.verbose, "progress output on stderr");
}

int cmd_gen_tasks(const CommonOpts& opts) {
  ExperimentConfig cfg = load_or_default(opts);
  const uint64_t seed = pick_seed(opts, cfg);
  TaskSet tasks =
      make_dataset(cfg.mixture, derive_seed(cfg.task_seed, {0x7a5cu, seed}), cfg.task_gen, "t");
  const fs::path out(cfg.output_dir);
  write_tasks(tasks, cfg.task_gen, out / "tasks.jsonl");
  Manifest manifest(cfg, "gen-tasks");
  manifest.add_artifact("tasks", out / "tasks.jsonl");
  manifest.finish_and_write(out / "manifest.json");
  std::printf("wrote %zu tasks to %s\n", tasks.tasks.size(), (out / "tasks.jsonl").c_str());
  return 0;
}

int cmd_warmup(const CommonOpts& opts, int k) {
  ExperimentConfig cfg = load_or_default(opts);
  const uint64_t seed = pick_seed(opts, cfg);
  const ExecMode mode = mode_of(opts);
  const fs::path out(cfg.output_dir);

  std::vector<int> ks = {k};
  SeedContext ctx = prepare_seed(cfg, seed, ks, mode);
  write_tasks(ctx.train_tasks, cfg.task_gen, out / "tasks.jsonl");
  save_policy(ctx.m0, out / "m0.txt");
  save_policy(ctx.snapshots.at(k), out / "policy_k.txt");
  atomic_write_file(out / "warmup_stats.csv", warmup_stats_csv(ctx.trajectory));

  Manifest manifest(cfg, "warmup");
  manifest.add_artifact("tasks", out / "tasks.jsonl");
  manifest.add_artifact("m0", out / "m0.txt");
  manifest.add_artifact("policy_k", out / "policy_k.txt");
  manifest.add_artifact("warmup_stats", out / "warmup_stats.csv");
  manifest.add_note("k", std::to_string(k));
  manifest.finish_and_write(out / "manifest.json");
  std::printf("warm-up done: K=%d, policy at %s\n", k, (out / "policy_k.txt").c_str());
  return 0;
}

int cmd_harvest(const CommonOpts& opts, const std::string& policy_file,
                const std::string& tasks_file, int k) {
  ExperimentConfig cfg = load_or_default(opts);
  const uint64_t seed = pick_seed(opts, cfg);
  const ExecMode mode = mode_of(opts);
  const fs::path out(cfg.output_dir);

  PolicyParams pi_k = load_policy(policy_file);
  TaskSet tasks = read_tasks(tasks_file, cfg.task_gen);
  std::vector<RolloutGroup> groups;
  PreferenceDataset dk = harvest_dataset(pi_k, tasks, cfg.harvest, k,
                                         derive_seed(seed, {0xa4e0u, static_cast<uint64_t>(k)}),
                                         mode, &groups);
  write_pairs(dk, cfg.arch.vocab(), out / "pairs.jsonl");
  atomic_write_file(out / "harvest_stats.json", harvest_stats_to_json(dk.stats));
  atomic_write_file(out / "rollouts.jsonl", rollout_log_jsonl(groups, k));

  Manifest manifest(cfg, "harvest");
  manifest.add_artifact("pairs", out / "pairs.jsonl");
  manifest.add_artifact("harvest_stats", out / "harvest_stats.json");
  manifest.add_artifact("rollouts", out / "rollouts.jsonl");
  manifest.finish_and_write(out / "manifest.json");
  std::printf("harvested %zu pairs from %zu prompts (rho=%.3f)\n", dk.pairs.size(),
              tasks.tasks.size(), dk.stats.rho);
  return 0;
}

int cmd_train_dpo(const CommonOpts& opts, const std::string& pairs_file,
                  const std::string& m0_file) {
  ExperimentConfig cfg = load_or_default(opts);
  const uint64_t seed = pick_seed(opts, cfg);
  const ExecMode mode = mode_of(opts);
  const fs::path out(cfg.output_dir);

  PolicyParams m0 = load_policy(m0_file);
  PreferenceDataset dk = read_pairs(pairs_file, m0.arch.vocab());
  DpoConfig dpo_cfg = cfg.dpo;
  dpo_cfg.shuffle_seed = derive_seed(seed, {0xd40u, static_cast<uint64_t>(dk.provenance.k)});
  DpoResult res = train_dpo(m0, dk, dpo_cfg, mode);
  save_policy(res.policy, out / "policy_dpo.txt");
  atomic_write_file(out / "dpo_trace.csv", dpo_trace_csv(res.trace));

  Manifest manifest(cfg, "train-dpo");
  manifest.add_artifact("policy_dpo", out / "policy_dpo.txt");
  manifest.add_artifact("dpo_trace", out / "dpo_trace.csv");
  manifest.finish_and_write(out / "manifest.json");
  std::printf("dpo done: %zu pairs, final mean loss %.6f\n", dk.pairs.size(),
              res.trace.back().mean_loss);
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& policy_file,
             const std::string& tasks_file) {
  ExperimentConfig cfg = load_or_default(opts);
  const uint64_t seed = pick_seed(opts, cfg);
  const ExecMode mode = mode_of(opts);
  PolicyParams policy = load_policy(policy_file);

  if (!tasks_file.empty()) {
    TaskSet tasks = read_tasks(tasks_file, cfg.task_gen);
    EvalResult res = pass_at_1(policy, tasks, cfg.eval.max_len, mode);
    std::printf("pass@1 %.4f over %d tasks\n", res.accuracy, res.n);
    for (const auto& [level, acc] : res.per_level) {
      std::printf("  level %d: %.4f (%d tasks)\n", level, acc, res.level_counts.at(level));
    }
    return 0;
  }
  std::vector<double> accs;
  for (int r = 0; r < cfg.eval.replicas; ++r) {
    TaskSet tasks = make_dataset(cfg.eval.mixture,
                                 derive_seed(seed, {0xe7a1u, static_cast<uint64_t>(r)}),
                                 cfg.task_gen, "e");
    accs.push_back(pass_at_1(policy, tasks, cfg.eval.max_len, mode).accuracy);
  }
  auto [mean, sd] = mean_sd(accs);
  std::printf("pass@1 %.4f +/- %.4f over %d held-out replicas\n", mean, sd, cfg.eval.replicas);
  return 0;
}

int cmd_run(const CommonOpts& opts, int k, bool grpo_baseline) {
  ExperimentConfig cfg = load_or_default(opts);
  const uint64_t seed = pick_seed(opts, cfg);
  const ExecMode mode = mode_of(opts);
  const fs::path out = fs::path(cfg.output_dir) /
                       ("run_k" + std::to_string(k) + "_seed" + std::to_string(seed));

  Manifest manifest(cfg, grpo_baseline ? "run --grpo-baseline" : "run");
  std::vector<int> ks = {k};
  if (opts.verbose) std::fprintf(stderr, "[run] warm-up to K=%d\n", k);
  SeedContext ctx = prepare_seed(cfg, seed, ks, mode);
  write_tasks(ctx.train_tasks, cfg.task_gen, out / "tasks.jsonl");
  save_policy(ctx.m0, out / "m0.txt");
  atomic_write_file(out / "warmup_stats.csv", warmup_stats_csv(ctx.trajectory));
  manifest.add_artifact("tasks", out / "tasks.jsonl");
  manifest.add_artifact("m0", out / "m0.txt");
  manifest.add_artifact("warmup_stats", out / "warmup_stats.csv");

  if (opts.verbose) std::fprintf(stderr, "[run] stages 2-3 + eval\n");
  CellResult cell = run_cell(cfg, ctx, k, mode, out, grpo_baseline, &manifest);
  if (!cell.ok) {
    manifest.add_failure(cell.error);
    manifest.finish_and_write(out / "manifest.json");
    std::fprintf(stderr, "error: %s\n", cell.error.c_str());
    return 2;
  }
  if (!grpo_baseline) {
    std::printf("K=%d rho=%.3f pairs=%d H=%.3f mu=%.3f harvest_pass1=%.3f\n", cell.k,
                cell.report.rho, cell.report.n_pairs, cell.report.entropy, cell.report.midband,
                cell.report.harvest_pass1);
  }
  std::printf("eval pass@1 %.4f +/- %.4f\n", cell.acc_mean, cell.acc_sd);
  manifest.finish_and_write(out / "manifest.json");
  return 0;
}

int cmd_sweep(const CommonOpts& opts) {
  ExperimentConfig cfg = load_or_default(opts);
  const ExecMode mode = mode_of(opts);
  SweepResult res = run_sweep(cfg, mode, opts.verbose);
  std::printf("sweep done: %zu cells\n", res.cells.size());
  std::printf("  table: %s\n", res.table_csv.c_str());
  std::printf("  curve: %s\n", res.curve_csv.c_str());
  std::printf("  correlations: %s\n", res.correlations_csv.c_str());
  if (!res.complete) {
    std::fprintf(stderr, "warning: some cells failed; see %s\n", res.manifest_path.c_str());
    return 2;
  }
  return 0;
}

int cmd_analyze(const CommonOpts& opts, const std::string& log_file) {
  ExperimentConfig cfg = load_or_default(opts);
  const fs::path out(cfg.output_dir);
  AnalyzeResult res = analyze_log_file(log_file, out);
  for (const auto& row : res.reports) {
    std::printf("K=%d rho=%.3f pairs=%d H=%.3f mu=%.3f pass1=%.3f\n", row.report.k,
                row.report.rho, row.report.n_pairs, row.report.entropy, row.report.midband,
                row.report.harvest_pass1);
  }
  for (const auto& [k, rows] : res.calibration) {
    std::printf("\ncalibration at K=%d\n%s", k, diag::calibration_pretty(rows).c_str());
  }
  std::printf("\nreport: %s\n", (out / "report.csv").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"G2D: GRPO warm-up -> preference harvest -> offline DPO, with rollout-"
               "informativeness diagnostics"};
  app.require_subcommand(1);

  CommonOpts opts;
  int k = 0;
  bool grpo_baseline = false;
  std::string policy_file, tasks_file, pairs_file, m0_file, log_file;

  auto* gen = app.add_subcommand("gen-tasks", "generate the task set");
  add_common(gen, opts);

  auto* warm = app.add_subcommand("warmup", "stage 1: GRPO warm-up to pi_K");
  add_common(warm, opts);
  warm->add_option("--k", k, "number of GRPO steps")->required();

  auto* harv = app.add_subcommand("harvest", "stage 2: build the preference dataset");
  add_common(harv, opts);
  harv->add_option("--policy", policy_file, "frozen policy snapshot")->required();
  harv->add_option("--tasks", tasks_file, "tasks JSONL")->required();
  harv->add_option("--k", k, "K tag recorded in the dataset");

  auto* dpo = app.add_subcommand("train-dpo", "stage 3: offline DPO from a fresh M0");
  add_common(dpo, opts);
  dpo->add_option("--pairs", pairs_file, "preference pairs JSONL")->required();
  dpo->add_option("--m0", m0_file, "M0 policy snapshot")->required();

  auto* ev = app.add_subcommand("eval", "greedy pass@1 evaluation");
  add_common(ev, opts);
  ev->add_option("--policy", policy_file, "policy snapshot")->required();
  ev->add_option("--tasks", tasks_file, "tasks JSONL (default: held-out replicas)");

  auto* run = app.add_subcommand("run", "full pipeline for one K");
  add_common(run, opts);
  run->add_option("--k", k, "warm-up steps")->required();
  run->add_flag("--grpo-baseline", grpo_baseline, "skip stages 2-3 and evaluate pi_K directly");

  auto* sweep = app.add_subcommand("sweep", "run the full K grid over all seeds");
  add_common(sweep, opts, false);

  auto* analyze = app.add_subcommand("analyze", "ingest an external rollout log");
  add_common(analyze, opts, false);
  analyze->add_option("--log", log_file, "rollout log JSONL")->required();

  auto* defaults = app.add_subcommand("show-defaults", "print the default config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_tasks(opts);
    if (warm->parsed()) return cmd_warmup(opts, k);
    if (harv->parsed()) return cmd_harvest(opts, policy_file, tasks_file, k);
    if (dpo->parsed()) return cmd_train_dpo(opts, pairs_file, m0_file);
    if (ev->parsed()) return cmd_eval(opts, policy_file, tasks_file);
    if (run->parsed()) return cmd_run(opts, k, grpo_baseline);
    if (sweep->parsed()) return cmd_sweep(opts);
    if (analyze->parsed()) return cmd_analyze(opts, log_file);
    if (defaults->parsed()) {
      std::fputs(config_to_json(default_config()).c_str(), stdout);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const IngestError& e) {
    std::fprintf(stderr, "ingest error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
