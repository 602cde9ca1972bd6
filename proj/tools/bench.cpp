// Benchmark of the OpenMP kernels against the serial reference paths.
// Runs the rollout harvest, one GRPO step batch and one DPO epoch in both
// modes, checks the outputs are bit-identical, and reports the speedup.

#include <chrono>
#include <cstdio>
#include <string>

#include "g2d/config.hpp"
#include "g2d/dpo.hpp"
#include "g2d/eval.hpp"
#include "g2d/grpo.hpp"
#include "g2d/harvest.hpp"
#include "g2d/parallel.hpp"

using namespace g2d;

namespace {

double seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class Fn>
double timed(Fn&& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  return seconds(t0);
}

void report(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-16s %9.3fs %9.3fs %7.2fx  %s\n", name, serial, parallel,
              serial / (parallel > 0 ? parallel : 1e-9), identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int n_tasks = 800;
  if (argc > 1) n_tasks = std::stoi(argv[1]);

  ExperimentConfig cfg = default_config();
  cfg.mixture = {{2, n_tasks / 4}, {3, n_tasks / 4}, {4, n_tasks / 4}, {5, n_tasks / 4}};

  TaskSet tasks = make_dataset(cfg.mixture, 7, cfg.task_gen, "b");
  PolicyParams m0 = init_policy(cfg.arch, 7);

  std::printf("tasks=%zu threads=%d\n", tasks.tasks.size(), max_threads());
  std::printf("%-16s %10s %10s %8s\n", "kernel", "serial", "parallel", "speedup");

  // harvest fan-out
  PreferenceDataset ds_s, ds_p;
  double t_hs = timed([&] { ds_s = harvest_dataset(m0, tasks, cfg.harvest, 0, 11, ExecMode::Serial); });
  double t_hp = timed([&] { ds_p = harvest_dataset(m0, tasks, cfg.harvest, 0, 11, ExecMode::Parallel); });
  report("harvest", t_hs, t_hp,
         pairs_to_jsonl(ds_s, cfg.arch.vocab()) == pairs_to_jsonl(ds_p, cfg.arch.vocab()));

  // GRPO update batch
  GrpoConfig gcfg = cfg.grpo;
  gcfg.batch_size = 64;
  std::span<const Task> batch(tasks.tasks.data(), 64);
  PolicyParams ps = m0, pp = m0;
  double t_gs = timed([&] {
    for (int s = 0; s < 4; ++s) grpo_step(ps, batch, gcfg, m0, s, 13, ExecMode::Serial);
  });
  double t_gp = timed([&] {
    for (int s = 0; s < 4; ++s) grpo_step(pp, batch, gcfg, m0, s, 13, ExecMode::Parallel);
  });
  report("grpo_step x4", t_gs, t_gp, ps.w == pp.w);

  // DPO epoch
  DpoConfig dcfg = cfg.dpo;
  dcfg.epochs = 1;
  DpoResult ds_dpo, dp_dpo;
  double t_ds = timed([&] { ds_dpo = train_dpo(m0, ds_s, dcfg, ExecMode::Serial); });
  double t_dp = timed([&] { dp_dpo = train_dpo(m0, ds_p, dcfg, ExecMode::Parallel); });
  report("dpo_epoch", t_ds, t_dp, ds_dpo.policy.w == dp_dpo.policy.w);

  // greedy evaluation
  EvalResult es, ep;
  double t_es = timed([&] { es = pass_at_1(m0, tasks, cfg.eval.max_len, ExecMode::Serial); });
  double t_ep = timed([&] { ep = pass_at_1(m0, tasks, cfg.eval.max_len, ExecMode::Parallel); });
  report("pass_at_1", t_es, t_ep, es.accuracy == ep.accuracy);

  return 0;
}
