#pragma once

#include <functional>
#include <span>
#include <vector>

#include "g2d/eval.hpp"
#include "g2d/parallel.hpp"
#include "g2d/policy.hpp"
#include "g2d/tasks.hpp"

namespace g2d {

enum class LrSchedule { Constant, Cosine };

struct GrpoConfig {
  int steps = 1000;       // K
  int group_size = 2;     // G, rollouts per prompt
  double temperature = 0.8;
  double learning_rate = 0.05;
  int batch_size = 16;    // prompts per step
  int max_completion_len = 8;
  double advantage_epsilon = 1e-8;
  double kl_coef = 0.0;   // reward-shaping penalty against the start policy
  LrSchedule schedule = LrSchedule::Constant;
  bool length_normalize = false;

  void validate() const;  // throws ConfigError
};

struct StepStats {
  int step = 0;
  double mean_reward = 0.0;
  double zero_variance_frac = 0.0;
  double mean_len = 0.0;
  double grad_norm = 0.0;
  // diagnostics beyond the CSV schema
  double no_box_frac = 0.0;
};

// A_i = (r_i - mean) / (pop std + eps); exactly zero for zero-variance groups.
std::vector<double> group_advantages(std::span<const double> rewards, double eps_std);

// One on-policy update: sample G completions per prompt, verify, normalize
// advantages within each group, ascend sum_i A_i * grad log pi(y_i|x)
// averaged over the batch. Rollouts fan out in parallel against the current
// snapshot; the reduction and update are a single serialized commit.
StepStats grpo_step(PolicyParams& params, std::span<const Task> batch, const GrpoConfig& cfg,
                    const PolicyParams& ref, int step_index, uint64_t seed, ExecMode mode);

struct WarmupResult {
  PolicyParams policy;
  std::vector<StepStats> trajectory;
};

// K steps over batches drawn cyclically from tasks (reshuffled each pass).
// K = 0 returns m0 unchanged. on_step, when set, is called after every step
// with the step count and current parameters (used to snapshot pi_K at
// sweep grid points).
WarmupResult warmup(const PolicyParams& m0, const TaskSet& tasks, const GrpoConfig& cfg,
                    uint64_t seed, ExecMode mode,
                    const std::function<void(int, const PolicyParams&)>& on_step = {});

std::string warmup_stats_csv(std::span<const StepStats> trajectory);

}  // namespace g2d
