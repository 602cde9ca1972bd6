#include "g2d/grpo.hpp"

#include <cmath>
#include <numeric>

#include "g2d/errors.hpp"
#include "g2d/io.hpp"
#include "g2d/verifier.hpp"

namespace g2d {

void GrpoConfig::validate() const {
  if (steps < 0) throw ConfigError("grpo.steps must be >= 0");
  if (group_size < 2) throw ConfigError("grpo.group_size must be >= 2");
  if (temperature <= 0) throw ConfigError("grpo.temperature must be > 0");
  if (learning_rate <= 0) throw ConfigError("grpo.learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("grpo.batch_size must be >= 1");
  if (max_completion_len < 1) throw ConfigError("grpo.max_completion_len must be >= 1");
  if (advantage_epsilon <= 0) throw ConfigError("grpo.advantage_epsilon must be > 0");
  if (kl_coef < 0) throw ConfigError("grpo.kl_coef must be >= 0");
}

std::vector<double> group_advantages(std::span<const double> rewards, double eps_std) {
  if (rewards.size() < 2) throw std::invalid_argument("group size must be >= 2");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;  // population variance
  std::vector<double> adv(rewards.size());
  if (var == 0.0) return adv;  // no contrastive signal in the group
  const double denom = std::sqrt(var) + eps_std;
  for (size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

namespace {

double lr_at(const GrpoConfig& cfg, int step_index) {
  if (cfg.schedule == LrSchedule::Cosine && cfg.steps > 0) {
    const double t = static_cast<double>(step_index) / static_cast<double>(cfg.steps);
    return cfg.learning_rate * 0.5 * (1.0 + std::cos(M_PI * t));
  }
  return cfg.learning_rate;
}

struct PromptResult {
  std::vector<double> grad;  // sum_i A_i * grad log pi(y_i|x)
  double reward_sum = 0.0;
  double len_sum = 0.0;
  int no_box = 0;
  bool zero_variance = false;
};

}  // namespace

StepStats grpo_step(PolicyParams& params, std::span<const Task> batch, const GrpoConfig& cfg,
                    const PolicyParams& ref, int step_index, uint64_t seed, ExecMode mode) {
  if (batch.empty()) throw std::invalid_argument("grpo_step: empty batch");
  const Vocab vocab = params.arch.vocab();
  const size_t B = batch.size();
  const size_t P = params.w.size();
  std::vector<PromptResult> results(B);

  parallel_for(B, mode, [&](size_t i) {
    const Task& task = batch[i];
    Rng rng(derive_seed(seed, {0x9701u, static_cast<uint64_t>(step_index), hash_str(task.id)}));
    PromptResult& res = results[i];
    res.grad.assign(P, 0.0);

    std::vector<Completion> completions;
    std::vector<double> rewards(cfg.group_size);
    completions.reserve(cfg.group_size);
    for (int g = 0; g < cfg.group_size; ++g) {
      Completion c = sample(params, task.prompt, cfg.temperature, cfg.max_completion_len, rng);
      VerifyOutcome out = verify(vocab.render(c.tokens), task.truth);
      rewards[g] = out.reward;
      res.reward_sum += out.reward;
      res.len_sum += c.length();
      res.no_box += out.failure == Failure::NoBox ? 1 : 0;
      completions.push_back(std::move(c));
    }
    if (cfg.kl_coef > 0) {
      // KL-shaped rewards against the warm-up start policy
      for (int g = 0; g < cfg.group_size; ++g) {
        const double lp_ref =
            logprob(ref, task.prompt, completions[g].tokens).total;
        rewards[g] -= cfg.kl_coef * (completions[g].total_logprob() - lp_ref);
      }
    }
    std::vector<double> adv = group_advantages(rewards, cfg.advantage_epsilon);
    res.zero_variance = true;
    for (double a : adv) {
      if (a != 0.0) {
        res.zero_variance = false;
        break;
      }
    }
    if (!res.zero_variance) {
      for (int g = 0; g < cfg.group_size; ++g) {
        if (adv[g] == 0.0) continue;
        double scale = adv[g];
        if (cfg.length_normalize && completions[g].length() > 0) scale /= completions[g].length();
        accumulate_grad_logprob(params, task.prompt, completions[g].tokens, scale, res.grad);
      }
    }
  });

  // serialized commit: reduce in prompt order, then update
  std::vector<double> grad(P, 0.0);
  StepStats stats;
  stats.step = step_index;
  long rollouts = 0;
  for (size_t i = 0; i < B; ++i) {
    const PromptResult& res = results[i];
    if (!res.zero_variance) {
      for (size_t k = 0; k < P; ++k) grad[k] += res.grad[k];
    }
    stats.mean_reward += res.reward_sum;
    stats.mean_len += res.len_sum;
    stats.no_box_frac += res.no_box;
    stats.zero_variance_frac += res.zero_variance ? 1.0 : 0.0;
    rollouts += cfg.group_size;
  }
  const double inv_b = 1.0 / static_cast<double>(B);
  double norm2 = 0.0;
  for (size_t k = 0; k < P; ++k) {
    grad[k] *= inv_b;
    norm2 += grad[k] * grad[k];
  }
  stats.grad_norm = std::sqrt(norm2);
  stats.mean_reward /= static_cast<double>(rollouts);
  stats.mean_len /= static_cast<double>(rollouts);
  stats.no_box_frac /= static_cast<double>(rollouts);
  stats.zero_variance_frac *= inv_b;

  const double lr = lr_at(cfg, step_index);
  for (size_t k = 0; k < P; ++k) params.w[k] += lr * grad[k];
  return stats;
}

WarmupResult warmup(const PolicyParams& m0, const TaskSet& tasks, const GrpoConfig& cfg,
                    uint64_t seed, ExecMode mode,
                    const std::function<void(int, const PolicyParams&)>& on_step) {
  cfg.validate();
  if (cfg.steps > 0 && tasks.tasks.empty()) throw StageError("warmup: no tasks");
  WarmupResult result;
  result.policy = m0;
  result.trajectory.reserve(cfg.steps);

  std::vector<size_t> order(tasks.tasks.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = 0;
  uint64_t pass = 0;
  std::vector<Task> batch;
  for (int step = 0; step < cfg.steps; ++step) {
    batch.clear();
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor == 0) {
        Rng shuffle_rng(derive_seed(seed, {0x02de, pass}));
        shuffle_rng.shuffle(order);
        ++pass;
      }
      batch.push_back(tasks.tasks[order[cursor]]);
      cursor = (cursor + 1) % order.size();
    }
    StepStats stats = grpo_step(result.policy, batch, cfg, m0, step, seed, mode);
    result.trajectory.push_back(stats);
    if (on_step) on_step(step + 1, result.policy);
  }
  return result;
}

std::string warmup_stats_csv(std::span<const StepStats> trajectory) {
  std::string out = "step,mean_reward,zero_variance_frac,mean_len,grad_norm\n";
  for (const StepStats& s : trajectory) {
    out += std::to_string(s.step) + "," + fmt_double(s.mean_reward) + "," +
           fmt_double(s.zero_variance_frac) + "," + fmt_double(s.mean_len) + "," +
           fmt_double(s.grad_norm) + "\n";
  }
  return out;
}

}  // namespace g2d
