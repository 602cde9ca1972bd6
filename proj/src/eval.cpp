#include "g2d/eval.hpp"

#include "g2d/verifier.hpp"

namespace g2d {

EvalResult pass_at_1(const PolicyParams& policy, const TaskSet& tasks, int max_len,
                     ExecMode mode) {
  const Vocab vocab = policy.arch.vocab();
  const size_t n = tasks.tasks.size();
  std::vector<int> rewards(n, 0);
  parallel_for(n, mode, [&](size_t i) {
    const Task& t = tasks.tasks[i];
    Completion c = greedy_decode(policy, t.prompt, max_len);
    rewards[i] = verify(vocab.render(c.tokens), t.truth).reward;
  });

  EvalResult res;
  res.n = static_cast<int>(n);
  std::map<int, int> correct;
  for (size_t i = 0; i < n; ++i) {
    res.level_counts[tasks.tasks[i].level]++;
    correct[tasks.tasks[i].level] += rewards[i];
  }
  long total = 0;
  for (const auto& [level, count] : res.level_counts) {
    res.per_level[level] = count > 0 ? static_cast<double>(correct[level]) / count : 0.0;
    total += correct[level];
  }
  res.accuracy = n > 0 ? static_cast<double>(total) / static_cast<double>(n) : 0.0;
  return res;
}

}  // namespace g2d
