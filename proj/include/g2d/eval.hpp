#pragma once

#include <map>

#include "g2d/parallel.hpp"
#include "g2d/policy.hpp"
#include "g2d/tasks.hpp"

namespace g2d {

struct EvalResult {
  double accuracy = 0.0;             // mean verifier reward under greedy decoding
  std::map<int, double> per_level;   // level -> accuracy
  std::map<int, int> level_counts;   // level -> number of tasks
  int n = 0;
};

// pass@1: one greedy (argmax) decode per task, scored by the verifier.
EvalResult pass_at_1(const PolicyParams& policy, const TaskSet& tasks, int max_len,
                     ExecMode mode = ExecMode::Parallel);

}  // namespace g2d
