#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "g2d/chain.hpp"
#include "g2d/rng.hpp"
#include "g2d/vocab.hpp"

namespace g2d {

// Task generation knobs. Level L produces a chain of L+1 binary operations;
// the answer is reduced mod `modulus` so the answer token space stays small.
struct TaskGenConfig {
  int modulus = 97;
  int operand_min = 2;
  int operand_max = 12;

  Vocab vocab() const { return Vocab{modulus}; }
};

struct Task {
  std::string id;
  int level = 1;            // 1..5
  std::vector<int> prompt;  // token sequence ending with the answer cue
  std::string truth;        // canonical answer string
};

struct TaskSet {
  std::vector<Task> tasks;
  std::map<int, int> mixture;  // requested per-level counts
  uint64_t seed = 0;
};

Task gen_task(int level, const TaskGenConfig& cfg, Rng& rng, const std::string& id);

// Deterministic TaskSet with exactly the requested per-level counts,
// shuffled by the seed. Generation uses per-task derived seeds, so it can be
// parallelized without changing the result. Throws ConfigError on an empty
// or invalid mixture.
TaskSet make_dataset(const std::map<int, int>& mixture, uint64_t seed, const TaskGenConfig& cfg,
                     const std::string& id_prefix = "t");

std::string tasks_to_jsonl(const TaskSet& set, const TaskGenConfig& cfg);
TaskSet tasks_from_jsonl(const std::string& content, const TaskGenConfig& cfg);
void write_tasks(const TaskSet& set, const TaskGenConfig& cfg, const std::filesystem::path& path);
TaskSet read_tasks(const std::filesystem::path& path, const TaskGenConfig& cfg);

}  // namespace g2d
