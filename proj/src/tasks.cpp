#include "g2d/tasks.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "g2d/errors.hpp"
#include "g2d/io.hpp"
#include "g2d/verifier.hpp"

namespace g2d {

using nlohmann::json;

Task gen_task(int level, const TaskGenConfig& cfg, Rng& rng, const std::string& id) {
  if (level < 1 || level > 5) throw ConfigError("task level out of range 1..5");
  const int n_ops = level + 1;
  ChainExpr chain;
  chain.operands.reserve(n_ops + 1);
  chain.ops.reserve(n_ops);
  for (int i = 0; i <= n_ops; ++i) {
    chain.operands.push_back(rng.next_int(cfg.operand_min, cfg.operand_max) % cfg.modulus);
    if (i < n_ops) {
      switch (rng.next_below(3)) {
        case 0: chain.ops.push_back(Op::Add); break;
        case 1: chain.ops.push_back(Op::Sub); break;
        default: chain.ops.push_back(Op::Mul); break;
      }
    }
  }
  Task task;
  task.id = id;
  task.level = level;
  task.prompt = render_prompt(chain, cfg.vocab());
  task.truth = std::to_string(eval_chain(chain, cfg.modulus));
  return task;
}

TaskSet make_dataset(const std::map<int, int>& mixture, uint64_t seed, const TaskGenConfig& cfg,
                     const std::string& id_prefix) {
  long total = 0;
  for (const auto& [level, count] : mixture) {
    if (count < 0) throw ConfigError("negative count for level " + std::to_string(level));
    if (level < 1 || level > 5) throw ConfigError("mixture level out of range 1..5");
    total += count;
  }
  if (total < 1) throw ConfigError("task mixture is empty");

  TaskSet set;
  set.mixture = mixture;
  set.seed = seed;
  set.tasks.reserve(total);
  size_t index = 0;
  for (const auto& [level, count] : mixture) {
    for (int i = 0; i < count; ++i, ++index) {
      Rng task_rng(derive_seed(seed, {0x7a51, index}));
      char id[32];
      std::snprintf(id, sizeof(id), "%s%05zu", id_prefix.c_str(), index);
      set.tasks.push_back(gen_task(level, cfg, task_rng, id));
    }
  }
  Rng shuffle_rng(derive_seed(seed, {0x5f1e, 0}));
  shuffle_rng.shuffle(set.tasks);
  return set;
}

std::string tasks_to_jsonl(const TaskSet& set, const TaskGenConfig& cfg) {
  const Vocab vocab = cfg.vocab();
  std::string out;
  for (const Task& t : set.tasks) {
    json j;
    j["id"] = t.id;
    j["level"] = t.level;
    j["prompt"] = vocab.render(t.prompt);
    j["truth"] = t.truth;
    out += j.dump();
    out += '\n';
  }
  return out;
}

TaskSet tasks_from_jsonl(const std::string& content, const TaskGenConfig& cfg) {
  const Vocab vocab = cfg.vocab();
  TaskSet set;
  long line_no = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    size_t end = content.find('\n', pos);
    if (end == std::string::npos) end = content.size();
    std::string line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IngestError("invalid JSON", line_no);
    try {
      Task t;
      t.id = j.at("id").get<std::string>();
      t.level = j.at("level").get<int>();
      t.prompt = vocab.tokenize(j.at("prompt").get<std::string>());
      t.truth = j.at("truth").get<std::string>();
      set.tasks.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw IngestError(e.what(), line_no);
    }
  }
  for (const Task& t : set.tasks) set.mixture[t.level]++;
  return set;
}

void write_tasks(const TaskSet& set, const TaskGenConfig& cfg, const std::filesystem::path& path) {
  atomic_write_file(path, tasks_to_jsonl(set, cfg));
}

TaskSet read_tasks(const std::filesystem::path& path, const TaskGenConfig& cfg) {
  return tasks_from_jsonl(read_file(path), cfg);
}

}  // namespace g2d
