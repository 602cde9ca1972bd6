#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "g2d/parallel.hpp"
#include "g2d/policy.hpp"
#include "g2d/tasks.hpp"
#include "g2d/verifier.hpp"

namespace g2d {

struct ScoredRollout {
  Completion completion;
  int reward = 0;
  Failure failure = Failure::None;
};

struct RolloutGroup {
  std::string task_id;
  int level = 0;
  std::vector<ScoredRollout> rollouts;  // G' entries
  int correct_count = 0;

  double p_x() const {  // fraction of correct rollouts
    return rollouts.empty() ? 0.0 : static_cast<double>(correct_count) / rollouts.size();
  }
};

enum class GroupClass { Pairable, AllCorrect, AllWrong };

struct PreferencePair {
  std::string task_id;
  int level = 0;
  std::vector<int> prompt;
  std::vector<int> chosen;
  std::vector<int> rejected;
  double p_x = 0.0;
  int k_tag = 0;
};

struct HarvestSettings {
  int g_prime = 8;
  double temperature = 1.3;
  int max_len = 16;  // defaults larger than the warm-up budget
  double noise_rate = 0.0;

  void validate() const;
};

struct HarvestStats {
  struct Counts {
    int pairable = 0, all_correct = 0, all_wrong = 0;
    int total() const { return pairable + all_correct + all_wrong; }
  };
  Counts total;
  std::map<int, Counts> per_level;
  double rho = 0.0;           // pairable / prompts
  double harvest_pass1 = 0.0; // correct rollouts / all rollouts
  long correct_rollouts = 0;
  long total_rollouts = 0;
};

struct HarvestProvenance {
  int k = 0;
  int g_prime = 8;
  double temperature = 1.3;
  int max_len = 16;
  double noise_rate = 0.0;
  uint64_t seed = 0;
  std::string parent;       // set by subsample()
  long subsampled_to = -1;  // ditto
};

struct PreferenceDataset {
  std::vector<PreferencePair> pairs;
  HarvestProvenance provenance;
  HarvestStats stats;

  size_t size() const { return pairs.size(); }
};

RolloutGroup rollout_group(const PolicyParams& pi_k, const Task& task, int g_prime, double tau,
                           int max_len, Rng& rng);

GroupClass classify_group(const RolloutGroup& group);

// Flips each reward-1 rollout to (reward 0, no_box) independently with
// probability `rate`; the completion text is left intact, so a flipped
// rollout can later be drawn as a rejected completion even though it is
// actually correct.
RolloutGroup inject_format_noise(RolloutGroup group, double rate, Rng& rng);

// y+ uniform over correct rollouts, y- uniform over incorrect ones,
// independently. Throws NotPairable otherwise.
PreferencePair make_pair(const RolloutGroup& group, const Task& task, int k_tag, Rng& rng);

// Freezes pi_k and builds D_k: one pair per pairable prompt. Prompts are
// embarrassingly parallel; per-prompt rng streams derive from (seed, task
// id), so the result is independent of scheduling.
PreferenceDataset harvest_dataset(const PolicyParams& pi_k, const TaskSet& tasks,
                                  const HarvestSettings& settings, int k_tag, uint64_t seed,
                                  ExecMode mode, std::vector<RolloutGroup>* keep_groups = nullptr);

PreferenceDataset subsample(const PreferenceDataset& dataset, size_t n, Rng& rng);

std::string pairs_to_jsonl(const PreferenceDataset& dataset, const Vocab& vocab);
PreferenceDataset pairs_from_jsonl(const std::string& content, const Vocab& vocab);
void write_pairs(const PreferenceDataset& dataset, const Vocab& vocab,
                 const std::filesystem::path& path);
PreferenceDataset read_pairs(const std::filesystem::path& path, const Vocab& vocab);

std::string harvest_stats_to_json(const HarvestStats& stats);

// External rollout log ingest: one JSON object per line,
// {task_id, level, K, rewards:[0/1 x G']}. All records must share one G'.
struct ExternalGroupRecord {
  std::string task_id;
  int level = 0;
  int k = 0;
  std::vector<int> rewards;
};

std::vector<ExternalGroupRecord> parse_external_log(const std::string& content);
std::vector<ExternalGroupRecord> read_external_log(const std::filesystem::path& path);

// Emits the harvest's groups in the same schema, so a harvest sidecar can
// be re-analyzed by the ingest path.
std::string rollout_log_jsonl(std::span<const RolloutGroup> groups, int k);

}  // namespace g2d
