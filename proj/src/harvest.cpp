#include "g2d/harvest.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "g2d/errors.hpp"
#include "g2d/io.hpp"

namespace g2d {

using nlohmann::json;

void HarvestSettings::validate() const {
  if (g_prime < 2) throw ConfigError("harvest.g_prime must be >= 2");
  if (temperature <= 0) throw ConfigError("harvest.temperature must be > 0");
  if (max_len < 1) throw ConfigError("harvest.max_len must be >= 1");
  if (noise_rate < 0 || noise_rate > 1) throw ConfigError("harvest.noise_rate must be in [0,1]");
}

RolloutGroup rollout_group(const PolicyParams& pi_k, const Task& task, int g_prime, double tau,
                           int max_len, Rng& rng) {
  if (g_prime < 2) throw std::invalid_argument("g_prime must be >= 2");
  const Vocab vocab = pi_k.arch.vocab();
  RolloutGroup group;
  group.task_id = task.id;
  group.level = task.level;
  group.rollouts.reserve(g_prime);
  for (int g = 0; g < g_prime; ++g) {
    ScoredRollout r;
    r.completion = sample(pi_k, task.prompt, tau, max_len, rng);
    VerifyOutcome out = verify(vocab.render(r.completion.tokens), task.truth);
    r.reward = out.reward;
    r.failure = out.failure;
    group.correct_count += out.reward;
    group.rollouts.push_back(std::move(r));
  }
  return group;
}

GroupClass classify_group(const RolloutGroup& group) {
  if (group.correct_count == 0) return GroupClass::AllWrong;
  if (group.correct_count == static_cast<int>(group.rollouts.size())) return GroupClass::AllCorrect;
  return GroupClass::Pairable;
}

RolloutGroup inject_format_noise(RolloutGroup group, double rate, Rng& rng) {
  if (rate < 0 || rate > 1) throw std::invalid_argument("noise rate must be in [0,1]");
  if (rate == 0) return group;
  for (ScoredRollout& r : group.rollouts) {
    if (r.reward == 1 && rng.next_unit() < rate) {
      r.reward = 0;
      r.failure = Failure::NoBox;
      --group.correct_count;
    }
  }
  return group;
}

PreferencePair make_pair(const RolloutGroup& group, const Task& task, int k_tag, Rng& rng) {
  if (classify_group(group) != GroupClass::Pairable) {
    throw NotPairable("group for task " + group.task_id + " has no contrastive signal");
  }
  std::vector<int> correct, wrong;
  for (size_t i = 0; i < group.rollouts.size(); ++i) {
    (group.rollouts[i].reward == 1 ? correct : wrong).push_back(static_cast<int>(i));
  }
  PreferencePair pair;
  pair.task_id = group.task_id;
  pair.level = group.level;
  pair.prompt = task.prompt;
  pair.chosen = group.rollouts[correct[rng.next_below(correct.size())]].completion.tokens;
  pair.rejected = group.rollouts[wrong[rng.next_below(wrong.size())]].completion.tokens;
  pair.p_x = group.p_x();
  pair.k_tag = k_tag;
  return pair;
}

PreferenceDataset harvest_dataset(const PolicyParams& pi_k, const TaskSet& tasks,
                                  const HarvestSettings& settings, int k_tag, uint64_t seed,
                                  ExecMode mode, std::vector<RolloutGroup>* keep_groups) {
  settings.validate();
  const size_t n = tasks.tasks.size();
  std::vector<RolloutGroup> groups(n);
  parallel_for(n, mode, [&](size_t i) {
    const Task& task = tasks.tasks[i];
    Rng rng(derive_seed(seed, {0xa210u, hash_str(task.id)}));
    RolloutGroup g = rollout_group(pi_k, task, settings.g_prime, settings.temperature,
                                   settings.max_len, rng);
    if (settings.noise_rate > 0) {
      Rng noise_rng(derive_seed(seed, {0xf01u, hash_str(task.id)}));
      g = inject_format_noise(std::move(g), settings.noise_rate, noise_rng);
    }
    groups[i] = std::move(g);
  });

  PreferenceDataset ds;
  ds.provenance = HarvestProvenance{k_tag,       settings.g_prime, settings.temperature,
                                    settings.max_len, settings.noise_rate, seed,
                                    "",          -1};
  for (size_t i = 0; i < n; ++i) {
    const RolloutGroup& g = groups[i];
    auto& lvl = ds.stats.per_level[g.level];
    switch (classify_group(g)) {
      case GroupClass::Pairable: {
        ++lvl.pairable;
        Rng pair_rng(derive_seed(seed, {0xbe11u, hash_str(g.task_id)}));
        ds.pairs.push_back(make_pair(g, tasks.tasks[i], k_tag, pair_rng));
        break;
      }
      case GroupClass::AllCorrect: ++lvl.all_correct; break;
      case GroupClass::AllWrong: ++lvl.all_wrong; break;
    }
    ds.stats.correct_rollouts += g.correct_count;
    ds.stats.total_rollouts += static_cast<long>(g.rollouts.size());
  }
  for (const auto& [level, counts] : ds.stats.per_level) {
    ds.stats.total.pairable += counts.pairable;
    ds.stats.total.all_correct += counts.all_correct;
    ds.stats.total.all_wrong += counts.all_wrong;
  }
  ds.stats.rho = n > 0 ? static_cast<double>(ds.stats.total.pairable) / static_cast<double>(n) : 0.0;
  ds.stats.harvest_pass1 = ds.stats.total_rollouts > 0
                               ? static_cast<double>(ds.stats.correct_rollouts) /
                                     static_cast<double>(ds.stats.total_rollouts)
                               : 0.0;
  if (keep_groups) *keep_groups = std::move(groups);
  return ds;
}

PreferenceDataset subsample(const PreferenceDataset& dataset, size_t n, Rng& rng) {
  if (n > dataset.pairs.size()) {
    throw std::invalid_argument("subsample size exceeds dataset size");
  }
  // uniform without replacement, order preserved
  std::vector<size_t> idx(dataset.pairs.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());

  PreferenceDataset out;
  out.provenance = dataset.provenance;
  out.provenance.parent = "harvest-k" + std::to_string(dataset.provenance.k) + "-n" +
                          std::to_string(dataset.pairs.size());
  out.provenance.subsampled_to = static_cast<long>(n);
  out.stats = dataset.stats;
  out.pairs.reserve(n);
  for (size_t i : idx) out.pairs.push_back(dataset.pairs[i]);
  return out;
}

std::string pairs_to_jsonl(const PreferenceDataset& dataset, const Vocab& vocab) {
  json prov;
  prov["k"] = dataset.provenance.k;
  prov["g_prime"] = dataset.provenance.g_prime;
  prov["temperature"] = dataset.provenance.temperature;
  prov["max_len"] = dataset.provenance.max_len;
  prov["noise_rate"] = dataset.provenance.noise_rate;
  prov["seed"] = dataset.provenance.seed;
  if (!dataset.provenance.parent.empty()) {
    prov["parent"] = dataset.provenance.parent;
    prov["subsampled_to"] = dataset.provenance.subsampled_to;
  }
  std::string out;
  for (const PreferencePair& p : dataset.pairs) {
    json j;
    j["task_id"] = p.task_id;
    j["level"] = p.level;
    j["prompt"] = vocab.render(p.prompt);
    j["chosen"] = vocab.render(p.chosen);
    j["rejected"] = vocab.render(p.rejected);
    j["p_x"] = p.p_x;
    j["K"] = p.k_tag;
    j["provenance"] = prov;
    out += j.dump();
    out += '\n';
  }
  return out;
}

PreferenceDataset pairs_from_jsonl(const std::string& content, const Vocab& vocab) {
  PreferenceDataset ds;
  long line_no = 0;
  size_t pos = 0;
  bool have_prov = false;
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
      PreferencePair p;
      p.task_id = j.at("task_id").get<std::string>();
      p.level = j.at("level").get<int>();
      p.prompt = vocab.tokenize(j.at("prompt").get<std::string>());
      p.chosen = vocab.tokenize(j.at("chosen").get<std::string>());
      p.rejected = vocab.tokenize(j.at("rejected").get<std::string>());
      p.p_x = j.at("p_x").get<double>();
      p.k_tag = j.at("K").get<int>();
      if (!have_prov && j.contains("provenance")) {
        const json& prov = j["provenance"];
        ds.provenance.k = prov.value("k", 0);
        ds.provenance.g_prime = prov.value("g_prime", 8);
        ds.provenance.temperature = prov.value("temperature", 1.3);
        ds.provenance.max_len = prov.value("max_len", 16);
        ds.provenance.noise_rate = prov.value("noise_rate", 0.0);
        ds.provenance.seed = prov.value("seed", uint64_t{0});
        ds.provenance.parent = prov.value("parent", "");
        ds.provenance.subsampled_to = prov.value("subsampled_to", -1L);
        have_prov = true;
      }
      ds.pairs.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw IngestError(e.what(), line_no);
    }
  }
  return ds;
}

void write_pairs(const PreferenceDataset& dataset, const Vocab& vocab,
                 const std::filesystem::path& path) {
  atomic_write_file(path, pairs_to_jsonl(dataset, vocab));
}

PreferenceDataset read_pairs(const std::filesystem::path& path, const Vocab& vocab) {
  return pairs_from_jsonl(read_file(path), vocab);
}

std::string harvest_stats_to_json(const HarvestStats& stats) {
  json j;
  j["prompts"] = stats.total.total();
  j["pairable"] = stats.total.pairable;
  j["all_correct"] = stats.total.all_correct;
  j["all_wrong"] = stats.total.all_wrong;
  j["rho"] = stats.rho;
  j["harvest_pass1"] = stats.harvest_pass1;
  j["correct_rollouts"] = stats.correct_rollouts;
  j["total_rollouts"] = stats.total_rollouts;
  json levels = json::object();
  for (const auto& [level, c] : stats.per_level) {
    json row;
    row["n"] = c.total();
    row["pairable"] = c.pairable;
    row["all_correct"] = c.all_correct;
    row["all_wrong"] = c.all_wrong;
    levels[std::to_string(level)] = row;
  }
  j["per_level"] = levels;
  return j.dump(2) + "\n";
}

std::vector<ExternalGroupRecord> parse_external_log(const std::string& content) {
  std::vector<ExternalGroupRecord> records;
  long line_no = 0;
  size_t pos = 0;
  size_t g_prime = 0;
  while (pos < content.size()) {
    size_t end = content.find('\n', pos);
    if (end == std::string::npos) end = content.size();
    std::string line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IngestError("invalid JSON", line_no);
    ExternalGroupRecord rec;
    try {
      rec.task_id = j.at("task_id").get<std::string>();
      rec.level = j.at("level").get<int>();
      rec.k = j.at("K").get<int>();
      for (const json& r : j.at("rewards")) {
        int v = r.get<int>();
        if (v != 0 && v != 1) throw IngestError("rewards must be 0 or 1", line_no);
        rec.rewards.push_back(v);
      }
    } catch (const json::exception& e) {
      throw IngestError(e.what(), line_no);
    }
    if (rec.rewards.size() < 2) throw IngestError("rewards must have G' >= 2 entries", line_no);
    if (g_prime == 0) {
      g_prime = rec.rewards.size();
    } else if (rec.rewards.size() != g_prime) {
      throw IngestError("mixed G' across records (" + std::to_string(rec.rewards.size()) +
                            " vs " + std::to_string(g_prime) + ")",
                        line_no);
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw IngestError("log contains no records");
  return records;
}

std::vector<ExternalGroupRecord> read_external_log(const std::filesystem::path& path) {
  return parse_external_log(read_file(path));
}

std::string rollout_log_jsonl(std::span<const RolloutGroup> groups, int k) {
  std::string out;
  for (const RolloutGroup& g : groups) {
    json j;
    j["task_id"] = g.task_id;
    j["level"] = g.level;
    j["K"] = k;
    json rewards = json::array();
    for (const ScoredRollout& r : g.rollouts) rewards.push_back(r.reward);
    j["rewards"] = rewards;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace g2d
