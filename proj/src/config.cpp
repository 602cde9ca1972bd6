#include "g2d/config.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "g2d/errors.hpp"
#include "g2d/io.hpp"

namespace g2d {

using nlohmann::json;

void EvalSettings::validate() const {
  long total = 0;
  for (const auto& [level, count] : mixture) {
    if (level < 1 || level > 5) throw ConfigError("eval level out of range 1..5");
    if (count < 0) throw ConfigError("eval mixture counts must be >= 0");
    total += count;
  }
  if (total < 1) throw ConfigError("eval mixture is empty");
  if (replicas < 1) throw ConfigError("eval.replicas must be >= 1");
  if (max_len < 1) throw ConfigError("eval.max_len must be >= 1");
}

void ExperimentConfig::validate() const {
  long total = 0;
  for (const auto& [level, count] : mixture) {
    if (level < 1 || level > 5) throw ConfigError("task level out of range 1..5");
    if (count < 0) throw ConfigError("mixture counts must be >= 0");
    total += count;
  }
  if (total < 1) throw ConfigError("task mixture is empty");
  if (task_gen.modulus != arch.modulus) {
    throw ConfigError("task modulus and policy modulus must match");
  }
  if (task_gen.operand_min < 0 || task_gen.operand_max < task_gen.operand_min) {
    throw ConfigError("invalid operand range");
  }
  arch.validate();
  grpo.validate();
  harvest.validate();
  dpo.validate();
  eval.validate();
  if (harvest_split != "train" && harvest_split != "heldout") {
    throw ConfigError("harvest_split must be 'train' or 'heldout'");
  }
  if (k_grid.empty()) throw ConfigError("k_grid must not be empty");
  for (size_t i = 0; i < k_grid.size(); ++i) {
    if (k_grid[i] < 0) throw ConfigError("k_grid entries must be >= 0");
    if (i > 0 && k_grid[i] <= k_grid[i - 1]) {
      throw ConfigError("k_grid must be sorted ascending with unique entries");
    }
  }
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

namespace {

json mixture_to_json(const std::map<int, int>& mixture) {
  json j = json::object();
  for (const auto& [level, count] : mixture) j[std::to_string(level)] = count;
  return j;
}

std::map<int, int> mixture_from_json(const json& j) {
  std::map<int, int> m;
  for (auto it = j.begin(); it != j.end(); ++it) {
    m[std::stoi(it.key())] = it.value().get<int>();
  }
  return m;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["tasks"]["mixture"] = mixture_to_json(cfg.mixture);
  j["tasks"]["seed"] = cfg.task_seed;
  j["tasks"]["modulus"] = cfg.task_gen.modulus;
  j["tasks"]["operand_min"] = cfg.task_gen.operand_min;
  j["tasks"]["operand_max"] = cfg.task_gen.operand_max;

  j["policy"]["modulus"] = cfg.arch.modulus;
  j["policy"]["hidden"] = cfg.arch.hidden;
  j["policy"]["window"] = cfg.arch.window;
  j["policy"]["init_jitter"] = cfg.arch.init_jitter;

  j["grpo"]["group_size"] = cfg.grpo.group_size;
  j["grpo"]["temperature"] = cfg.grpo.temperature;
  j["grpo"]["learning_rate"] = cfg.grpo.learning_rate;
  j["grpo"]["batch_size"] = cfg.grpo.batch_size;
  j["grpo"]["max_completion_len"] = cfg.grpo.max_completion_len;
  j["grpo"]["advantage_epsilon"] = cfg.grpo.advantage_epsilon;
  j["grpo"]["kl_coef"] = cfg.grpo.kl_coef;
  j["grpo"]["lr_schedule"] = cfg.grpo.schedule == LrSchedule::Cosine ? "cosine" : "constant";
  j["grpo"]["length_normalize"] = cfg.grpo.length_normalize;

  j["harvest"]["g_prime"] = cfg.harvest.g_prime;
  j["harvest"]["temperature"] = cfg.harvest.temperature;
  j["harvest"]["max_len"] = cfg.harvest.max_len;
  j["harvest"]["noise_rate"] = cfg.harvest.noise_rate;
  j["harvest"]["split"] = cfg.harvest_split;

  j["dpo"]["beta"] = cfg.dpo.beta;
  j["dpo"]["epochs"] = cfg.dpo.epochs;
  j["dpo"]["learning_rate"] = cfg.dpo.learning_rate;
  j["dpo"]["loss"] = cfg.dpo.loss == PrefLoss::Ipo ? "ipo" : "sigmoid_dpo";
  j["dpo"]["batch_size"] = cfg.dpo.batch_size;
  j["dpo"]["length_normalize"] = cfg.dpo.length_normalize;

  j["k_grid"] = cfg.k_grid;

  j["eval"]["mixture"] = mixture_to_json(cfg.eval.mixture);
  j["eval"]["replicas"] = cfg.eval.replicas;
  j["eval"]["max_len"] = cfg.eval.max_len;

  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  ExperimentConfig cfg;
  try {
    if (j.contains("tasks")) {
      const json& t = j["tasks"];
      if (t.contains("mixture")) cfg.mixture = mixture_from_json(t["mixture"]);
      cfg.task_seed = t.value("seed", cfg.task_seed);
      cfg.task_gen.modulus = t.value("modulus", cfg.task_gen.modulus);
      cfg.task_gen.operand_min = t.value("operand_min", cfg.task_gen.operand_min);
      cfg.task_gen.operand_max = t.value("operand_max", cfg.task_gen.operand_max);
    }
    if (j.contains("policy")) {
      const json& p = j["policy"];
      cfg.arch.modulus = p.value("modulus", cfg.task_gen.modulus);
      cfg.arch.hidden = p.value("hidden", cfg.arch.hidden);
      cfg.arch.window = p.value("window", cfg.arch.window);
      cfg.arch.init_jitter = p.value("init_jitter", cfg.arch.init_jitter);
    } else {
      cfg.arch.modulus = cfg.task_gen.modulus;
    }
    if (j.contains("grpo")) {
      const json& g = j["grpo"];
      cfg.grpo.group_size = g.value("group_size", cfg.grpo.group_size);
      cfg.grpo.temperature = g.value("temperature", cfg.grpo.temperature);
      cfg.grpo.learning_rate = g.value("learning_rate", cfg.grpo.learning_rate);
      cfg.grpo.batch_size = g.value("batch_size", cfg.grpo.batch_size);
      cfg.grpo.max_completion_len = g.value("max_completion_len", cfg.grpo.max_completion_len);
      cfg.grpo.advantage_epsilon = g.value("advantage_epsilon", cfg.grpo.advantage_epsilon);
      cfg.grpo.kl_coef = g.value("kl_coef", cfg.grpo.kl_coef);
      std::string sched = g.value("lr_schedule", std::string("constant"));
      if (sched == "cosine") cfg.grpo.schedule = LrSchedule::Cosine;
      else if (sched == "constant") cfg.grpo.schedule = LrSchedule::Constant;
      else throw ConfigError("unknown lr_schedule: " + sched);
      cfg.grpo.length_normalize = g.value("length_normalize", cfg.grpo.length_normalize);
    }
    if (j.contains("harvest")) {
      const json& h = j["harvest"];
      cfg.harvest.g_prime = h.value("g_prime", cfg.harvest.g_prime);
      cfg.harvest.temperature = h.value("temperature", cfg.harvest.temperature);
      cfg.harvest.max_len = h.value("max_len", cfg.harvest.max_len);
      cfg.harvest.noise_rate = h.value("noise_rate", cfg.harvest.noise_rate);
      cfg.harvest_split = h.value("split", cfg.harvest_split);
    }
    if (j.contains("dpo")) {
      const json& d = j["dpo"];
      cfg.dpo.beta = d.value("beta", cfg.dpo.beta);
      cfg.dpo.epochs = d.value("epochs", cfg.dpo.epochs);
      cfg.dpo.learning_rate = d.value("learning_rate", cfg.dpo.learning_rate);
      std::string loss = d.value("loss", std::string("sigmoid_dpo"));
      if (loss == "ipo") cfg.dpo.loss = PrefLoss::Ipo;
      else if (loss == "sigmoid_dpo") cfg.dpo.loss = PrefLoss::SigmoidDpo;
      else throw ConfigError("unknown dpo loss: " + loss);
      cfg.dpo.batch_size = d.value("batch_size", cfg.dpo.batch_size);
      cfg.dpo.length_normalize = d.value("length_normalize", cfg.dpo.length_normalize);
    }
    if (j.contains("k_grid")) cfg.k_grid = j["k_grid"].get<std::vector<int>>();
    if (j.contains("eval")) {
      const json& e = j["eval"];
      if (e.contains("mixture")) cfg.eval.mixture = mixture_from_json(e["mixture"]);
      cfg.eval.replicas = e.value("replicas", cfg.eval.replicas);
      cfg.eval.max_len = e.value("max_len", cfg.eval.max_len);
    }
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<uint64_t>>();
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(text);
}

uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a(config_to_json(cfg)); }

}  // namespace g2d
