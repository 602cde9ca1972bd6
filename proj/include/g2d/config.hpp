#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "g2d/dpo.hpp"
#include "g2d/grpo.hpp"
#include "g2d/harvest.hpp"
#include "g2d/policy.hpp"
#include "g2d/tasks.hpp"

namespace g2d {

struct EvalSettings {
  std::map<int, int> mixture = {{2, 150}, {3, 150}, {4, 150}};
  int replicas = 3;  // independent held-out task sets per run
  int max_len = 12;

  void validate() const;
};

// Full experiment description. Defaults follow the reference training
// recipe: G = 2, G' = 8, harvest temperature 1.3, beta = 0.1, 3 DPO epochs,
// K grid {0, 150, 300, 500, 700, 1000}.
struct ExperimentConfig {
  std::map<int, int> mixture = {{2, 500}, {3, 500}, {4, 500}};
  uint64_t task_seed = 20240901;
  TaskGenConfig task_gen;

  ArchConfig arch;
  GrpoConfig grpo;
  HarvestSettings harvest;
  std::string harvest_split = "train";  // "train" or "heldout"
  DpoConfig dpo;

  std::vector<int> k_grid = {0, 150, 300, 500, 700, 1000};
  EvalSettings eval;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string output_dir = "out";

  void validate() const;  // throws ConfigError
};

ExperimentConfig default_config();

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Hash of the canonical serialized form; recorded in run manifests.
uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace g2d
