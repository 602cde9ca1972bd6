#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "g2d/chain.hpp"
#include "g2d/rng.hpp"
#include "g2d/vocab.hpp"

namespace g2d {

// Two-layer perceptron policy over (prompt features, recent-token window
// features), softmax over the token vocabulary. Small enough for exact
// analytic gradients, expressive enough to learn the arithmetic-chain tasks.
//
// Prompt features are produced by a fixed perception encoder: four
// "procedure" channels each evaluate the prompt's chain with a different
// systematic slip (one of them depth-limited but otherwise exact) and vote
// for an answer value. Easy prompts are the ones where most procedures
// agree on the truth; training shifts which channels the scorer trusts.
struct ArchConfig {
  int modulus = 97;  // answer space; must match the task generator
  int hidden = 102;  // >= modulus + 5 (value units + control units)
  int window = 2;    // recent completion tokens fed back into the scorer
  double init_jitter = 0.01;

  Vocab vocab() const { return Vocab{modulus}; }
  int vocab_size() const { return modulus + 8; }
  int n_channels() const { return 4; }
  int feature_dim() const { return n_channels() * modulus + 5 + window * vocab_size(); }
  int n_params() const;
  void validate() const;  // throws ConfigError

  bool operator==(const ArchConfig&) const = default;
};

// Flat parameter vector. Layout: W1 [feature][hidden] | b1 [hidden] |
// W2 [vocab][hidden] | b2 [vocab]. Value semantics; snapshot/restore is a
// plain copy and is bit-exact.
struct PolicyParams {
  ArchConfig arch;
  std::vector<double> w;

  static constexpr const char* kVersion = "g2d-policy/1";
};

PolicyParams init_policy(const ArchConfig& arch, uint64_t seed);
PolicyParams zero_policy(const ArchConfig& arch);  // uniform next-token distribution

// Per-prompt output of the perception encoder. Each channel votes for an
// answer value with a confidence reflecting how exposed its slip is on
// this particular chain (e.g. sub-as-add confidence decays with the number
// of subtractions), so per-prompt difficulty varies continuously.
struct PromptContext {
  std::array<int, 4> votes{};        // per-channel answer vote, in [0, modulus)
  std::array<double, 4> confidence{};  // per-channel evidence weight in (0, 1]
  int len_index = 0;                 // chain-length one-hot slot, 0..4
};

// Throws std::invalid_argument if the prompt is not a well-formed chain.
PromptContext encode_prompt(std::span<const int> prompt, const ArchConfig& arch);

// Scratch buffers reused across steps.
struct StepBuffers {
  std::vector<double> hpre, h, scores, probs;
  std::vector<std::pair<int, double>> feats;  // active (feature, value) pairs
};

// Next-token scores given the prompt context and the most recent `window`
// tokens (recent[0] is the latest).
void score_next(const PolicyParams& p, const PromptContext& ctx, std::span<const int> recent,
                StepBuffers& buf);

struct Completion {
  std::vector<int> tokens;  // includes the stop token when terminal
  bool terminal = false;
  std::vector<double> logprobs;  // per token, under the policy's own measure (tau = 1)

  double total_logprob() const;
  int length() const { return static_cast<int>(tokens.size()); }
};

Completion sample(const PolicyParams& p, std::span<const int> prompt, double temperature,
                  int max_len, Rng& rng);
Completion greedy_decode(const PolicyParams& p, std::span<const int> prompt, int max_len);

struct LogProb {
  double total = 0.0;
  std::vector<double> per_token;
};

// Sum of per-token conditional log-probs; no length normalization.
LogProb logprob(const PolicyParams& p, std::span<const int> prompt,
                std::span<const int> completion);

// total/len when normalization is enabled (ablation flag).
double seq_logprob(const PolicyParams& p, std::span<const int> prompt,
                   std::span<const int> completion, bool length_normalize);

// grad += scale * d log pi(completion|prompt) / d params. Returns the total
// log-prob. grad.size() must equal p.w.size().
double accumulate_grad_logprob(const PolicyParams& p, std::span<const int> prompt,
                               std::span<const int> completion, double scale,
                               std::span<double> grad);

std::vector<double> grad_logprob(const PolicyParams& p, std::span<const int> prompt,
                                 std::span<const int> completion);

std::string policy_to_string(const PolicyParams& p);
PolicyParams policy_from_string(const std::string& content);
void save_policy(const PolicyParams& p, const std::filesystem::path& path);
PolicyParams load_policy(const std::filesystem::path& path);

}  // namespace g2d
