#pragma once

#include <span>
#include <utility>
#include <vector>

#include "g2d/harvest.hpp"
#include "g2d/parallel.hpp"
#include "g2d/policy.hpp"

namespace g2d {

enum class PrefLoss { SigmoidDpo, Ipo };

struct DpoConfig {
  double beta = 0.1;
  int epochs = 3;
  double learning_rate = 0.05;
  PrefLoss loss = PrefLoss::SigmoidDpo;
  int batch_size = 16;
  uint64_t shuffle_seed = 0;
  bool length_normalize = false;

  void validate() const;  // throws ConfigError
};

// m = [log pi(y+|x) - log ref(y+|x)] - [log pi(y-|x) - log ref(y-|x)]
// using summed sequence log-probs (mean per token when length_normalize).
double pair_margin(const PolicyParams& pi, const PolicyParams& ref, const PreferencePair& pair,
                   bool length_normalize = false);

// loss = -log sigmoid(beta * m); analytic gradient wrt pi's parameters.
std::pair<double, std::vector<double>> dpo_loss(const PolicyParams& pi, const PolicyParams& ref,
                                                const PreferencePair& pair, double beta);

// loss = (m - 1/(2 beta))^2
std::pair<double, std::vector<double>> ipo_loss(const PolicyParams& pi, const PolicyParams& ref,
                                                const PreferencePair& pair, double beta);

// grad += scale * dloss/dparams; returns {loss, margin}.
std::pair<double, double> accumulate_pair_loss_grad(const PolicyParams& pi,
                                                    const PolicyParams& ref,
                                                    const PreferencePair& pair, double beta,
                                                    PrefLoss kind, bool length_normalize,
                                                    double scale, std::span<double> grad);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_margin = 0.0;
};

struct DpoResult {
  PolicyParams policy;
  std::vector<EpochStats> trace;  // one entry per epoch
};

// Offline preference optimization: the trainable policy starts from a fresh
// copy of m0 and the reference stays frozen at m0. Minibatch gradient
// descent, pair order reshuffled per epoch from (shuffle_seed, epoch).
// Pair gradients within a batch fan out in parallel; updates are serialized
// per batch. Throws StageError on an empty dataset.
DpoResult train_dpo(const PolicyParams& m0, const PreferenceDataset& dataset,
                    const DpoConfig& cfg, ExecMode mode);

std::string dpo_trace_csv(std::span<const EpochStats> trace);

}  // namespace g2d
