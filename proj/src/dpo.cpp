#include "g2d/dpo.hpp"

#include <cmath>
#include <numeric>

#include "g2d/errors.hpp"
#include "g2d/io.hpp"

namespace g2d {

void DpoConfig::validate() const {
  if (beta <= 0) throw ConfigError("dpo.beta must be > 0");
  if (epochs < 1) throw ConfigError("dpo.epochs must be >= 1");
  if (learning_rate <= 0) throw ConfigError("dpo.learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("dpo.batch_size must be >= 1");
}

double pair_margin(const PolicyParams& pi, const PolicyParams& ref, const PreferencePair& pair,
                   bool length_normalize) {
  const double chosen = seq_logprob(pi, pair.prompt, pair.chosen, length_normalize) -
                        seq_logprob(ref, pair.prompt, pair.chosen, length_normalize);
  const double rejected = seq_logprob(pi, pair.prompt, pair.rejected, length_normalize) -
                          seq_logprob(ref, pair.prompt, pair.rejected, length_normalize);
  return chosen - rejected;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double loss_of(PrefLoss kind, double m, double beta) {
  if (kind == PrefLoss::SigmoidDpo) {
    // -log sigmoid(beta m), written in a saturation-safe form
    const double z = beta * m;
    return z >= 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  }
  const double d = m - 1.0 / (2.0 * beta);
  return d * d;
}

double dloss_dm(PrefLoss kind, double m, double beta) {
  if (kind == PrefLoss::SigmoidDpo) return -beta * sigmoid(-beta * m);
  return 2.0 * (m - 1.0 / (2.0 * beta));
}

}  // namespace

std::pair<double, double> accumulate_pair_loss_grad(const PolicyParams& pi,
                                                    const PolicyParams& ref,
                                                    const PreferencePair& pair, double beta,
                                                    PrefLoss kind, bool length_normalize,
                                                    double scale, std::span<double> grad) {
  const double m = pair_margin(pi, ref, pair, length_normalize);
  const double loss = loss_of(kind, m, beta);
  const double coeff = scale * dloss_dm(kind, m, beta);
  double s_chosen = 1.0, s_rejected = 1.0;
  if (length_normalize) {
    if (!pair.chosen.empty()) s_chosen /= static_cast<double>(pair.chosen.size());
    if (!pair.rejected.empty()) s_rejected /= static_cast<double>(pair.rejected.size());
  }
  accumulate_grad_logprob(pi, pair.prompt, pair.chosen, coeff * s_chosen, grad);
  accumulate_grad_logprob(pi, pair.prompt, pair.rejected, -coeff * s_rejected, grad);
  return {loss, m};
}

std::pair<double, std::vector<double>> dpo_loss(const PolicyParams& pi, const PolicyParams& ref,
                                                const PreferencePair& pair, double beta) {
  if (beta <= 0) throw std::invalid_argument("beta must be > 0");
  std::vector<double> grad(pi.w.size(), 0.0);
  auto [loss, margin] =
      accumulate_pair_loss_grad(pi, ref, pair, beta, PrefLoss::SigmoidDpo, false, 1.0, grad);
  (void)margin;
  return {loss, std::move(grad)};
}

std::pair<double, std::vector<double>> ipo_loss(const PolicyParams& pi, const PolicyParams& ref,
                                                const PreferencePair& pair, double beta) {
  if (beta <= 0) throw std::invalid_argument("beta must be > 0");
  std::vector<double> grad(pi.w.size(), 0.0);
  auto [loss, margin] =
      accumulate_pair_loss_grad(pi, ref, pair, beta, PrefLoss::Ipo, false, 1.0, grad);
  (void)margin;
  return {loss, std::move(grad)};
}

DpoResult train_dpo(const PolicyParams& m0, const PreferenceDataset& dataset, const DpoConfig& cfg,
                    ExecMode mode) {
  cfg.validate();
  if (dataset.pairs.empty()) throw StageError("train_dpo: empty preference dataset");

  DpoResult result;
  result.policy = m0;  // fresh copy of M0; the reference below stays frozen
  const PolicyParams& ref = m0;
  const size_t P = m0.w.size();
  const size_t n = dataset.pairs.size();

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> slot_grads;
  std::vector<double> grad(P);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.shuffle_seed, {0xd90u, static_cast<uint64_t>(epoch)}));
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0, margin_sum = 0.0;

    for (size_t start = 0; start < n; start += cfg.batch_size) {
      const size_t bsz = std::min<size_t>(cfg.batch_size, n - start);
      slot_grads.resize(bsz);
      std::vector<std::pair<double, double>> lm(bsz);
      parallel_for(bsz, mode, [&](size_t i) {
        slot_grads[i].assign(P, 0.0);
        lm[i] = accumulate_pair_loss_grad(result.policy, ref, dataset.pairs[order[start + i]],
                                          cfg.beta, cfg.loss, cfg.length_normalize, 1.0,
                                          slot_grads[i]);
      });
      std::fill(grad.begin(), grad.end(), 0.0);
      for (size_t i = 0; i < bsz; ++i) {
        loss_sum += lm[i].first;
        margin_sum += lm[i].second;
        for (size_t k = 0; k < P; ++k) grad[k] += slot_grads[i][k];
      }
      const double inv = 1.0 / static_cast<double>(bsz);
      for (size_t k = 0; k < P; ++k) result.policy.w[k] -= cfg.learning_rate * inv * grad[k];
    }
    result.trace.push_back(
        {epoch, loss_sum / static_cast<double>(n), margin_sum / static_cast<double>(n)});
  }
  return result;
}

std::string dpo_trace_csv(std::span<const EpochStats> trace) {
  std::string out = "epoch,mean_loss,mean_margin\n";
  for (const EpochStats& e : trace) {
    out += std::to_string(e.epoch) + "," + fmt_double(e.mean_loss) + "," +
           fmt_double(e.mean_margin) + "\n";
  }
  return out;
}

}  // namespace g2d
