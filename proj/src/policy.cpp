#include "g2d/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "g2d/errors.hpp"
#include "g2d/io.hpp"

namespace g2d {

using nlohmann::json;

namespace {

// Perception channels: one careful-but-depth-limited evaluator plus three
// cheap heuristics. Higher levels have longer chains, so every slip gets
// more chances to matter and the channels disagree more.
constexpr EvalStyle kChannelStyles[4] = {EvalStyle::DepthLimited, EvalStyle::SubAsAdd,
                                         EvalStyle::SkipFirst, EvalStyle::MulAsAdd};
constexpr int kDepthLimit = 4;

// Structured-init constants. The init policy follows the answer format
// (filler*, \boxed{, value, }, <eos>) and scores answer values by a roughly
// even blend of the perception channels; training reweights the blend.
constexpr double kChannelTrust[4] = {0.33, 0.39, 0.33, 0.39};
constexpr double kValueGate = 1.8;     // value units activate only right after \boxed{
constexpr double kNumGain = 10.0;      // answer logit per unit of value activation
constexpr double kOpenNumBoost = 4.0;  // generic number boost inside the box
constexpr double kNumAfterNum = -10.0;
constexpr double kNumAfterClose = -6.0;
constexpr double kFillFromCue = 6.0;
constexpr double kOpenFromCue = 4.5;
constexpr double kFillFromFill = -3.0;
constexpr double kOpenFromFill = 5.0;
constexpr double kCloseFromNum = 7.0;
constexpr double kEosFromClose = 14.0;
// in-box self-suppression; keeps bounded training drift from ever making
// "\boxed{" (or filler) a viable continuation inside an open box
constexpr double kOpenAfterOpen = -8.0;
constexpr double kOpenAfterNum = -8.0;
constexpr double kFillAfterOpen = -4.0;
constexpr double kEosAfterOpen = -2.0;
constexpr double kBiasNum = -2.7;
constexpr double kBiasOp = -6.0;
constexpr double kBiasFill = -0.5;
constexpr double kBiasOpen = -0.5;
constexpr double kBiasClose = -1.5;
constexpr double kBiasEos = -1.0;

// Rectified tanh. Gated-off hidden units sit at exactly zero, so they
// neither contribute to scores nor attract gradient outside their state.
double retanh(double x) { return x > 0 ? std::tanh(x) : 0.0; }
double retanh_deriv(double x, double h) { return x > 0 ? 1.0 - h * h : 0.0; }

struct Layout {
  int m, hidden, vocab, window, features;
  int w1, b1, w2, b2, total;
  // hidden control units
  int u_cue, u_fill, u_open, u_num, u_close;
  // feature offsets
  int len_off, win_off;

  explicit Layout(const ArchConfig& a) {
    m = a.modulus;
    hidden = a.hidden;
    vocab = a.vocab_size();
    window = a.window;
    features = a.feature_dim();
    w1 = 0;
    b1 = w1 + features * hidden;
    w2 = b1 + hidden;
    b2 = w2 + vocab * hidden;
    total = b2 + vocab;
    u_cue = m + 0;
    u_fill = m + 1;
    u_open = m + 2;
    u_num = m + 3;
    u_close = m + 4;
    len_off = 4 * m;
    win_off = 4 * m + 5;
  }
};

// Active features for one step: weighted evidence votes plus one-hot
// length and window slots.
void collect_features(const Layout& L, const PromptContext& ctx, std::span<const int> recent,
                      std::vector<std::pair<int, double>>& feats) {
  feats.clear();
  for (int c = 0; c < 4; ++c) feats.emplace_back(c * L.m + ctx.votes[c], ctx.confidence[c]);
  feats.emplace_back(L.len_off + ctx.len_index, 1.0);
  for (int j = 0; j < L.window; ++j) feats.emplace_back(L.win_off + j * L.vocab + recent[j], 1.0);
}

void softmax_inplace(std::vector<double>& scores, std::vector<double>& probs, double tau) {
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double z = 0.0;
  probs.resize(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    probs[i] = std::exp((scores[i] - mx) / tau);
    z += probs[i];
  }
  for (double& p : probs) p /= z;
}

// log softmax(scores)[tok] at tau = 1
double log_prob_of(const std::vector<double>& scores, int tok) {
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double z = 0.0;
  for (double s : scores) z += std::exp(s - mx);
  return scores[tok] - mx - std::log(z);
}

struct WindowState {
  std::vector<int> recent;  // recent[0] = latest token

  void init(std::span<const int> prompt, int window) {
    recent.resize(window);
    for (int j = 0; j < window; ++j) recent[j] = prompt[prompt.size() - 1 - j];
  }
  void push(int tok) {
    for (size_t j = recent.size(); j > 1; --j) recent[j - 1] = recent[j - 2];
    recent[0] = tok;
  }
};

void check_completion_tokens(const ArchConfig& arch, std::span<const int> completion) {
  const Vocab v = arch.vocab();
  for (int tok : completion) {
    if (!v.valid(tok)) {
      throw std::invalid_argument("completion token out of vocabulary: " + std::to_string(tok));
    }
  }
}

}  // namespace

int ArchConfig::n_params() const {
  Layout L(*this);
  return L.total;
}

void ArchConfig::validate() const {
  if (modulus < 2) throw ConfigError("modulus must be >= 2");
  if (hidden < modulus + 5) throw ConfigError("hidden must be >= modulus + 5");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (init_jitter < 0) throw ConfigError("init_jitter must be >= 0");
}

PolicyParams zero_policy(const ArchConfig& arch) {
  arch.validate();
  PolicyParams p;
  p.arch = arch;
  p.w.assign(arch.n_params(), 0.0);
  return p;
}

PolicyParams init_policy(const ArchConfig& arch, uint64_t seed) {
  PolicyParams p = zero_policy(arch);
  const Layout L(arch);
  const Vocab vocab = arch.vocab();
  auto w1 = [&](int feat, int unit) -> double& { return p.w[L.w1 + feat * L.hidden + unit]; };
  auto w2 = [&](int tok, int unit) -> double& { return p.w[L.w2 + tok * L.hidden + unit]; };

  // value units: gated channel blend, active only right after \boxed{
  for (int v = 0; v < L.m; ++v) {
    for (int c = 0; c < 4; ++c) w1(c * L.m + v, v) = kChannelTrust[c];
    w1(L.win_off + 0 * L.vocab + vocab.box_open(), v) = kValueGate;
    p.w[L.b1 + v] = -kValueGate;
    w2(v, v) = kNumGain;
  }
  // control units read the most recent token
  w1(L.win_off + vocab.cue(), L.u_cue) = 1.0;
  w1(L.win_off + vocab.filler(), L.u_fill) = 1.0;
  w1(L.win_off + vocab.box_open(), L.u_open) = 1.0;
  for (int v = 0; v < L.m; ++v) w1(L.win_off + v, L.u_num) = 1.0;
  w1(L.win_off + vocab.box_close(), L.u_close) = 1.0;

  for (int v = 0; v < L.m; ++v) {
    w2(v, L.u_open) = kOpenNumBoost;
    w2(v, L.u_num) = kNumAfterNum;
    w2(v, L.u_close) = kNumAfterClose;
    p.w[L.b2 + v] = kBiasNum;
  }
  w2(vocab.filler(), L.u_cue) = kFillFromCue;
  w2(vocab.filler(), L.u_fill) = kFillFromFill;
  w2(vocab.filler(), L.u_open) = kFillAfterOpen;
  w2(vocab.box_open(), L.u_cue) = kOpenFromCue;
  w2(vocab.box_open(), L.u_fill) = kOpenFromFill;
  w2(vocab.box_open(), L.u_open) = kOpenAfterOpen;
  w2(vocab.box_open(), L.u_num) = kOpenAfterNum;
  w2(vocab.box_close(), L.u_num) = kCloseFromNum;
  w2(vocab.eos(), L.u_close) = kEosFromClose;
  w2(vocab.eos(), L.u_open) = kEosAfterOpen;
  // units beyond the designed ones start dead (rectified activation keeps
  // them silent so they cannot drift into uncontrolled score channels)
  for (int j = L.u_close + 1; j < L.hidden; ++j) p.w[L.b1 + j] = -1.0;
  p.w[L.b2 + vocab.add()] = kBiasOp;
  p.w[L.b2 + vocab.sub()] = kBiasOp;
  p.w[L.b2 + vocab.mul()] = kBiasOp;
  p.w[L.b2 + vocab.cue()] = kBiasOp;
  p.w[L.b2 + vocab.filler()] = kBiasFill;
  p.w[L.b2 + vocab.box_open()] = kBiasOpen;
  p.w[L.b2 + vocab.box_close()] = kBiasClose;
  p.w[L.b2 + vocab.eos()] = kBiasEos;

  Rng rng(derive_seed(seed, {0x1417, 1}));
  for (double& x : p.w) x += arch.init_jitter * rng.next_normal();
  return p;
}

PromptContext encode_prompt(std::span<const int> prompt, const ArchConfig& arch) {
  auto chain = parse_prompt(prompt, arch.vocab());
  if (!chain) throw std::invalid_argument("prompt is not a well-formed chain");
  PromptContext ctx;
  const int n_ops = static_cast<int>(chain->ops.size());
  // the cheap heuristics only check their slip against the first two ops,
  // so a slip that fires late leaves them confidently wrong
  int early_subs = 0, early_muls = 0;
  for (int i = 0; i < std::min(n_ops, 2); ++i) {
    early_subs += chain->ops[i] == Op::Sub ? 1 : 0;
    early_muls += chain->ops[i] == Op::Mul ? 1 : 0;
  }
  for (int c = 0; c < 4; ++c) {
    ctx.votes[c] = eval_chain(*chain, arch.modulus, kChannelStyles[c], kDepthLimit);
  }
  ctx.confidence[0] = n_ops <= kDepthLimit ? 1.0 : std::pow(0.55, n_ops - kDepthLimit);
  ctx.confidence[1] = std::pow(0.72, early_subs);
  ctx.confidence[2] = std::pow(0.78, 1 + chain->operands[0] % 6);
  ctx.confidence[3] = std::pow(0.72, early_muls);
  ctx.len_index = std::clamp(n_ops - 2, 0, 4);
  return ctx;
}

void score_next(const PolicyParams& p, const PromptContext& ctx, std::span<const int> recent,
                StepBuffers& buf) {
  const Layout L(p.arch);
  collect_features(L, ctx, recent, buf.feats);

  buf.hpre.assign(p.w.begin() + L.b1, p.w.begin() + L.b1 + L.hidden);
  for (const auto& [f, val] : buf.feats) {
    const double* col = p.w.data() + L.w1 + f * L.hidden;
    for (int j = 0; j < L.hidden; ++j) buf.hpre[j] += val * col[j];
  }
  buf.h.resize(L.hidden);
  for (int j = 0; j < L.hidden; ++j) buf.h[j] = retanh(buf.hpre[j]);

  buf.scores.assign(p.w.begin() + L.b2, p.w.begin() + L.b2 + L.vocab);
  for (int t = 0; t < L.vocab; ++t) {
    const double* row = p.w.data() + L.w2 + t * L.hidden;
    double s = buf.scores[t];
    for (int j = 0; j < L.hidden; ++j) s += row[j] * buf.h[j];
    buf.scores[t] = s;
  }
}

double Completion::total_logprob() const {
  double t = 0.0;
  for (double lp : logprobs) t += lp;
  return t;
}

namespace {

Completion decode(const PolicyParams& p, std::span<const int> prompt, double temperature,
                  int max_len, Rng* rng) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  const PromptContext ctx = encode_prompt(prompt, p.arch);
  const int eos = p.arch.vocab().eos();
  WindowState win;
  win.init(prompt, p.arch.window);
  StepBuffers buf;
  Completion out;
  for (int t = 0; t < max_len; ++t) {
    score_next(p, ctx, win.recent, buf);
    int tok;
    if (rng) {
      softmax_inplace(buf.scores, buf.probs, temperature);
      double u = rng->next_unit();
      double acc = 0.0;
      tok = static_cast<int>(buf.probs.size()) - 1;
      for (size_t i = 0; i < buf.probs.size(); ++i) {
        acc += buf.probs[i];
        if (u < acc) {
          tok = static_cast<int>(i);
          break;
        }
      }
    } else {
      tok = 0;
      for (size_t i = 1; i < buf.scores.size(); ++i) {
        if (buf.scores[i] > buf.scores[tok]) tok = static_cast<int>(i);
      }
    }
    out.tokens.push_back(tok);
    out.logprobs.push_back(log_prob_of(buf.scores, tok));
    if (tok == eos) {
      out.terminal = true;
      break;
    }
    win.push(tok);
  }
  return out;
}

}  // namespace

Completion sample(const PolicyParams& p, std::span<const int> prompt, double temperature,
                  int max_len, Rng& rng) {
  if (temperature <= 0) throw std::invalid_argument("temperature must be > 0");
  return decode(p, prompt, temperature, max_len, &rng);
}

Completion greedy_decode(const PolicyParams& p, std::span<const int> prompt, int max_len) {
  return decode(p, prompt, 1.0, max_len, nullptr);
}

LogProb logprob(const PolicyParams& p, std::span<const int> prompt,
                std::span<const int> completion) {
  check_completion_tokens(p.arch, completion);
  const PromptContext ctx = encode_prompt(prompt, p.arch);
  WindowState win;
  win.init(prompt, p.arch.window);
  StepBuffers buf;
  LogProb out;
  for (int tok : completion) {
    score_next(p, ctx, win.recent, buf);
    double lp = log_prob_of(buf.scores, tok);
    out.per_token.push_back(lp);
    out.total += lp;
    win.push(tok);
  }
  return out;
}

double seq_logprob(const PolicyParams& p, std::span<const int> prompt,
                   std::span<const int> completion, bool length_normalize) {
  LogProb lp = logprob(p, prompt, completion);
  if (length_normalize && !completion.empty()) {
    return lp.total / static_cast<double>(completion.size());
  }
  return lp.total;
}

double accumulate_grad_logprob(const PolicyParams& p, std::span<const int> prompt,
                               std::span<const int> completion, double scale,
                               std::span<double> grad) {
  if (grad.size() != p.w.size()) throw std::invalid_argument("gradient buffer size mismatch");
  check_completion_tokens(p.arch, completion);
  const Layout L(p.arch);
  const PromptContext ctx = encode_prompt(prompt, p.arch);
  WindowState win;
  win.init(prompt, p.arch.window);
  StepBuffers buf;
  std::vector<double> dscores(L.vocab), dhpre(L.hidden);
  double total = 0.0;

  for (int tok : completion) {
    score_next(p, ctx, win.recent, buf);
    softmax_inplace(buf.scores, buf.probs, 1.0);
    total += log_prob_of(buf.scores, tok);

    // d logprob / d scores = onehot(tok) - probs
    for (int t = 0; t < L.vocab; ++t) dscores[t] = scale * ((t == tok ? 1.0 : 0.0) - buf.probs[t]);

    std::fill(dhpre.begin(), dhpre.end(), 0.0);
    for (int t = 0; t < L.vocab; ++t) {
      const double ds = dscores[t];
      if (ds == 0.0) continue;
      grad[L.b2 + t] += ds;
      const double* row = p.w.data() + L.w2 + t * L.hidden;
      double* grow = grad.data() + L.w2 + t * L.hidden;
      for (int j = 0; j < L.hidden; ++j) {
        grow[j] += ds * buf.h[j];
        dhpre[j] += ds * row[j];
      }
    }
    for (int j = 0; j < L.hidden; ++j) dhpre[j] *= retanh_deriv(buf.hpre[j], buf.h[j]);
    for (int j = 0; j < L.hidden; ++j) grad[L.b1 + j] += dhpre[j];
    for (const auto& [f, val] : buf.feats) {
      double* gcol = grad.data() + L.w1 + f * L.hidden;
      for (int j = 0; j < L.hidden; ++j) gcol[j] += val * dhpre[j];
    }
    win.push(tok);
  }
  return total;
}

std::vector<double> grad_logprob(const PolicyParams& p, std::span<const int> prompt,
                                 std::span<const int> completion) {
  std::vector<double> grad(p.w.size(), 0.0);
  accumulate_grad_logprob(p, prompt, completion, 1.0, grad);
  return grad;
}

std::string policy_to_string(const PolicyParams& p) {
  std::string out = PolicyParams::kVersion;
  out += '\n';
  json arch;
  arch["modulus"] = p.arch.modulus;
  arch["hidden"] = p.arch.hidden;
  arch["window"] = p.arch.window;
  arch["init_jitter"] = p.arch.init_jitter;
  out += arch.dump();
  out += '\n';
  out += std::to_string(p.w.size());
  out += '\n';
  for (double x : p.w) {
    out += fmt_double_exact(x);
    out += '\n';
  }
  return out;
}

PolicyParams policy_from_string(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line) || line != PolicyParams::kVersion) {
    throw StageError("unsupported policy snapshot version");
  }
  if (!std::getline(in, line)) throw StageError("policy snapshot missing header");
  json arch = json::parse(line, nullptr, false);
  if (arch.is_discarded()) throw StageError("policy snapshot header is not valid JSON");
  PolicyParams p;
  p.arch.modulus = arch.at("modulus").get<int>();
  p.arch.hidden = arch.at("hidden").get<int>();
  p.arch.window = arch.at("window").get<int>();
  p.arch.init_jitter = arch.at("init_jitter").get<double>();
  p.arch.validate();
  if (!std::getline(in, line)) throw StageError("policy snapshot missing count");
  size_t n = std::stoull(line);
  if (static_cast<int>(n) != p.arch.n_params()) {
    throw StageError("policy snapshot parameter count does not match architecture");
  }
  p.w.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw StageError("policy snapshot truncated");
    p.w.push_back(std::strtod(line.c_str(), nullptr));
  }
  return p;
}

void save_policy(const PolicyParams& p, const std::filesystem::path& path) {
  atomic_write_file(path, policy_to_string(p));
}

PolicyParams load_policy(const std::filesystem::path& path) {
  return policy_from_string(read_file(path));
}

}  // namespace g2d
