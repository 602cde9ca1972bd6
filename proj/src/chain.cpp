#include "g2d/chain.hpp"

#include <stdexcept>

namespace g2d {

namespace {

int apply(int acc, Op op, int rhs, int m) {
  long long a = acc, b = rhs;
  long long r;
  switch (op) {
    case Op::Add: r = a + b; break;
    case Op::Sub: r = a - b; break;
    default: r = a * b; break;
  }
  r %= m;
  if (r < 0) r += m;
  return static_cast<int>(r);
}

}  // namespace

int eval_chain(const ChainExpr& chain, int modulus, EvalStyle style, int depth_limit) {
  if (chain.operands.size() != chain.ops.size() + 1 || chain.operands.empty()) {
    throw std::invalid_argument("malformed chain");
  }
  size_t first = 0;
  if (style == EvalStyle::SkipFirst && chain.ops.size() >= 1) first = 1;

  int acc = chain.operands[first] % modulus;
  size_t applied = 0;
  for (size_t i = first; i < chain.ops.size(); ++i) {
    if (style == EvalStyle::DepthLimited && static_cast<int>(applied) >= depth_limit) break;
    Op op = chain.ops[i];
    if (style == EvalStyle::SubAsAdd && op == Op::Sub) op = Op::Add;
    if (style == EvalStyle::MulAsAdd && op == Op::Mul) op = Op::Add;
    acc = apply(acc, op, chain.operands[i + 1] % modulus, modulus);
    ++applied;
  }
  return acc;
}

std::vector<int> render_prompt(const ChainExpr& chain, const Vocab& vocab) {
  std::vector<int> toks;
  toks.reserve(chain.operands.size() * 2 + 1);
  for (size_t i = 0; i < chain.operands.size(); ++i) {
    if (i) {
      switch (chain.ops[i - 1]) {
        case Op::Add: toks.push_back(vocab.add()); break;
        case Op::Sub: toks.push_back(vocab.sub()); break;
        case Op::Mul: toks.push_back(vocab.mul()); break;
      }
    }
    toks.push_back(chain.operands[i]);
  }
  toks.push_back(vocab.cue());
  return toks;
}

std::optional<ChainExpr> parse_prompt(std::span<const int> prompt, const Vocab& vocab) {
  // Expected shape: NUM (OP NUM)* CUE, at least one op.
  if (prompt.size() < 4 || prompt.back() != vocab.cue()) return std::nullopt;
  ChainExpr chain;
  bool want_number = true;
  for (size_t i = 0; i + 1 < prompt.size(); ++i) {
    int tok = prompt[i];
    if (want_number) {
      if (!vocab.is_number(tok)) return std::nullopt;
      chain.operands.push_back(tok);
    } else {
      if (tok == vocab.add()) chain.ops.push_back(Op::Add);
      else if (tok == vocab.sub()) chain.ops.push_back(Op::Sub);
      else if (tok == vocab.mul()) chain.ops.push_back(Op::Mul);
      else return std::nullopt;
    }
    want_number = !want_number;
  }
  if (want_number || chain.ops.empty()) return std::nullopt;
  return chain;
}

}  // namespace g2d
