#pragma once

#include <optional>
#include <span>
#include <vector>

#include "g2d/vocab.hpp"

namespace g2d {

enum class Op { Add, Sub, Mul };

// Left-associated arithmetic chain over Z_m:
//   ((a0 op1 a1) op2 a2) ... op_n a_n   (mod m)
struct ChainExpr {
  std::vector<int> operands;  // n+1 values in [0, m)
  std::vector<Op> ops;        // n ops
};

// Evaluation styles. Exact is the ground truth; the others are systematic
// slips and serve as the policy's imperfect perception channels (each one is
// a plausible wrong procedure that happens to be right whenever its slip
// does not affect the result).
enum class EvalStyle {
  Exact,
  DepthLimited,  // evaluates only the first `depth_limit` ops
  SubAsAdd,      // every '-' applied as '+'
  SkipFirst,     // starts the fold at the second operand
  MulAsAdd,      // every '*' applied as '+'
};

int eval_chain(const ChainExpr& chain, int modulus, EvalStyle style = EvalStyle::Exact,
               int depth_limit = 0);

// Prompt token form: a0 op1 a1 ... op_n a_n =
std::vector<int> render_prompt(const ChainExpr& chain, const Vocab& vocab);
std::optional<ChainExpr> parse_prompt(std::span<const int> prompt, const Vocab& vocab);

}  // namespace g2d
