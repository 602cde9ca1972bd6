#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace g2d {

// Canonical form of a final answer. Numeric kinds all reduce to an exact
// rational (reduced, positive denominator) so 0.5, 1/2 and \frac{1}{2}
// compare equal; anything non-numeric is kept as normalized text.
struct CanonicalAnswer {
  enum class Kind { Integer, Rational, Decimal, Literal };
  Kind kind = Kind::Literal;
  long long num = 0;  // reduced rational value (den > 0) for numeric kinds
  long long den = 1;
  int scale = 0;           // digits after the point, Decimal only
  std::string text;        // normalized payload, Literal only
  bool parse_failed = false;  // empty payload after stripping

  bool numeric() const { return !parse_failed && kind != Kind::Literal; }
  bool equals(const CanonicalAnswer& other) const;
};

enum class Failure { None, NoBox, ParseFail, Mismatch };

struct VerifyOutcome {
  int reward = 0;  // exactly 0 or 1
  Failure failure = Failure::None;
};

// Contents of the last balanced \boxed{...} group, brace nesting preserved.
// nullopt if no balanced group exists (including truncation mid-group).
std::optional<std::string> extract_boxed(std::string_view text);

CanonicalAnswer canonicalize(std::string_view raw);

// Binary verifiable reward. Throws ConfigError if the ground truth itself
// does not canonicalize.
VerifyOutcome verify(std::string_view completion, std::string_view truth);

const char* failure_name(Failure f);

}  // namespace g2d
