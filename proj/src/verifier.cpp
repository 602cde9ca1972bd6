#include "g2d/verifier.hpp"

#include <cctype>
#include <charconv>
#include <numeric>

#include "g2d/errors.hpp"

namespace g2d {

namespace {

std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

std::optional<long long> parse_ll(std::string_view s) {
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// "1,234,567" -> "1234567"; leaves anything that is not a well-formed
// thousands-grouped number untouched.
std::string strip_thousands(std::string_view s) {
  std::string_view body = s;
  std::string sign;
  if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
    sign = body[0];
    body.remove_prefix(1);
  }
  std::string_view frac;
  if (auto dot = body.find('.'); dot != std::string_view::npos) {
    frac = body.substr(dot);
    body = body.substr(0, dot);
  }
  size_t comma = body.find(',');
  if (comma == std::string_view::npos) return std::string(s);
  std::string_view head = body.substr(0, comma);
  if (head.empty() || head.size() > 3 || !all_digits(head)) return std::string(s);
  std::string digits(head);
  std::string_view rest = body.substr(comma);
  while (!rest.empty()) {
    if (rest.size() < 4 || rest[0] != ',' || !all_digits(rest.substr(1, 3))) {
      return std::string(s);
    }
    digits += rest.substr(1, 3);
    rest.remove_prefix(4);
  }
  if (!frac.empty() && (frac.size() < 2 || !all_digits(frac.substr(1)))) return std::string(s);
  return sign + digits + std::string(frac);
}

CanonicalAnswer make_rational(long long num, long long den) {
  CanonicalAnswer a;
  a.kind = CanonicalAnswer::Kind::Rational;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  long long g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  a.num = num;
  a.den = den;
  if (a.den == 1) a.kind = CanonicalAnswer::Kind::Integer;
  return a;
}

// \frac{a}{b} with integer arguments.
std::optional<CanonicalAnswer> try_frac(std::string_view s) {
  constexpr std::string_view kFrac = "\\frac{";
  if (s.substr(0, kFrac.size()) != kFrac) return std::nullopt;
  size_t p = kFrac.size();
  size_t close1 = s.find('}', p);
  if (close1 == std::string_view::npos) return std::nullopt;
  std::string_view a = s.substr(p, close1 - p);
  if (close1 + 1 >= s.size() || s[close1 + 1] != '{') return std::nullopt;
  if (s.back() != '}' || close1 + 2 > s.size() - 1) return std::nullopt;
  std::string_view b = s.substr(close1 + 2, s.size() - 1 - (close1 + 2));
  auto num = parse_ll(trim(a));
  auto den = parse_ll(trim(b));
  if (!num || !den || *den == 0) return std::nullopt;
  return make_rational(*num, *den);
}

std::optional<CanonicalAnswer> try_slash(std::string_view s) {
  size_t slash = s.find('/');
  if (slash == std::string_view::npos || s.find('/', slash + 1) != std::string_view::npos) {
    return std::nullopt;
  }
  auto num = parse_ll(trim(s.substr(0, slash)));
  auto den = parse_ll(trim(s.substr(slash + 1)));
  if (!num || !den || *den == 0) return std::nullopt;
  return make_rational(*num, *den);
}

std::optional<CanonicalAnswer> try_decimal(std::string_view s) {
  size_t dot = s.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  std::string_view int_part = s.substr(0, dot);
  std::string_view frac_part = s.substr(dot + 1);
  bool neg = false;
  if (!int_part.empty() && (int_part[0] == '-' || int_part[0] == '+')) {
    neg = int_part[0] == '-';
    int_part.remove_prefix(1);
  }
  if (int_part.empty() && frac_part.empty()) return std::nullopt;
  if (!int_part.empty() && !all_digits(int_part)) return std::nullopt;
  if (!frac_part.empty() && !all_digits(frac_part)) return std::nullopt;
  if (frac_part.size() > 15) return std::nullopt;  // keep den within long long

  long long num = 0;
  for (char c : int_part) num = num * 10 + (c - '0');
  long long den = 1;
  for (char c : frac_part) {
    num = num * 10 + (c - '0');
    den *= 10;
  }
  if (neg) num = -num;
  CanonicalAnswer a = make_rational(num, den);
  a.kind = CanonicalAnswer::Kind::Decimal;
  a.scale = static_cast<int>(frac_part.size());
  return a;
}

}  // namespace

bool CanonicalAnswer::equals(const CanonicalAnswer& other) const {
  if (parse_failed || other.parse_failed) return false;
  if (numeric() && other.numeric()) {
    // exact cross-kind comparison via rational lifting
    return static_cast<__int128>(num) * other.den == static_cast<__int128>(other.num) * den;
  }
  if (!numeric() && !other.numeric()) return text == other.text;
  return false;
}

std::optional<std::string> extract_boxed(std::string_view text) {
  constexpr std::string_view kOpen = "\\boxed{";
  std::optional<std::string> last;
  size_t pos = 0;
  while ((pos = text.find(kOpen, pos)) != std::string_view::npos) {
    size_t i = pos + kOpen.size();
    int depth = 1;
    for (; i < text.size(); ++i) {
      if (text[i] == '{') ++depth;
      else if (text[i] == '}' && --depth == 0) break;
    }
    if (i < text.size()) {  // balanced; truncated groups fall through
      last = std::string(text.substr(pos + kOpen.size(), i - (pos + kOpen.size())));
      pos = i + 1;
    } else {
      pos += kOpen.size();
    }
  }
  return last;
}

CanonicalAnswer canonicalize(std::string_view raw) {
  std::string_view s = trim(raw);
  // surrounding $...$ (inline math)
  while (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
    s = trim(s.substr(1, s.size() - 2));
  }
  if (s.empty()) {
    CanonicalAnswer a;
    a.parse_failed = true;
    return a;
  }
  std::string cleaned = strip_thousands(s);
  std::string_view c = cleaned;
  if (c.size() > 1 && c[0] == '+') c.remove_prefix(1);

  if (auto frac = try_frac(c)) return *frac;
  if (auto rat = try_slash(c)) return *rat;
  if (auto integer = parse_ll(c)) {
    CanonicalAnswer a;
    a.kind = CanonicalAnswer::Kind::Integer;
    a.num = *integer;
    a.den = 1;
    return a;
  }
  if (auto dec = try_decimal(c)) return *dec;

  // non-numeric fallback: normalized text, internal whitespace collapsed
  CanonicalAnswer a;
  a.kind = CanonicalAnswer::Kind::Literal;
  std::string norm;
  bool in_space = false;
  for (char ch : c) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      in_space = true;
      continue;
    }
    if (in_space && !norm.empty()) norm += ' ';
    in_space = false;
    norm += ch;
  }
  a.text = norm;
  return a;
}

VerifyOutcome verify(std::string_view completion, std::string_view truth) {
  CanonicalAnswer want = canonicalize(truth);
  if (want.parse_failed) throw ConfigError("ground truth does not canonicalize");
  auto payload = extract_boxed(completion);
  if (!payload) return {0, Failure::NoBox};
  CanonicalAnswer got = canonicalize(*payload);
  if (got.parse_failed) return {0, Failure::ParseFail};
  if (got.equals(want)) return {1, Failure::None};
  return {0, Failure::Mismatch};
}

const char* failure_name(Failure f) {
  switch (f) {
    case Failure::None: return "none";
    case Failure::NoBox: return "no_box";
    case Failure::ParseFail: return "parse_fail";
    default: return "mismatch";
  }
}

}  // namespace g2d
