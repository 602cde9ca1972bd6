#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace g2d {

// Token space over a modulus-m arithmetic vocabulary.
//
//   [0, m)   number tokens, rendered as their decimal value
//   m + 0    "+"        m + 3    "="  (answer cue, last prompt token)
//   m + 1    "-"        m + 4    "\boxed{"
//   m + 2    "*"        m + 5    "}"
//   m + 6    "..."  (filler, models think-aloud padding)
//   m + 7    "<eos>" (stop token)
//
// Token sequences render as words joined by single spaces; the rendering is
// lossless, so splitting on spaces tokenizes it back.
struct Vocab {
  int modulus = 97;

  int size() const { return modulus + 8; }
  int add() const { return modulus + 0; }
  int sub() const { return modulus + 1; }
  int mul() const { return modulus + 2; }
  int cue() const { return modulus + 3; }
  int box_open() const { return modulus + 4; }
  int box_close() const { return modulus + 5; }
  int filler() const { return modulus + 6; }
  int eos() const { return modulus + 7; }

  bool is_number(int tok) const { return tok >= 0 && tok < modulus; }
  bool valid(int tok) const { return tok >= 0 && tok < size(); }

  std::string token_text(int tok) const;
  std::optional<int> parse_token(std::string_view word) const;

  std::string render(std::span<const int> tokens) const;
  // Throws IngestError on an unknown word.
  std::vector<int> tokenize(std::string_view text) const;
};

}  // namespace g2d
