#include "g2d/vocab.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include "g2d/errors.hpp"

namespace g2d {

std::string Vocab::token_text(int tok) const {
  if (!valid(tok)) throw std::invalid_argument("token out of vocabulary: " + std::to_string(tok));
  if (is_number(tok)) return std::to_string(tok);
  switch (tok - modulus) {
    case 0: return "+";
    case 1: return "-";
    case 2: return "*";
    case 3: return "=";
    case 4: return "\\boxed{";
    case 5: return "}";
    case 6: return "...";
    default: return "<eos>";
  }
}

std::optional<int> Vocab::parse_token(std::string_view word) const {
  if (word.empty()) return std::nullopt;
  if (word == "+") return add();
  if (word == "-") return sub();
  if (word == "*") return mul();
  if (word == "=") return cue();
  if (word == "\\boxed{") return box_open();
  if (word == "}") return box_close();
  if (word == "...") return filler();
  if (word == "<eos>") return eos();
  int value = 0;
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec == std::errc() && ptr == word.data() + word.size() && value >= 0 && value < modulus) {
    return value;
  }
  return std::nullopt;
}

std::string Vocab::render(std::span<const int> tokens) const {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += token_text(tokens[i]);
  }
  return out;
}

std::vector<int> Vocab::tokenize(std::string_view text) const {
  std::vector<int> toks;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) {
      auto tok = parse_token(text.substr(i, j - i));
      if (!tok) {
        throw IngestError("unknown token '" + std::string(text.substr(i, j - i)) + "'");
      }
      toks.push_back(*tok);
    }
    i = j;
  }
  return toks;
}

}  // namespace g2d
