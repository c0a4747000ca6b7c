#include "semgest/text/tokenizer.hpp"

#include "semgest/error.hpp"

namespace semgest::text {
namespace {

bool word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

TokenizedText tokenize(std::string_view text, std::string text_id) {
  TokenizedText out;
  out.text_id = std::move(text_id);
  std::string current;
  auto flush = [&] {
    if (!current.empty() && out.tokens.size() < kMaxTokens) out.tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (word_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                             : static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  if (out.tokens.empty()) throw ValidationError("tokenize: text contains no words");
  out.mask.assign(kMaxTokens, false);
  for (std::size_t i = 0; i < out.tokens.size(); ++i) out.mask[i] = true;
  return out;
}

std::size_t count_words(std::string_view text) {
  std::size_t count = 0;
  bool inside = false;
  for (unsigned char c : text) {
    const bool w = word_byte(c);
    if (w && !inside) ++count;
    inside = w;
  }
  return count;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::vector<std::vector<std::string>> segment(const std::vector<std::string>& tokens,
                                              std::size_t group) {
  if (group == 0) throw ValidationError("segment: group size must be positive");
  if (tokens.empty()) throw ValidationError("segment: no tokens");
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < tokens.size(); i += group) {
    const std::size_t stop = std::min(tokens.size(), i + group);
    out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                     tokens.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return out;
}

}  // namespace semgest::text
