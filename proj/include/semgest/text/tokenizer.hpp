#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace semgest::text {

inline constexpr std::size_t kMaxTokens = 32;

struct TokenizedText {
  std::vector<std::string> tokens;  // at most kMaxTokens
  std::vector<bool> mask;           // kMaxTokens slots, real tokens first
  std::string text_id;

  std::size_t size() const { return tokens.size(); }
};

// Lowercased runs of letters and digits; every other ASCII byte separates
// words. Bytes >= 0x80 count as letters so UTF-8 words stay whole. Keeps the
// first kMaxTokens words. Throws ValidationError when no word is found.
TokenizedText tokenize(std::string_view text, std::string text_id = {});

// Number of words under the same rule, without the kMaxTokens cap.
std::size_t count_words(std::string_view text);

std::string join(const std::vector<std::string>& tokens);

// Consecutive groups of `group` tokens; the last group holds the remainder.
std::vector<std::vector<std::string>> segment(const std::vector<std::string>& tokens,
                                              std::size_t group = 8);

}  // namespace semgest::text
