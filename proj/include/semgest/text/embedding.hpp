#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "semgest/nd/tensor.hpp"
#include "semgest/text/tokenizer.hpp"

namespace semgest::text {

inline constexpr std::size_t kEmbeddingDim = 768;

// Frozen word vectors. Words in the table map to their stored vector; any
// other word maps to a unit-norm pseudo-random vector derived from the word
// and `oov_seed`, so lookup is a total, reproducible function.
class EmbeddingProvider {
 public:
  explicit EmbeddingProvider(std::uint64_t oov_seed = 0) : oov_seed_(oov_seed) {}

  void add(const std::string& word, std::vector<double> vector);
  bool contains(const std::string& word) const { return table_.count(word) != 0; }
  std::vector<double> lookup(const std::string& word) const;
  std::size_t vocab_size() const { return table_.size(); }
  std::uint64_t oov_seed() const { return oov_seed_; }

  // Text table: a "768 <vocab>" header line, then "word v1 ... v768" per line
  // in byte order of the words. Values use shortest round-trip formatting.
  static EmbeddingProvider load(const std::filesystem::path& path, std::uint64_t oov_seed = 0);
  void save(const std::filesystem::path& path) const;

 private:
  std::uint64_t oov_seed_;
  std::map<std::string, std::vector<double>> table_;
};

// T x 768 word matrix; padding rows are zero.
nd::Tensor embed(const TokenizedText& tt, const EmbeddingProvider& provider);

}  // namespace semgest::text
