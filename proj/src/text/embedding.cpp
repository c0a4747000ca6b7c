#include "semgest/text/embedding.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "semgest/error.hpp"
#include "semgest/nd/rng.hpp"

namespace semgest::text {
namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ValidationError(where + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void EmbeddingProvider::add(const std::string& word, std::vector<double> vector) {
  if (word.empty() || word.find_first_of(" \t\r\n") != std::string::npos) {
    throw ValidationError("embedding: invalid word '" + word + "'");
  }
  if (vector.size() != kEmbeddingDim) {
    throw ValidationError("embedding for '" + word + "' has " + std::to_string(vector.size()) +
                          " dims, expected 768");
  }
  for (double v : vector) {
    if (!std::isfinite(v)) throw ValidationError("embedding for '" + word + "' is not finite");
  }
  table_.insert_or_assign(word, std::move(vector));
}

std::vector<double> EmbeddingProvider::lookup(const std::string& word) const {
  if (auto it = table_.find(word); it != table_.end()) return it->second;
  nd::Rng rng(nd::derive_seed(oov_seed_, word));
  std::vector<double> v(kEmbeddingDim);
  double norm2 = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

EmbeddingProvider EmbeddingProvider::load(const std::filesystem::path& path,
                                          std::uint64_t oov_seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing embedding table " + path.string());
  std::string line;
  std::size_t dim = 0, vocab = 0;
  if (!std::getline(in, line) || !(std::istringstream(line) >> dim >> vocab) ||
      dim != kEmbeddingDim) {
    throw ValidationError(path.string() + ": header must read '768 <vocab size>'");
  }
  EmbeddingProvider out(oov_seed);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (!rest.empty()) {
      const auto cut = rest.find(' ');
      fields.push_back(rest.substr(0, cut));
      rest = cut == std::string_view::npos ? std::string_view{} : rest.substr(cut + 1);
    }
    if (fields.size() != kEmbeddingDim + 1) {
      throw ValidationError(where + ": expected a word and 768 values");
    }
    std::vector<double> v;
    v.reserve(kEmbeddingDim);
    for (std::size_t i = 1; i < fields.size(); ++i) v.push_back(parse_double(fields[i], where));
    const std::string word(fields[0]);
    if (out.contains(word)) throw ValidationError(where + ": duplicate word '" + word + "'");
    out.add(word, std::move(v));
  }
  if (out.vocab_size() != vocab) {
    throw ValidationError(path.string() + ": header announces " + std::to_string(vocab) +
                          " words, found " + std::to_string(out.vocab_size()));
  }
  return out;
}

void EmbeddingProvider::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write embedding table " + path.string());
  out << kEmbeddingDim << ' ' << table_.size() << '\n';
  for (const auto& [word, v] : table_) {
    out << word;
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
  }
}

nd::Tensor embed(const TokenizedText& tt, const EmbeddingProvider& provider) {
  if (tt.tokens.size() > kMaxTokens) throw ValidationError("embed: more than 32 tokens");
  std::vector<double> values(kMaxTokens * kEmbeddingDim, 0.0);
  for (std::size_t i = 0; i < tt.tokens.size(); ++i) {
    const std::vector<double> v = provider.lookup(tt.tokens[i]);
    std::copy(v.begin(), v.end(), values.begin() + static_cast<std::ptrdiff_t>(i * kEmbeddingDim));
  }
  return nd::Tensor::matrix(kMaxTokens, kEmbeddingDim, std::move(values));
}

}  // namespace semgest::text
