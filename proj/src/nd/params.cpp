#include "semgest/nd/params.hpp"

#include <array>
#include <bit>
#include <cstring>

#include "semgest/error.hpp"

namespace semgest::nd {
namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr int kParamsFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "tensor payload encoding assumes a little-endian host");

}  // namespace

Bound::Bound(Tape& tape, const ParamSet& params, bool trainable) : tape_(&tape) {
  for (const auto& [name, value] : params) {
    Tensor t = value;
    t.set_requires_grad(trainable);
    vars_.emplace(name, tape.leaf(std::move(t)));
  }
}

Var Bound::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ValidationError("missing parameter '" + name + "'");
  return it->second;
}

ParamSet Bound::gradients(const Gradients& grads) const {
  ParamSet out;
  for (const auto& [name, var] : vars_) out.emplace(name, grads.of(var));
  return out;
}

void accumulate(ParamSet& dst, const ParamSet& src, double weight) {
  for (const auto& [name, g] : src) {
    auto it = dst.find(name);
    if (it == dst.end()) {
      std::vector<double> scaled(g.storage());
      for (double& v : scaled) v *= weight;
      dst.emplace(name, Tensor(g.shape(), std::move(scaled)));
      continue;
    }
    if (it->second.shape() != g.shape()) {
      throw ShapeError("accumulate: shape mismatch for '" + name + "'");
    }
    auto d = it->second.mutable_values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += weight * g[i];
  }
}

std::string base64_encode(const std::string& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (static_cast<unsigned char>(bytes[i]) << 16) |
                            (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                            static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t n = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) n |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string base64_decode(const std::string& text) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (int k = 0; k < 64; ++k) lookup[static_cast<unsigned char>(kAlphabet[k])] = k;
  if (text.size() % 4 != 0) throw ValidationError("base64: length not a multiple of 4");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t n = 0;
    int pad = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      int v = 0;
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
      } else {
        v = lookup[static_cast<unsigned char>(c)];
        if (v < 0 || pad > 0) throw ValidationError("base64: invalid character");
      }
      n = (n << 6) | static_cast<std::uint32_t>(v);
    }
    out += static_cast<char>((n >> 16) & 0xFF);
    if (pad < 2) out += static_cast<char>((n >> 8) & 0xFF);
    if (pad < 1) out += static_cast<char>(n & 0xFF);
  }
  return out;
}

nlohmann::json params_to_json(const ParamSet& params) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : params) {
    std::string bytes(t.size() * sizeof(double), '\0');
    std::memcpy(bytes.data(), t.values().data(), bytes.size());
    tensors.push_back({{"name", name},
                       {"shape", t.shape()},
                       {"dtype", "f64le"},
                       {"data", base64_encode(bytes)}});
  }
  return {{"format", "semgest-params"}, {"version", kParamsFormatVersion}, {"tensors", tensors}};
}

ParamSet params_from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "semgest-params") {
    throw ValidationError("parameter document: unexpected format tag");
  }
  if (doc.value("version", 0) != kParamsFormatVersion) {
    throw ValidationError("parameter document: unsupported version");
  }
  ParamSet out;
  for (const auto& entry : doc.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    if (entry.value("dtype", "") != "f64le") {
      throw ValidationError("parameter '" + name + "': unsupported dtype");
    }
    const auto shape = entry.at("shape").get<Shape>();
    const std::string bytes = base64_decode(entry.at("data").get<std::string>());
    if (bytes.size() != shape_size(shape) * sizeof(double)) {
      throw ValidationError("parameter '" + name + "': payload does not match shape");
    }
    std::vector<double> values(shape_size(shape));
    std::memcpy(values.data(), bytes.data(), bytes.size());
    out.emplace(name, Tensor(shape, std::move(values)));
  }
  return out;
}

}  // namespace semgest::nd
