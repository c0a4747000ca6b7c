#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "semgest/error.hpp"

namespace semgest {

// Compact dump plus a trailing newline. The output depends only on the
// document, so reading and rewriting a file reproduces it byte for byte.
inline void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw ValidationError("failed writing " + path.string());
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace semgest
