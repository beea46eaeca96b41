#pragma once

// Shared strict-JSON helpers for the file formats the library reads.

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include <fmt/format.h>
#include <json.hpp>

#include "mpdse/error.hpp"

namespace mpdse::detail {

inline std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

/// Syntax errors become ParseError with the 1-based line of the bad token.
inline nlohmann::json parse_json(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(fmt::format("{} syntax error at line {}: {}", what, line, e.what()), line);
  }
}

inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<std::string_view> known,
                           const std::string& where) {
  if (!obj.is_object()) throw ValidationError(fmt::format("{}: expected an object", where));
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ValidationError(fmt::format("{}: unknown field '{}'", where, key));
  }
}

inline std::string read_file(const std::string& path, std::string_view what) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {} file '{}'", what, path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace mpdse::detail
