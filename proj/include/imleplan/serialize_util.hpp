#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "imleplan/errors.hpp"

namespace imleplan {

// %.17g keeps doubles bit-exact through a text round trip
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& tok, const std::string& where) {
  const char* s = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0') throw IoError(where + ": bad number '" + tok + "'");
  return v;
}

inline long parse_long(const std::string& tok, const std::string& where) {
  const char* s = tok.c_str();
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0') throw IoError(where + ": bad integer '" + tok + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// expects "key=value", returns value or throws
inline std::string expect_kv(const std::string& tok, const std::string& key, const std::string& where) {
  const std::string prefix = key + "=";
  if (tok.rfind(prefix, 0) != 0) throw IoError(where + ": expected '" + key + "=...', got '" + tok + "'");
  return tok.substr(prefix.size());
}

inline void write_f32_le(std::ostream& os, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  const unsigned char b[4] = {
      static_cast<unsigned char>(bits & 0xff),
      static_cast<unsigned char>((bits >> 8) & 0xff),
      static_cast<unsigned char>((bits >> 16) & 0xff),
      static_cast<unsigned char>((bits >> 24) & 0xff),
  };
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline float read_f32_le(std::istream& is, const std::string& where) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (is.gcount() != 4) throw IoError(where + ": truncated float payload");
  const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                             (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace imleplan
