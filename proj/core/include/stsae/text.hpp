#pragma once

#include "stsae/error.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace stsae {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Locale-independent parsing; the whole field must be consumed.
bool parse_double(std::string_view field, double& out);
bool parse_int(std::string_view field, long long& out);

/// Shortest representation that round-trips exactly ("NA" for NaN).
std::string format_double(double value);

/// 64-bit FNV-1a, used for manifest hashes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// "key = value" lines; '#' starts a comment, blank lines are skipped. Lines
/// without '=' raise `on_error`.
std::vector<KeyValue> parse_key_values(std::istream& in, ErrorCode on_error);

}  // namespace stsae
