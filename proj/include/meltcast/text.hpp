#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace meltcast::text {

/// Shortest decimal representation that round-trips to the same double.
[[nodiscard]] std::string format_double(double value);

/// Strict parse of a complete decimal number. Accepts a leading ASCII '-'
/// or U+2212 MINUS SIGN. Returns nullopt on any trailing garbage.
[[nodiscard]] std::optional<double> parse_double(std::string_view text);
[[nodiscard]] std::optional<long long> parse_int(std::string_view text);

[[nodiscard]] std::string_view trim(std::string_view s);
[[nodiscard]] std::vector<std::string_view> split(std::string_view line, char sep);
[[nodiscard]] std::string lowercase(std::string_view s);

/// 64-bit FNV-1a. Used for content checksums and model identity, not security.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes);
[[nodiscard]] std::string hex64(std::uint64_t v);

}  // namespace meltcast::text
