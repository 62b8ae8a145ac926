#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgalign::text {

/// Decodes %XX escapes; malformed escapes are kept literally.
std::string percent_decode(std::string_view s);

/// Human-readable name from an IRI: final path segment (after the last '/'
/// or '#'), percent-decoded, with '_' rendered as a space.
std::string label_from_uri(std::string_view uri);

/// Splits on a single-character delimiter, keeping empty fields.
std::vector<std::string_view> split(std::string_view s, char delim);

std::string_view trim(std::string_view s);

/// Number of Unicode code points in a UTF-8 string (invalid bytes count as one).
std::size_t utf8_length(std::string_view s);

/// Keeps the first `max_chars` code points; appends `marker` if anything was cut.
std::string utf8_truncate(std::string_view s, std::size_t max_chars,
                          std::string_view marker);

/// ASCII-only case folding (UTF-8 bytes >= 0x80 pass through).
std::string ascii_lower(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

}  // namespace kgalign::text
