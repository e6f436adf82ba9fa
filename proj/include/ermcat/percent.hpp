#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace ermcat {

/// Unreserved characters per RFC 3986: ALPHA / DIGIT / "-" / "." / "_" / "~".
bool is_unreserved(unsigned char c) noexcept;

/// Encodes every byte outside the unreserved set as %XX (uppercase hex).
std::string percent_encode(std::string_view data);

/// Decodes %XX escapes exactly once and checks the result is valid UTF-8.
/// Throws ParseError whose offset is `base_offset` plus the raw byte offset of
/// the malformed escape or invalid sequence.
std::string percent_decode(std::string_view raw, std::size_t base_offset = 0);

}  // namespace ermcat
