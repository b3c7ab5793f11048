#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace recinv::util {

/// Unicode NFC normalization of UTF-8 text. Invalid UTF-8 is returned unchanged.
std::string nfc(std::string_view text);

/// Collapse runs of ASCII whitespace to one space and trim both ends.
std::string collapse_whitespace(std::string_view text);

/// NFC followed by whitespace collapse; the canonical form for comparisons.
std::string normalize(std::string_view text);

/// Whitespace tokenization of normalized text.
std::vector<std::string> whitespace_tokens(std::string_view text);

std::string trim(std::string_view text);
std::string to_lower_ascii(std::string_view text);

}  // namespace recinv::util
