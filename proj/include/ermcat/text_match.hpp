#pragma once

#include <memory>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "ermcat/url.hpp"

namespace ermcat {

/// Compiled form of a text-pattern operand (::regexp::, ::ciregexp::, ::ts::).
///
/// Regexes use ECMAScript syntax restricted to the RE2-compatible subset:
/// backreferences and lookaround are rejected. Matching is unanchored.
/// ::ts:: matches when every word of the query, after stemming, occurs as a
/// stemmed word of the value (case-insensitive).
class TextPattern {
 public:
  /// Throws Error(bad_request) for invalid or unsupported patterns.
  static std::shared_ptr<const TextPattern> compile(Operator op, const std::string& pattern);

  bool matches(std::string_view text) const;

 private:
  Operator op_ = Operator::regexp;
  std::regex regex_;
  std::vector<std::string> terms_;
};

/// Lowercases, splits on non-alphanumeric ASCII and stems each word.
std::vector<std::string> text_search_terms(std::string_view text);

/// Strips one common English suffix ("ing", "ed", "es", "s") when at least
/// three characters remain.
std::string stem_word(std::string word);

}  // namespace ermcat
