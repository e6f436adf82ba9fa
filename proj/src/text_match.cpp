#include "ermcat/text_match.hpp"

#include <algorithm>
#include <cctype>

#include "ermcat/errors.hpp"

namespace ermcat {

namespace {

void reject_unsupported(const std::string& pattern) {
  for (std::size_t i = 0; i + 1 < pattern.size(); ++i) {
    if (pattern[i] == '\\') {
      char next = pattern[i + 1];
      if (next >= '1' && next <= '9') throw Error(ErrorKind::bad_request, "regex backreferences are not supported");
      ++i;
      continue;
    }
    if (pattern[i] == '(' && pattern[i + 1] == '?' && i + 2 < pattern.size() &&
        (pattern[i + 2] == '=' || pattern[i + 2] == '!'))
      throw Error(ErrorKind::bad_request, "regex lookahead is not supported");
  }
}

}  // namespace

std::string stem_word(std::string word) {
  for (std::string_view suffix : {"ing", "ed", "es", "s"}) {
    if (word.size() >= suffix.size() + 3 && word.compare(word.size() - suffix.size(), suffix.size(), suffix) == 0) {
      word.resize(word.size() - suffix.size());
      break;
    }
  }
  return word;
}

std::vector<std::string> text_search_terms(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(stem_word(std::move(cur)));
    cur.clear();
  };
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      cur.push_back(static_cast<char>(u < 0x80 ? std::tolower(u) : u));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::shared_ptr<const TextPattern> TextPattern::compile(Operator op, const std::string& pattern) {
  auto p = std::make_shared<TextPattern>();
  p->op_ = op;
  if (op == Operator::ts) {
    p->terms_ = text_search_terms(pattern);
    return p;
  }
  reject_unsupported(pattern);
  auto flags = std::regex::ECMAScript | std::regex::nosubs;
  if (op == Operator::ciregexp) flags |= std::regex::icase;
  try {
    p->regex_ = std::regex(pattern, flags);
  } catch (const std::regex_error& e) {
    throw Error(ErrorKind::bad_request, "invalid regular expression '" + pattern + "': " + e.what());
  }
  return p;
}

bool TextPattern::matches(std::string_view text) const {
  if (op_ == Operator::ts) {
    if (terms_.empty()) return false;
    auto words = text_search_terms(text);
    return std::all_of(terms_.begin(), terms_.end(),
                       [&](const std::string& t) { return std::find(words.begin(), words.end(), t) != words.end(); });
  }
  return std::regex_search(text.begin(), text.end(), regex_);
}

}  // namespace ermcat
