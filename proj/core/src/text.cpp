#include "rcpipe/text.hpp"

#include <cctype>
#include <sstream>

namespace rcpipe::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
char to_lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = to_lower(c);
  return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char c : s) {
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.push_back(std::string(1, to_lower(c)));
    } else {
      cur.push_back(to_lower(c));
    }
  }
  flush();
  return out;
}

std::vector<std::string> tfidf_terms(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (is_space(c) || is_punct(c)) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(to_lower(c));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string normalize_answer(std::string_view s) {
  std::string lowered;
  lowered.reserve(s.size());
  for (char c : s) {
    if (is_punct(c)) continue;
    lowered.push_back(to_lower(c));
  }
  std::istringstream iss(lowered);
  std::string word;
  std::string out;
  while (iss >> word) {
    if (word == "a" || word == "an" || word == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream iss{std::string(s)};
  std::string w;
  while (iss >> w) out.push_back(w);
  return out;
}

}  // namespace rcpipe::text
