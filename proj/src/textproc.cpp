#include "maxsim/textproc.hpp"

#include <cctype>
#include <unordered_set>

namespace maxsim {
namespace {

bool is_blank(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

const std::unordered_set<std::string_view>& abbreviation_set() {
  static const std::unordered_set<std::string_view> set(
      sentence_abbreviations().begin(), sentence_abbreviations().end());
  return set;
}

std::string_view trim(std::string_view s) {
  size_t b = 0;
  while (b < s.size() && is_blank(s[b])) ++b;
  size_t e = s.size();
  while (e > b && is_blank(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// Returns the length of a leading list marker ("1.", "-", "•") in `s`, or 0.
// A marker only counts when followed by whitespace and then more content;
// a bare "5." segment is a sentence, not a marker.
size_t marker_length(std::string_view s) {
  size_t m = 0;
  if (!s.empty() && (s[0] == '-' || s[0] == '*')) {
    m = 1;
  } else if (s.size() >= 3 && s.substr(0, 3) == "\xE2\x80\xA2") {  // U+2022 bullet
    m = 3;
  } else {
    size_t d = 0;
    while (d < s.size() && d < 3 && is_digit(s[d])) ++d;
    if (d > 0 && d < s.size() && s[d] == '.') m = d + 1;
  }
  if (m == 0 || m >= s.size() || !is_blank(s[m])) return 0;
  size_t rest = m;
  while (rest < s.size() && is_blank(s[rest])) ++rest;
  if (rest == s.size()) return 0;  // whitespace only after the marker
  return rest;
}

std::string_view strip_markers(std::string_view s) {
  for (size_t n = marker_length(s); n != 0; n = marker_length(s)) {
    s = s.substr(n);
  }
  return s;
}

// True when the '.' at `i` does not end a sentence: it sits between two
// digits, or terminates a known abbreviation token.
bool suppressed_period(std::string_view line, size_t i) {
  if (i > 0 && is_digit(line[i - 1]) && i + 1 < line.size() &&
      is_digit(line[i + 1])) {
    return true;
  }
  size_t w = i;
  while (w > 0 && !is_blank(line[w - 1])) --w;
  std::string_view word = line.substr(w, i + 1 - w);
  // Ignore an opening bracket / quote in front of the token: "(e.g." == "e.g."
  while (!word.empty() && (word[0] == '(' || word[0] == '[' || word[0] == '{' ||
                           word[0] == '"' || word[0] == '\'')) {
    word.remove_prefix(1);
  }
  return abbreviation_set().count(word) > 0;
}

void emit(std::string_view chunk, std::vector<std::string>& out) {
  chunk = trim(strip_markers(chunk));
  if (!chunk.empty()) out.emplace_back(chunk);
}

void split_line(std::string_view line, std::vector<std::string>& out) {
  line = strip_markers(line);
  size_t start = 0;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c != '.' && c != '!' && c != '?') continue;
    bool at_end = i + 1 == line.size();
    if (!at_end && !is_blank(line[i + 1])) continue;
    if (c == '.' && suppressed_period(line, i)) continue;
    emit(line.substr(start, i + 1 - start), out);
    start = i + 1;
    while (start < line.size() && is_blank(line[start])) ++start;
    i = start == 0 ? 0 : start - 1;
  }
  if (start < line.size()) emit(line.substr(start), out);
}

}  // namespace

const std::vector<std::string_view>& sentence_abbreviations() {
  static const std::vector<std::string_view> abbrevs = {
      "e.g.", "i.e.",  "etc.", "cf.",   "vs.",   "al.",     "ca.",
      "E.g.", "I.e.",  "Cf.",  "Vs.",   "Ca.",   "approx.", "Approx.",
      "Mr.",  "Mrs.",  "Ms.",  "Dr.",   "Prof.", "Sr.",     "Jr.",
      "St.",  "Mt.",   "No.",  "Fig.",  "Figs.", "Eq.",     "Eqs.",
      "Ref.", "Refs.", "Vol.", "Ch.",   "Sec.",  "Dept.",   "Univ.",
      "Inc.", "Ltd.",  "Co.",  "Corp.", "a.m.",  "p.m.",
  };
  return abbrevs;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  size_t begin = 0;
  while (begin <= text.size()) {
    size_t nl = text.find('\n', begin);
    if (nl == std::string_view::npos) {
      split_line(text.substr(begin), out);
      break;
    }
    split_line(text.substr(begin, nl - begin), out);
    begin = nl + 1;
  }
  return out;
}

}  // namespace maxsim
