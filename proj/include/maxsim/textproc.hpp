#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace maxsim {

/// Deterministic, dependency-free sentence splitter.
///
/// Stage 1 splits on newline characters. Stage 2 applies rule-based boundary
/// detection within each line: a boundary is '.', '!' or '?' followed by
/// whitespace or end-of-line, except after a known abbreviation ("e.g.",
/// "Mr.", "No.", ...) or between digits. Leading list markers ("1.", "-",
/// "•") followed by whitespace are stripped from every segment, so
/// splitting is idempotent on its own output. Sentences are trimmed and
/// empty results dropped.
std::vector<std::string> split_sentences(std::string_view text);

/// The abbreviation tokens after which a '.' never ends a sentence.
const std::vector<std::string_view>& sentence_abbreviations();

}  // namespace maxsim
