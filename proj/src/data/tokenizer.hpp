#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace eie {

// The one tokenizer of the project: lowercase, punctuation split off as
// separate tokens, whitespace-delimited. Training, decoding and every metric
// share it so scores and losses see identical token streams.
std::vector<std::string> tokenize(std::string_view text);

// Joins tokens with single spaces. detokenize(tokenize(t)) == t for text
// already in canonical form (lowercase, space-separated tokens).
std::string detokenize(const std::vector<std::string>& tokens);

}  // namespace eie
