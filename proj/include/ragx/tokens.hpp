#pragma once

#include <string>
#include <vector>

namespace ragx {

// Answer-style normalization: lowercase (ASCII), punctuation removed,
// split on whitespace.
std::vector<std::string> normalize_tokens(const std::string& text);

// Normalized tokens re-joined with single spaces.
std::string normalize_text(const std::string& text);

// Multiset token overlap F1. Two empty token lists score 1; one empty, 0.
double token_f1(const std::vector<std::string>& reference, const std::vector<std::string>& candidate);
double token_f1(const std::string& reference, const std::string& candidate);

// Lowercased alphanumeric runs; the vocabulary unit of the lexical embedder.
std::vector<std::string> lexical_tokens(const std::string& text);

}  // namespace ragx
