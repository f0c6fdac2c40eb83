#pragma once

#include "ragx/core.hpp"

#include <string>
#include <vector>

namespace ragx {

// Maximal runs of non-whitespace; punctuation stays attached to its token.
std::vector<Feature> decompose_words(const std::string& text);

// Rule-based splitter: a sentence ends after '.', '!' or '?' when followed by
// whitespace or end of text, and at every line break. No abbreviation list,
// so "Dr. Smith" splits after "Dr.".
std::vector<Feature> decompose_sentences(const std::string& text);

std::vector<Feature> decompose(const std::string& text, Granularity granularity);

// Decomposes only the regions of `text` outside `excluded`; spans stay
// relative to the full text and indices run 0..n-1 over the result.
// Unlike the plain variants, returns an empty list when nothing remains.
std::vector<Feature> decompose_outside(const std::string& text, Granularity granularity,
                                       const std::vector<Span>& excluded);

}  // namespace ragx
