#pragma once

#include "ragx/backends.hpp"

#include <span>
#include <string>
#include <vector>

namespace ragx {

// Similarity in [0, 1] between a reference output and a candidate output.
//   exact        1 on equality after trim + lowercase, else 0
//   token_f1     multiset F1 over normalized tokens (default)
//   levenshtein  1 - edit distance / longer length, after trim + lowercase
//   embedding    (cosine + 1) / 2 of the embedder's vectors; needs `embedder`
double compare_texts(const std::string& reference, const std::string& candidate, const std::string& comparator_id,
                     const Embedder* embedder = nullptr);

std::vector<std::string> list_comparators();
bool comparator_known(const std::string& comparator_id);

// Clamps negatives to zero and divides by the largest clamped value; all
// zeros when nothing is positive.
std::vector<double> normalize_weights(std::span<const double> raw_deltas);

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b);

}  // namespace ragx
