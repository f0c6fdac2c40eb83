#include "ragx/compare.hpp"

#include "ragx/tokens.hpp"
#include "ragx/utf8.hpp"

#include <algorithm>
#include <cmath>

namespace ragx {
namespace {

std::u32string fold(const std::string& text) {
    auto cps = utf8::trim(utf8::decode(text));
    for (auto& c : cps) {
        if (c >= U'A' && c <= U'Z') c += 32;
    }
    return cps;
}

const std::vector<std::string>& comparator_ids() {
    static const std::vector<std::string> ids{"embedding", "exact", "levenshtein", "token_f1"};
    return ids;
}

}  // namespace

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

double compare_texts(const std::string& reference, const std::string& candidate, const std::string& comparator_id,
                     const Embedder* embedder) {
    if (comparator_id == "token_f1") return token_f1(reference, candidate);
    if (comparator_id == "exact") return fold(reference) == fold(candidate) ? 1.0 : 0.0;
    if (comparator_id == "levenshtein") {
        const auto a = fold(reference);
        const auto b = fold(candidate);
        const auto longest = std::max(a.size(), b.size());
        if (longest == 0) return 1.0;
        return 1.0 - static_cast<double>(levenshtein_distance(a, b)) / static_cast<double>(longest);
    }
    if (comparator_id == "embedding") {
        if (embedder == nullptr) {
            throw Error(ErrorCode::UnknownComparator, "comparator 'embedding' needs an embedder");
        }
        const auto v = embedder->embed({reference, candidate});
        return std::clamp((cosine(v.at(0), v.at(1)) + 1.0) / 2.0, 0.0, 1.0);
    }
    throw Error(ErrorCode::UnknownComparator, "unknown comparator '" + comparator_id + "'");
}

std::vector<std::string> list_comparators() { return comparator_ids(); }

bool comparator_known(const std::string& comparator_id) {
    const auto& ids = comparator_ids();
    return std::find(ids.begin(), ids.end(), comparator_id) != ids.end();
}

std::vector<double> normalize_weights(std::span<const double> raw_deltas) {
    if (raw_deltas.empty()) throw Error(ErrorCode::PreconditionViolation, "no deltas to normalize");
    double max_positive = 0.0;
    for (double d : raw_deltas) {
        if (!std::isfinite(d)) throw Error(ErrorCode::NumericError, "non-finite raw delta");
        max_positive = std::max(max_positive, d);
    }
    std::vector<double> out(raw_deltas.size(), 0.0);
    if (max_positive == 0.0) return out;
    for (std::size_t i = 0; i < raw_deltas.size(); ++i) {
        out[i] = raw_deltas[i] > 0.0 ? std::min(1.0, raw_deltas[i] / max_positive) : 0.0;
    }
    return out;
}

}  // namespace ragx
