#pragma once

// Brute-force reference computations for tests. Nothing here calls into the
// ragx library: tokenization, perturbation and cosine are re-derived from
// their definitions on plain std containers.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

// Lowercased ASCII alphanumeric runs (fixtures are ASCII).
inline std::vector<std::string> words_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Cosine of raw term-frequency vectors over the union of both token sets.
inline double bow_cosine(const std::string& a, const std::string& b) {
    std::map<std::string, double> ta;
    std::map<std::string, double> tb;
    for (const auto& w : words_of(a)) ta[w] += 1;
    for (const auto& w : words_of(b)) tb[w] += 1;
    double dot = 0, na = 0, nb = 0;
    for (const auto& [w, c] : ta) {
        na += c * c;
        auto it = tb.find(w);
        if (it != tb.end()) dot += c * it->second;
    }
    for (const auto& [w, c] : tb) nb += c * c;
    if (na == 0 || nb == 0) return 0.0;
    return dot / std::sqrt(na * nb);
}

inline std::vector<std::string> whitespace_split(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

inline std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out.push_back(' ');
        out += p;
    }
    return out;
}

struct RetrievalCase {
    double reference = 0;
    std::vector<std::string> words;
    std::vector<double> scores;   // s_i
    std::vector<double> weights;  // clamped, max-normalized
};

// Enumerates every leave-one-word-out variant of a single-spaced document.
inline RetrievalCase retrieval(const std::string& question, const std::string& document) {
    RetrievalCase rc;
    rc.words = whitespace_split(document);
    rc.reference = bow_cosine(question, document);
    std::vector<double> deltas;
    for (std::size_t i = 0; i < rc.words.size(); ++i) {
        auto rest = rc.words;
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
        const double s = bow_cosine(question, join(rest));
        rc.scores.push_back(s);
        deltas.push_back(rc.reference - s);
    }
    double m = 0;
    for (double d : deltas) m = std::max(m, d);
    for (double d : deltas) rc.weights.push_back(m > 0 && d > 0 ? d / m : 0.0);
    if (rc.reference <= 0) std::fill(rc.weights.begin(), rc.weights.end(), 0.0);
    return rc;
}

// -1 / 0 / +1 comparison with a tie tolerance; ranking equality means every
// pair compares the same way.
inline int order(double a, double b, double tol = 1e-12) {
    if (std::abs(a - b) <= tol) return 0;
    return a > b ? 1 : -1;
}

inline bool same_ranking(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-12) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (order(a[i], a[j], tol) != order(b[i], b[j], tol)) return false;
        }
    }
    return true;
}

// SQuAD-style token F1 over lowercase, punctuation-free whitespace tokens.
inline std::vector<std::string> answer_tokens(const std::string& text) {
    std::string cleaned;
    for (unsigned char c : text) {
        if (std::ispunct(c)) continue;
        cleaned.push_back(static_cast<char>(std::tolower(c)));
    }
    return whitespace_split(cleaned);
}

inline double token_f1(const std::string& ref, const std::string& cand) {
    const auto r = answer_tokens(ref);
    const auto c = answer_tokens(cand);
    if (r.empty() || c.empty()) return r.empty() && c.empty() ? 1.0 : 0.0;
    std::map<std::string, int> counts;
    for (const auto& t : r) ++counts[t];
    int common = 0;
    for (const auto& t : c) {
        if (counts[t] > 0) {
            --counts[t];
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double p = static_cast<double>(common) / c.size();
    const double rc = static_cast<double>(common) / r.size();
    return 2 * p * rc / (p + rc);
}

// Desk-scale retrieval fixtures; docs are single-spaced so whitespace_split
// matches word decomposition.
struct Fixture {
    const char* question;
    const char* document;
};

inline const std::vector<Fixture>& retrieval_fixtures() {
    static const std::vector<Fixture> f{
        {"what color is the sky", "the sky is blue"},
        {"is the sky big", "the sky is blue"},
        {"who wrote the origin of species", "charles darwin wrote on the origin of species in 1859"},
        {"capital city of france", "paris is the capital and largest city of france"},
        {"how do bees make honey", "bees make honey from flower nectar and bees store honey in combs"},
        {"boiling point of water", "water boils at 100 degrees celsius at sea level"},
        {"moon orbit earth", "the moon takes about 27 days to orbit the earth"},
    };
    return f;
}

}  // namespace oracle
