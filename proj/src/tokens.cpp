#include "ragx/tokens.hpp"

#include "ragx/utf8.hpp"

#include <algorithm>
#include <map>

namespace ragx {
namespace {

char32_t lower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; }

bool is_punct(char32_t c) {
    return utf8::is_ascii_punct(c) || (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
           c == 0xA1 || c == 0xBF || c == 0xAB || c == 0xBB || (c >= 0x3001 && c <= 0x3003);
}

bool is_word_char(char32_t c) {
    if (c < 0x80) return (c >= U'0' && c <= U'9') || (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
    return !utf8::is_space(c) && !is_punct(c);
}

}  // namespace

std::vector<std::string> normalize_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::u32string current;
    for (char32_t c : utf8::decode(text)) {
        if (utf8::is_space(c)) {
            if (!current.empty()) out.push_back(utf8::encode(current));
            current.clear();
        } else if (!is_punct(c)) {
            current.push_back(lower(c));
        }
    }
    if (!current.empty()) out.push_back(utf8::encode(current));
    return out;
}

std::string normalize_text(const std::string& text) {
    std::string out;
    for (const auto& t : normalize_tokens(text)) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

double token_f1(const std::vector<std::string>& reference, const std::vector<std::string>& candidate) {
    if (reference.empty() || candidate.empty()) {
        return reference.empty() && candidate.empty() ? 1.0 : 0.0;
    }
    std::map<std::string, int> counts;
    for (const auto& t : reference) ++counts[t];
    std::size_t common = 0;
    for (const auto& t : candidate) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double precision = static_cast<double>(common) / static_cast<double>(candidate.size());
    const double recall = static_cast<double>(common) / static_cast<double>(reference.size());
    return 2.0 * precision * recall / (precision + recall);
}

double token_f1(const std::string& reference, const std::string& candidate) {
    return token_f1(normalize_tokens(reference), normalize_tokens(candidate));
}

std::vector<std::string> lexical_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::u32string current;
    for (char32_t c : utf8::decode(text)) {
        if (is_word_char(c)) {
            current.push_back(lower(c));
        } else if (!current.empty()) {
            out.push_back(utf8::encode(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(utf8::encode(current));
    return out;
}

}  // namespace ragx
