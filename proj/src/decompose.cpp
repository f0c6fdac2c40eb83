#include "ragx/decompose.hpp"

#include "ragx/errors.hpp"
#include "ragx/utf8.hpp"

#include <algorithm>

namespace ragx {
namespace {

bool is_line_break(char32_t c) {
    return c == U'\n' || c == U'\r' || c == 0x2028 || c == 0x2029 || c == 0x85;
}

bool is_terminal(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

void require_content(const std::u32string& cps) {
    if (std::all_of(cps.begin(), cps.end(), utf8::is_space)) {
        throw Error(ErrorCode::EmptyInput, "text is empty or whitespace-only");
    }
}

void push_feature(std::vector<Feature>& out, std::u32string_view cps, std::size_t start, std::size_t end,
                  std::size_t offset, Granularity granularity) {
    while (start < end && utf8::is_space(cps[start])) ++start;
    while (end > start && utf8::is_space(cps[end - 1])) --end;
    if (start == end) return;
    Feature f;
    f.index = out.size();
    f.text = utf8::encode(cps.substr(start, end - start));
    f.span = Span{start + offset, end + offset};
    f.granularity = granularity;
    out.push_back(std::move(f));
}

void words_into(std::vector<Feature>& out, std::u32string_view cps, std::size_t offset) {
    std::size_t i = 0;
    while (i < cps.size()) {
        while (i < cps.size() && utf8::is_space(cps[i])) ++i;
        const std::size_t start = i;
        while (i < cps.size() && !utf8::is_space(cps[i])) ++i;
        push_feature(out, cps, start, i, offset, Granularity::Word);
    }
}

void sentences_into(std::vector<Feature>& out, std::u32string_view cps, std::size_t offset) {
    std::size_t start = 0;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        if (is_line_break(cps[i])) {
            push_feature(out, cps, start, i, offset, Granularity::Sentence);
            start = i + 1;
        } else if (is_terminal(cps[i]) && (i + 1 == cps.size() || utf8::is_space(cps[i + 1]))) {
            push_feature(out, cps, start, i + 1, offset, Granularity::Sentence);
            start = i + 1;
        }
    }
    push_feature(out, cps, start, cps.size(), offset, Granularity::Sentence);
}

void split_into(std::vector<Feature>& out, std::u32string_view cps, std::size_t offset, Granularity g) {
    if (g == Granularity::Word) {
        words_into(out, cps, offset);
    } else {
        sentences_into(out, cps, offset);
    }
}

}  // namespace

std::vector<Feature> decompose_words(const std::string& text) {
    return decompose(text, Granularity::Word);
}

std::vector<Feature> decompose_sentences(const std::string& text) {
    return decompose(text, Granularity::Sentence);
}

std::vector<Feature> decompose(const std::string& text, Granularity granularity) {
    const auto cps = utf8::decode(text);
    require_content(cps);
    std::vector<Feature> out;
    split_into(out, cps, 0, granularity);
    return out;
}

std::vector<Feature> decompose_outside(const std::string& text, Granularity granularity,
                                       const std::vector<Span>& excluded) {
    const auto cps = utf8::decode(text);
    require_content(cps);
    auto sorted = excluded;
    std::sort(sorted.begin(), sorted.end(), [](const Span& a, const Span& b) { return a.start < b.start; });

    std::vector<Feature> out;
    std::size_t cursor = 0;
    const std::u32string_view view(cps);
    for (const auto& span : sorted) {
        const auto stop = std::min(span.start, cps.size());
        if (stop > cursor) {
            split_into(out, view.substr(cursor, stop - cursor), cursor, granularity);
        }
        cursor = std::max(cursor, std::min(span.end, cps.size()));
    }
    if (cursor < cps.size()) {
        split_into(out, view.substr(cursor), cursor, granularity);
    }
    return out;
}

}  // namespace ragx
