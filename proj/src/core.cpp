#include "ragx/core.hpp"

#include "ragx/canonical_json.hpp"
#include "ragx/digest.hpp"
#include "ragx/errors.hpp"
#include "ragx/utf8.hpp"

namespace ragx {

std::string fingerprint(const ExplainerConfig& config) {
    nlohmann::json j = {
        {"granularity", config.granularity ? nlohmann::json(to_string(*config.granularity)) : nlohmann::json()},
        {"strategy_id", config.strategy_id},
        {"comparator_id", config.comparator_id},
        {"parallelism", config.parallelism},
        {"top_k_render", config.top_k_render ? nlohmann::json(*config.top_k_render) : nlohmann::json()},
        {"protect_instruction", config.protect_instruction},
        {"mask_token", config.mask_token},
    };
    return sha256_hex(canonical_dump(j));
}

const Document* Corpus::find(const std::string& id) const {
    for (const auto& d : documents) {
        if (d.id == id) return &d;
    }
    return nullptr;
}

std::string to_string(Granularity g) { return g == Granularity::Word ? "word" : "sentence"; }
std::string to_string(Target t) { return t == Target::Retrieval ? "retrieval" : "generation"; }
std::string to_string(OutcomeKind k) {
    return k == OutcomeKind::RetrievalScore ? "retrieval_score" : "generated_text";
}
std::string to_string(BackendKind k) { return k == BackendKind::Embedder ? "embedder" : "generator"; }

Granularity parse_granularity(const std::string& text) {
    if (text == "word") return Granularity::Word;
    if (text == "sentence") return Granularity::Sentence;
    throw Error(ErrorCode::UsageError, "unknown granularity '" + text + "'");
}

Target parse_target(const std::string& text) {
    if (text == "retrieval" || text == "Retrieval") return Target::Retrieval;
    if (text == "generation" || text == "Generation") return Target::Generation;
    throw Error(ErrorCode::ParseError, "unknown target '" + text + "'");
}

bool spans_valid(const std::string& source, const std::vector<Feature>& features) {
    const auto cps = utf8::decode(source);
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        if (f.index != i || f.span.start >= f.span.end || f.span.end > cps.size()) return false;
        if (i > 0 && f.span.start < prev_end) return false;
        if (utf8::encode(std::u32string_view(cps).substr(f.span.start, f.span.length())) != f.text) return false;
        prev_end = f.span.end;
    }
    return true;
}

}  // namespace ragx
