#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ragx {

// Half-open range [start, end) in Unicode scalar values.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const noexcept { return end - start; }
    bool overlaps(const Span& other) const noexcept {
        return start < other.end && other.start < end;
    }
    friend bool operator==(const Span&, const Span&) = default;
};

enum class Granularity { Word, Sentence };
enum class Target { Retrieval, Generation };
enum class OutcomeKind { RetrievalScore, GeneratedText };
enum class BackendKind { Embedder, Generator };

struct Question {
    std::string id;
    std::string text;
};

struct Document {
    std::string id;
    std::string text;
    std::map<std::string, std::string> metadata;

    friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
    std::vector<Document> documents;  // ids unique, ordered by id after ingest

    std::size_t size() const noexcept { return documents.size(); }
    bool empty() const noexcept { return documents.empty(); }
    const Document* find(const std::string& id) const;
};

struct ContextBlock {
    std::string document_id;
    std::string text;

    friend bool operator==(const ContextBlock&, const ContextBlock&) = default;
};

struct Prompt {
    std::string instruction;
    std::vector<ContextBlock> context_blocks;
    std::string question_text;
    std::string rendered;
    // Sorted, disjoint ranges of `rendered` that perturbation must not touch.
    std::vector<Span> protected_spans;
    bool empty_context = false;

    friend bool operator==(const Prompt&, const Prompt&) = default;
};

struct GeneratedResponse {
    std::string text;
    std::string backend_id;
    std::string settings_fingerprint;

    friend bool operator==(const GeneratedResponse&, const GeneratedResponse&) = default;
};

struct Feature {
    std::size_t index = 0;
    std::string text;
    Span span;
    Granularity granularity = Granularity::Word;

    friend bool operator==(const Feature&, const Feature&) = default;
};

struct PerturbedInput {
    std::size_t feature_index = 0;
    std::string text;
    std::string strategy_id;

    friend bool operator==(const PerturbedInput&, const PerturbedInput&) = default;
};

struct PerturbationOutcome {
    std::size_t feature_index = 0;
    OutcomeKind kind = OutcomeKind::RetrievalScore;
    std::optional<double> score;                // s_i, set for RetrievalScore
    std::optional<std::string> response_text;   // r_i, set for GeneratedText
    double similarity_to_reference = 0.0;
    double raw_delta = 0.0;
    std::string perturbed_text;
    std::string strategy_id;

    friend bool operator==(const PerturbationOutcome&, const PerturbationOutcome&) = default;
};

struct BackendDescriptor {
    std::string backend_id;
    BackendKind kind = BackendKind::Embedder;
    std::optional<std::string> endpoint;  // present iff remote
    std::optional<std::string> model_name;
    bool deterministic = true;

    friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

struct FeatureAttribution {
    Feature feature;
    double weight = 0.0;
    double raw_delta = 0.0;
    PerturbationOutcome outcome;

    friend bool operator==(const FeatureAttribution&, const FeatureAttribution&) = default;
};

struct Explanation {
    Target target = Target::Retrieval;
    std::string source_text;
    std::optional<double> reference_score;        // s_d
    std::optional<std::string> reference_response;  // y
    Granularity granularity = Granularity::Word;
    std::vector<FeatureAttribution> features;
    std::vector<Span> protected_spans;
    std::string config_fingerprint;
    BackendDescriptor backend;
    std::vector<std::string> warnings;

    friend bool operator==(const Explanation&, const Explanation&) = default;
};

struct ExplainerConfig {
    // Unset means the target's default: Word for retrieval, Sentence for generation.
    std::optional<Granularity> granularity;
    std::string strategy_id = "leave_one_out";
    std::string comparator_id = "token_f1";
    int parallelism = 8;
    std::optional<int> top_k_render;
    bool protect_instruction = true;
    std::string mask_token = "[MASK]";

    friend bool operator==(const ExplainerConfig&, const ExplainerConfig&) = default;
};

// SHA-256 over the canonical JSON of every config field.
std::string fingerprint(const ExplainerConfig& config);

std::string to_string(Granularity g);
std::string to_string(Target t);
std::string to_string(OutcomeKind k);
std::string to_string(BackendKind k);
Granularity parse_granularity(const std::string& text);
Target parse_target(const std::string& text);

// Checks source_text[span] == text and ordering for a feature list.
bool spans_valid(const std::string& source, const std::vector<Feature>& features);

}  // namespace ragx
