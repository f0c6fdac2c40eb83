#include "ragx/explain.hpp"

#include "ragx/compare.hpp"
#include "ragx/decompose.hpp"
#include "ragx/parallel.hpp"
#include "ragx/utf8.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ragx {
namespace {

constexpr std::size_t kEmbedBatch = 64;

void validate(const ExplainerConfig& config) {
    if (config.parallelism < 1) throw Error(ErrorCode::PreconditionViolation, "parallelism must be >= 1");
    if (!comparator_known(config.comparator_id)) {
        throw Error(ErrorCode::UnknownComparator, "unknown comparator '" + config.comparator_id + "'");
    }
}

// Embeds each distinct text once, batching and fanning batches out.
std::map<std::string, EmbeddingVector> embed_unique(const std::vector<std::string>& texts, const Embedder& embedder,
                                                    int parallelism) {
    std::vector<std::string> unique;
    {
        std::map<std::string, bool> seen;
        for (const auto& t : texts) {
            if (seen.emplace(t, true).second) unique.push_back(t);
        }
    }
    const std::size_t batches = (unique.size() + kEmbedBatch - 1) / kEmbedBatch;
    std::vector<std::vector<EmbeddingVector>> results(batches);
    parallel_for(batches, parallelism, [&](std::size_t b) {
        const auto begin = b * kEmbedBatch;
        const auto end = std::min(unique.size(), begin + kEmbedBatch);
        std::vector<std::string> batch(unique.begin() + static_cast<std::ptrdiff_t>(begin),
                                       unique.begin() + static_cast<std::ptrdiff_t>(end));
        results[b] = embedder.embed(batch);
        if (results[b].size() != batch.size()) {
            throw Error(ErrorCode::BackendProtocolError, "embedder returned wrong number of vectors");
        }
    });
    std::map<std::string, EmbeddingVector> out;
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t k = 0; k < results[b].size(); ++k) {
            out.emplace(unique[b * kEmbedBatch + k], std::move(results[b][k]));
        }
    }
    return out;
}

void assemble(Explanation& ex, const std::vector<Feature>& features, std::vector<PerturbationOutcome> outcomes) {
    std::vector<double> deltas;
    deltas.reserve(outcomes.size());
    for (const auto& o : outcomes) deltas.push_back(o.raw_delta);
    std::vector<double> weights(deltas.size(), 0.0);
    if (!deltas.empty()) weights = normalize_weights(deltas);

    std::map<std::size_t, std::size_t> by_feature;
    for (std::size_t i = 0; i < outcomes.size(); ++i) by_feature.emplace(outcomes[i].feature_index, i);
    for (const auto& f : features) {
        auto it = by_feature.find(f.index);
        if (it == by_feature.end()) continue;  // protected
        FeatureAttribution a;
        a.feature = f;
        a.weight = weights[it->second];
        a.raw_delta = outcomes[it->second].raw_delta;
        a.outcome = std::move(outcomes[it->second]);
        ex.features.push_back(std::move(a));
    }
}

}  // namespace

Explainer::Explainer(ExplainerConfig config)
    : Explainer(config, StrategyRegistry::with_defaults(config.mask_token)) {}

Explainer::Explainer(ExplainerConfig config, StrategyRegistry strategies)
    : config_(std::move(config)), strategies_(std::move(strategies)) {}

Explanation Explainer::retrieval(const std::string& question, const std::string& document, const Embedder& embedder,
                                 std::optional<double> reference_score) const {
    validate(config_);
    if (utf8::trim(question).empty()) throw Error(ErrorCode::EmptyInput, "question is empty");
    const auto strategy = strategies_.find(config_.strategy_id);

    Explanation ex;
    ex.target = Target::Retrieval;
    ex.source_text = document;
    ex.granularity = config_.granularity.value_or(Granularity::Word);
    ex.config_fingerprint = fingerprint(config_);
    ex.backend = embedder.descriptor();
    if (!ex.backend.deterministic) ex.warnings.push_back(kWarnNonDeterministic);

    const auto features = decompose(document, ex.granularity);
    const auto perturbations = strategy->perturb(document, features, {});

    std::vector<std::string> texts{question, document};
    for (const auto& p : perturbations) texts.push_back(p.text);
    const auto vectors = embed_unique(texts, embedder, config_.parallelism);
    const auto& q = vectors.at(question);

    const double recomputed = cosine(q, vectors.at(document));
    if (reference_score && std::abs(*reference_score - recomputed) > kStaleScoreTolerance) {
        throw Error(ErrorCode::StaleResult, "stored retrieval score " + std::to_string(*reference_score) +
                                                " differs from recomputed " + std::to_string(recomputed));
    }
    const double s_d = reference_score.value_or(recomputed);
    ex.reference_score = s_d;

    std::vector<PerturbationOutcome> outcomes;
    outcomes.reserve(perturbations.size());
    for (const auto& p : perturbations) {
        PerturbationOutcome o;
        o.feature_index = p.feature_index;
        o.kind = OutcomeKind::RetrievalScore;
        o.score = cosine(q, vectors.at(p.text));
        o.raw_delta = s_d - *o.score;
        o.similarity_to_reference = std::clamp(1.0 - std::abs(o.raw_delta), 0.0, 1.0);
        o.perturbed_text = p.text;
        o.strategy_id = p.strategy_id;
        outcomes.push_back(std::move(o));
    }
    assemble(ex, features, std::move(outcomes));
    if (s_d <= 0.0) {
        for (auto& f : ex.features) f.weight = 0.0;
        ex.warnings.push_back(kWarnDegenerateReference);
    }
    return ex;
}

Explanation Explainer::generation(const Prompt& prompt, const Generator& generator,
                                  std::optional<std::string> reference_response,
                                  const Embedder* comparator_embedder) const {
    validate(config_);
    const auto strategy = strategies_.find(config_.strategy_id);

    Explanation ex;
    ex.target = Target::Generation;
    ex.source_text = prompt.rendered;
    ex.granularity = config_.granularity.value_or(Granularity::Sentence);
    ex.config_fingerprint = fingerprint(config_);
    ex.backend = generator.descriptor();
    if (!ex.backend.deterministic) ex.warnings.push_back(kWarnNonDeterministic);
    if (prompt.empty_context) ex.warnings.push_back(kWarnEmptyContext);
    if (config_.protect_instruction) ex.protected_spans = prompt.protected_spans;

    const auto features = config_.protect_instruction
                              ? decompose_outside(prompt.rendered, ex.granularity, prompt.protected_spans)
                              : decompose(prompt.rendered, ex.granularity);
    if (features.empty()) throw Error(ErrorCode::NoFeatures, "prompt has no unprotected features");
    const auto perturbations = strategy->perturb(prompt.rendered, features, ex.protected_spans);
    if (perturbations.empty()) throw Error(ErrorCode::NoFeatures, "prompt has no unprotected features");

    ResultCache<std::string> cache;
    const std::string y = reference_response ? *reference_response : generator.generate(prompt.rendered).text;
    ex.reference_response = y;

    std::vector<std::string> responses(perturbations.size());
    parallel_for(perturbations.size(), config_.parallelism, [&](std::size_t i) {
        const auto& text = perturbations[i].text;
        responses[i] = cache.get_or_compute(text, [&] { return generator.generate(text).text; });
    });

    std::vector<PerturbationOutcome> outcomes;
    outcomes.reserve(perturbations.size());
    for (std::size_t i = 0; i < perturbations.size(); ++i) {
        PerturbationOutcome o;
        o.feature_index = perturbations[i].feature_index;
        o.kind = OutcomeKind::GeneratedText;
        o.response_text = responses[i];
        o.similarity_to_reference = compare_texts(y, responses[i], config_.comparator_id, comparator_embedder);
        o.raw_delta = 1.0 - o.similarity_to_reference;
        o.perturbed_text = perturbations[i].text;
        o.strategy_id = perturbations[i].strategy_id;
        outcomes.push_back(std::move(o));
    }
    assemble(ex, features, std::move(outcomes));
    return ex;
}

RagExplanations Explainer::rag(const RagResult& result, const Embedder& embedder, const Generator& generator) const {
    RagExplanations out;
    for (const auto& r : result.retrieved) {
        out.retrieval.push_back(retrieval(result.question.text, r.document.text, embedder, r.score));
    }
    out.generation = generation(result.prompt, generator, result.response.text, &embedder);
    return out;
}

Explanation explain_retrieval(const std::string& question, const std::string& document, const Embedder& embedder,
                              const ExplainerConfig& config) {
    return Explainer(config).retrieval(question, document, embedder);
}

Explanation explain_generation(const Prompt& prompt, const Generator& generator, const ExplainerConfig& config,
                               std::optional<std::string> reference_response, const Embedder* comparator_embedder) {
    return Explainer(config).generation(prompt, generator, std::move(reference_response), comparator_embedder);
}

RagExplanations explain_rag(const RagResult& result, const Embedder& embedder, const Generator& generator,
                            const ExplainerConfig& config) {
    return Explainer(config).rag(result, embedder, generator);
}

Prompt raw_prompt(const std::string& text) {
    Prompt p;
    p.rendered = text;
    return p;
}

}  // namespace ragx
