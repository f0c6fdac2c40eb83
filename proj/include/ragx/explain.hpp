#pragma once

#include "ragx/backends.hpp"
#include "ragx/core.hpp"
#include "ragx/perturb.hpp"
#include "ragx/rag.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ragx {

inline constexpr const char* kWarnDegenerateReference = "DegenerateReference";
inline constexpr const char* kWarnNonDeterministic = "NonDeterministicBackend";
inline constexpr const char* kWarnEmptyContext = "EmptyContext";

// Largest allowed gap between a stored retrieval score and its recomputation.
inline constexpr double kStaleScoreTolerance = 1e-6;

struct RagExplanations {
    std::vector<Explanation> retrieval;  // retrieval rank order
    Explanation generation;
};

class Explainer {
public:
    explicit Explainer(ExplainerConfig config = {});
    Explainer(ExplainerConfig config, StrategyRegistry strategies);

    // Why was `document` retrieved for `question`: each feature is weighted
    // by how much removing it lowers cosine(E(q), E(p_i)) below s_d.
    Explanation retrieval(const std::string& question, const std::string& document, const Embedder& embedder,
                          std::optional<double> reference_score = std::nullopt) const;

    // Why did the generator answer y: each prompt feature is weighted by how
    // far the response to the perturbed prompt moves away from y.
    Explanation generation(const Prompt& prompt, const Generator& generator,
                           std::optional<std::string> reference_response = std::nullopt,
                           const Embedder* comparator_embedder = nullptr) const;

    RagExplanations rag(const RagResult& result, const Embedder& embedder, const Generator& generator) const;

    const ExplainerConfig& config() const noexcept { return config_; }

private:
    ExplainerConfig config_;
    StrategyRegistry strategies_;
};

Explanation explain_retrieval(const std::string& question, const std::string& document, const Embedder& embedder,
                              const ExplainerConfig& config = {});

Explanation explain_generation(const Prompt& prompt, const Generator& generator, const ExplainerConfig& config = {},
                               std::optional<std::string> reference_response = std::nullopt,
                               const Embedder* comparator_embedder = nullptr);

RagExplanations explain_rag(const RagResult& result, const Embedder& embedder, const Generator& generator,
                            const ExplainerConfig& config = {});

// Prompt with no template structure: the whole text is perturbable.
Prompt raw_prompt(const std::string& text);

}  // namespace ragx
