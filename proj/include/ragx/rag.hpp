#pragma once

#include "ragx/backends.hpp"
#include "ragx/core.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace ragx {

inline constexpr const char* kDefaultTemplate =
    "Answer using the context.\nContext: {context}\nQuestion: {question}";

// .txt files become one document each (id = path relative to `path`), .jsonl
// files one document per line {"id","text","metadata"?}. Sorted by id.
Corpus ingest(const std::filesystem::path& path);

struct VectorIndex {
    std::vector<Document> documents;
    Eigen::MatrixXd vectors;  // one row per document
    BackendDescriptor embedder;

    std::size_t size() const noexcept { return documents.size(); }
    Eigen::Index dimension() const noexcept { return vectors.cols(); }
    Corpus corpus() const { return Corpus{documents}; }
};

VectorIndex build_index(const Corpus& corpus, const Embedder& embedder, std::size_t batch_size = 64);

// Single file: one line of JSON header, then rows of little-endian float32.
void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path);

struct ScoredDocument {
    Document document;
    double score = 0.0;
};

// Exhaustive cosine top-k, score descending, ties by id ascending.
std::vector<ScoredDocument> search(const VectorIndex& index, const Embedder& embedder, const std::string& question,
                                   std::size_t k);

// Substitutes {context} (documents joined by newlines) and {question}. Every
// literal template segment becomes a protected span when protect_instruction.
Prompt compose_prompt(const std::string& prompt_template, const std::string& question,
                      const std::vector<Document>& documents, bool protect_instruction = true);

struct RagResult {
    Question question;
    std::vector<ScoredDocument> retrieved;
    Prompt prompt;
    GeneratedResponse response;
};

class RagPipeline {
public:
    RagPipeline(std::shared_ptr<const VectorIndex> index, std::shared_ptr<const Embedder> embedder,
                std::shared_ptr<const Generator> generator, std::string prompt_template = kDefaultTemplate,
                bool protect_instruction = true);

    RagResult answer(const std::string& question, std::size_t k) const;

    const VectorIndex& index() const noexcept { return *index_; }
    const Embedder& embedder() const noexcept { return *embedder_; }
    const Generator& generator() const noexcept { return *generator_; }

private:
    std::shared_ptr<const VectorIndex> index_;
    std::shared_ptr<const Embedder> embedder_;
    std::shared_ptr<const Generator> generator_;
    std::string template_;
    bool protect_instruction_;
};

}  // namespace ragx
