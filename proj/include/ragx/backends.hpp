#pragma once

#include "ragx/core.hpp"
#include "ragx/embedding.hpp"

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace ragx {

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual BackendDescriptor descriptor() const = 0;
    // One vector per text, same order; "" maps to the zero vector.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const = 0;
    virtual bool reachable() const { return true; }
};

class Generator {
public:
    virtual ~Generator() = default;
    virtual BackendDescriptor descriptor() const = 0;
    virtual GeneratedResponse generate(const std::string& prompt_text) const = 0;
    virtual bool reachable() const { return true; }
};

// Deterministic bag-of-words embedder over a fixed vocabulary: the sorted
// unique lexical tokens of a corpus. Coordinates are term frequencies; one
// trailing coordinate holds the L2 mass of out-of-vocabulary tokens so they
// dilute similarity without ever matching. The whole vector is unit-normed.
class LocalLexicalEmbedder final : public Embedder {
public:
    explicit LocalLexicalEmbedder(const Corpus& corpus);
    static LocalLexicalEmbedder from_texts(const std::vector<std::string>& texts);

    BackendDescriptor descriptor() const override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override;
    EmbeddingVector embed_one(const std::string& text) const;

    const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
    std::size_t vocabulary_size() const noexcept { return vocabulary_.size(); }
    Eigen::Index dimension() const noexcept { return static_cast<Eigen::Index>(vocabulary_.size()) + 1; }

private:
    LocalLexicalEmbedder() = default;
    void build(const std::vector<std::string>& texts);

    std::vector<std::string> vocabulary_;
    std::map<std::string, Eigen::Index> lookup_;
};

// Reference generator for tests and offline runs. Reads the context between
// `context_label` and `question_label` in the prompt, splits it into
// sentences, and answers with the sentence whose normalized tokens have the
// highest F1 overlap with the question's; ties go to the earliest sentence.
class ExtractiveMockGenerator final : public Generator {
public:
    explicit ExtractiveMockGenerator(std::string context_label = "Context:",
                                     std::string question_label = "Question:");

    BackendDescriptor descriptor() const override;
    GeneratedResponse generate(const std::string& prompt_text) const override;

private:
    std::string context_label_;
    std::string question_label_;
};

// Counting gate shared by decorators to cap concurrent backend calls.
class CallLimiter {
public:
    explicit CallLimiter(int max_in_flight);

    class Permit {
    public:
        explicit Permit(CallLimiter& limiter);
        ~Permit();
        Permit(const Permit&) = delete;
        Permit& operator=(const Permit&) = delete;

    private:
        CallLimiter& limiter_;
    };

    int max_in_flight() const noexcept { return max_; }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int max_;
    int in_flight_ = 0;
};

std::shared_ptr<Embedder> limit_calls(std::shared_ptr<Embedder> inner, std::shared_ptr<CallLimiter> limiter);
std::shared_ptr<Generator> limit_calls(std::shared_ptr<Generator> inner, std::shared_ptr<CallLimiter> limiter);

}  // namespace ragx
