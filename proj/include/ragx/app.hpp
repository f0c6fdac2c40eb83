#pragma once

#include "ragx/backends.hpp"
#include "ragx/config.hpp"
#include "ragx/explain.hpp"
#include "ragx/http_backends.hpp"
#include "ragx/rag.hpp"

#include <json.hpp>

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ragx {

struct RetrievalRequest {
    std::string question;
    std::optional<std::string> document_id;
    std::optional<std::string> text;
    std::optional<std::string> strategy;
    std::optional<Granularity> granularity;
};

struct GenerationRequest {
    std::string question;
    std::optional<std::size_t> k;
    std::optional<std::string> comparator;
    std::optional<bool> include_instruction;
};

// Explain a caller-supplied prompt/response pair without running retrieval.
struct PairRequest {
    std::string prompt;
    std::string reference_response;
    std::optional<std::string> comparator;
};

struct BackendHealth {
    BackendDescriptor descriptor;
    bool reachable = true;
};

// Backends, index and request handling shared by the CLI and the HTTP
// service, so both surfaces produce identical explanations.
class App {
public:
    explicit App(AppConfig config, std::shared_ptr<HttpTransport> transport = nullptr);

    const AppConfig& config() const noexcept { return config_; }

    // Loaded on first use from config.rag.index_path; NotFound when absent.
    std::shared_ptr<const VectorIndex> index() const;
    bool index_available() const;
    void set_index(std::shared_ptr<const VectorIndex> index);

    std::shared_ptr<const Embedder> embedder_for(const Corpus& vocabulary) const;
    std::shared_ptr<const Embedder> index_embedder() const;
    std::shared_ptr<const Generator> generator() const;
    void set_call_limiter(std::shared_ptr<CallLimiter> limiter);

    VectorIndex build_index(const Corpus& corpus) const;
    RagResult query(const std::string& question, std::optional<std::size_t> k) const;
    Explanation explain_retrieval(const RetrievalRequest& request) const;
    Explanation explain_generation(const GenerationRequest& request) const;
    Explanation explain_pair(const PairRequest& request) const;
    std::vector<BackendHealth> health() const;

private:
    std::shared_ptr<Embedder> make_embedder(const Corpus* vocabulary) const;
    std::string prompt_template() const;

    AppConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    std::shared_ptr<CallLimiter> limiter_;
    mutable std::mutex index_mutex_;
    mutable std::shared_ptr<const VectorIndex> index_;
};

nlohmann::json to_json(const RagResult& result);
nlohmann::json to_json(const Document& document);

}  // namespace ragx
