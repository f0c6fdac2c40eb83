#include "ragx/app.hpp"

#include "ragx/compare.hpp"
#include "ragx/digest.hpp"
#include "ragx/render.hpp"
#include "ragx/utf8.hpp"

#include <filesystem>

namespace ragx {

App::App(AppConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (!transport_) transport_ = std::make_shared<HttplibTransport>(std::chrono::seconds(config_.service.timeout_seconds));
}

std::shared_ptr<const VectorIndex> App::index() const {
    std::lock_guard lock(index_mutex_);
    if (!index_) {
        if (!std::filesystem::exists(config_.rag.index_path)) {
            throw Error(ErrorCode::NotFound, "no index at " + config_.rag.index_path + " (run `ragx index <path>`)");
        }
        index_ = std::make_shared<const VectorIndex>(load_index(config_.rag.index_path));
    }
    return index_;
}

bool App::index_available() const {
    std::lock_guard lock(index_mutex_);
    return index_ != nullptr || std::filesystem::exists(config_.rag.index_path);
}

void App::set_index(std::shared_ptr<const VectorIndex> index) {
    std::lock_guard lock(index_mutex_);
    index_ = std::move(index);
}

void App::set_call_limiter(std::shared_ptr<CallLimiter> limiter) { limiter_ = std::move(limiter); }

std::shared_ptr<Embedder> App::make_embedder(const Corpus* vocabulary) const {
    const auto& s = config_.embedder;
    std::shared_ptr<Embedder> e;
    if (s.id == "local_lexical") {
        if (vocabulary == nullptr) throw Error(ErrorCode::EmptyCorpus, "local_lexical embedder needs a vocabulary");
        e = std::make_shared<LocalLexicalEmbedder>(*vocabulary);
    } else if (s.id == "openai") {
        RemoteBackendConfig rc{s.endpoint, s.model, s.api_key, s.deterministic, s.seed, s.batch_size};
        e = std::make_shared<OpenAIEmbedder>(rc, transport_);
    } else {
        throw Error(ErrorCode::UnknownBackend, "unknown embedder '" + s.id + "'");
    }
    return limiter_ ? limit_calls(e, limiter_) : e;
}

std::shared_ptr<const Embedder> App::embedder_for(const Corpus& vocabulary) const { return make_embedder(&vocabulary); }

std::shared_ptr<const Embedder> App::index_embedder() const {
    const auto idx = index();
    const auto corpus = idx->corpus();
    auto e = make_embedder(&corpus);
    if (e->descriptor().backend_id != idx->embedder.backend_id) {
        throw Error(ErrorCode::ConfigError, "index was built with embedder '" + idx->embedder.backend_id +
                                                "' but '" + e->descriptor().backend_id + "' is configured");
    }
    return e;
}

std::shared_ptr<const Generator> App::generator() const {
    const auto& s = config_.generator;
    std::shared_ptr<Generator> g;
    if (s.id == "extractive_mock") {
        g = std::make_shared<ExtractiveMockGenerator>();
    } else if (s.id == "openai") {
        RemoteBackendConfig rc{s.endpoint, s.model, s.api_key, s.deterministic, s.seed, s.batch_size};
        g = std::make_shared<OpenAIChatGenerator>(rc, transport_);
    } else {
        throw Error(ErrorCode::UnknownBackend, "unknown generator '" + s.id + "'");
    }
    return limiter_ ? limit_calls(g, limiter_) : g;
}

std::string App::prompt_template() const {
    return config_.rag.prompt_template.empty() ? std::string(kDefaultTemplate) : config_.rag.prompt_template;
}

VectorIndex App::build_index(const Corpus& corpus) const {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot index an empty corpus");
    const auto embedder = make_embedder(&corpus);
    return ragx::build_index(corpus, *embedder, config_.embedder.batch_size);
}

RagResult App::query(const std::string& question, std::optional<std::size_t> k) const {
    if (utf8::trim(question).empty()) throw Error(ErrorCode::EmptyInput, "question is empty");
    RagPipeline pipeline(index(), index_embedder(), generator(), prompt_template(),
                         config_.explain.protect_instruction);
    auto result = pipeline.answer(question, k.value_or(config_.rag.k));
    result.question.id = sha256_hex(question).substr(0, 16);
    return result;
}

Explanation App::explain_retrieval(const RetrievalRequest& request) const {
    if (utf8::trim(request.question).empty()) throw Error(ErrorCode::EmptyInput, "question is empty");
    if (request.document_id && request.text) {
        throw Error(ErrorCode::UsageError, "give either a document id or a text, not both");
    }
    auto cfg = config_.explain;
    if (request.strategy) cfg.strategy_id = *request.strategy == "loo" ? "leave_one_out" : *request.strategy;
    if (request.granularity) cfg.granularity = request.granularity;

    std::string document;
    std::shared_ptr<const Embedder> embedder;
    if (request.document_id) {
        const auto idx = index();
        const auto corpus = idx->corpus();
        const auto* doc = corpus.find(*request.document_id);
        if (doc == nullptr) throw Error(ErrorCode::NotFound, "unknown document '" + *request.document_id + "'");
        document = doc->text;
        embedder = index_embedder();
    } else if (request.text) {
        document = *request.text;
        if (utf8::trim(document).empty()) throw Error(ErrorCode::EmptyInput, "document text is empty");
        embedder = index_available() ? index_embedder()
                                     : embedder_for(Corpus{{Document{"text", document, {}}}});
    } else {
        const auto result = query(request.question, 1);
        if (result.retrieved.empty()) throw Error(ErrorCode::NotFound, "nothing retrieved");
        document = result.retrieved.front().document.text;
        embedder = index_embedder();
    }
    return Explainer(cfg).retrieval(request.question, document, *embedder);
}

Explanation App::explain_generation(const GenerationRequest& request) const {
    if (utf8::trim(request.question).empty()) throw Error(ErrorCode::EmptyInput, "question is empty");
    auto cfg = config_.explain;
    if (request.comparator) cfg.comparator_id = *request.comparator;
    if (request.include_instruction) cfg.protect_instruction = !*request.include_instruction;
    if (!comparator_known(cfg.comparator_id)) {
        throw Error(ErrorCode::UnknownComparator, "unknown comparator '" + cfg.comparator_id + "'");
    }

    const auto embedder = index_embedder();
    const auto gen = generator();
    RagPipeline pipeline(index(), embedder, gen, prompt_template(), cfg.protect_instruction);
    const auto result = pipeline.answer(request.question, request.k.value_or(config_.rag.k));
    return Explainer(cfg).generation(result.prompt, *gen, result.response.text, embedder.get());
}

Explanation App::explain_pair(const PairRequest& request) const {
    if (utf8::trim(request.prompt).empty()) throw Error(ErrorCode::EmptyInput, "prompt is empty");
    auto cfg = config_.explain;
    if (request.comparator) cfg.comparator_id = *request.comparator;
    std::shared_ptr<const Embedder> embedder;
    if (cfg.comparator_id == "embedding") {
        embedder = index_available() ? index_embedder()
                                     : embedder_for(Corpus{{Document{"prompt", request.prompt, {}}}});
    }
    return Explainer(cfg).generation(raw_prompt(request.prompt), *generator(), request.reference_response,
                                     embedder.get());
}

std::vector<BackendHealth> App::health() const {
    std::vector<BackendHealth> out;
    const Corpus probe_corpus{{Document{"probe", "probe", {}}}};
    try {
        const auto e = index_available() ? index_embedder() : embedder_for(probe_corpus);
        out.push_back({e->descriptor(), e->reachable()});
    } catch (const Error&) {
        BackendDescriptor d{config_.embedder.id, BackendKind::Embedder, std::nullopt, std::nullopt, false};
        if (!config_.embedder.endpoint.empty()) d.endpoint = config_.embedder.endpoint;
        out.push_back({d, false});
    }
    try {
        const auto g = generator();
        out.push_back({g->descriptor(), g->reachable()});
    } catch (const Error&) {
        BackendDescriptor d{config_.generator.id, BackendKind::Generator, std::nullopt, std::nullopt, false};
        if (!config_.generator.endpoint.empty()) d.endpoint = config_.generator.endpoint;
        out.push_back({d, false});
    }
    return out;
}

nlohmann::json to_json(const Document& d) {
    return {{"id", d.id}, {"text", d.text}, {"metadata", d.metadata}};
}

nlohmann::json to_json(const RagResult& result) {
    nlohmann::json retrieved = nlohmann::json::array();
    for (const auto& r : result.retrieved) retrieved.push_back({{"doc", to_json(r.document)}, {"score", r.score}});
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& s : result.prompt.protected_spans) spans.push_back({s.start, s.end});
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : result.prompt.context_blocks) {
        blocks.push_back({{"document_id", b.document_id}, {"text", b.text}});
    }
    return {{"question", result.question.text},
            {"retrieved", retrieved},
            {"prompt",
             {{"rendered", result.prompt.rendered},
              {"instruction", result.prompt.instruction},
              {"question_text", result.prompt.question_text},
              {"context_blocks", blocks},
              {"protected_spans", spans}}},
            {"response", result.response.text},
            {"response_backend", result.response.backend_id},
            {"settings_fingerprint", result.response.settings_fingerprint}};
}

}  // namespace ragx
