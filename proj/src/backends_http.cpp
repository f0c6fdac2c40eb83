#include "ragx/http_backends.hpp"

#include "ragx/digest.hpp"

#include <httplib.h>
#include <json.hpp>

#include <thread>

namespace ragx {
namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw TransportFailure("malformed URL '" + url + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

httplib::Headers to_httplib(const HttpHeaders& headers) {
    httplib::Headers out;
    for (const auto& [k, v] : headers) out.emplace(k, v);
    return out;
}

std::string join(const std::string& endpoint, const std::string& path) {
    if (!endpoint.empty() && endpoint.back() == '/') return endpoint.substr(0, endpoint.size() - 1) + path;
    return endpoint + path;
}

HttpHeaders auth_headers(const RemoteBackendConfig& config) {
    HttpHeaders h{{"Content-Type", "application/json"}};
    if (config.api_key && !config.api_key->empty()) h.emplace_back("Authorization", "Bearer " + *config.api_key);
    return h;
}

std::string remote_message(const HttpResponse& response) {
    try {
        auto j = nlohmann::json::parse(response.body);
        if (j.contains("error")) {
            const auto& e = j["error"];
            if (e.is_object() && e.contains("message") && e["message"].is_string()) return e["message"];
            if (e.is_string()) return e.get<std::string>();
        }
    } catch (const nlohmann::json::exception&) {
    }
    return response.body.substr(0, 500);
}

nlohmann::json parse_body(const HttpResponse& response) {
    try {
        return nlohmann::json::parse(response.body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BackendProtocolError, std::string("unparseable response body: ") + e.what());
    }
}

bool probe(HttpTransport& transport, const RemoteBackendConfig& config) {
    try {
        transport.get(join(config.endpoint, "/models"), auth_headers(config));
        return true;
    } catch (const TransportFailure&) {
        return false;
    }
}

}  // namespace

HttplibTransport::HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

HttpResponse HttplibTransport::post(const std::string& url, const std::string& body, const HttpHeaders& headers) {
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    auto h = to_httplib(headers);
    h.erase("Content-Type");
    auto result = client.Post(parts.path, h, body, "application/json");
    if (!result) throw TransportFailure(httplib::to_string(result.error()));
    return {result->status, result->body};
}

HttpResponse HttplibTransport::get(const std::string& url, const HttpHeaders& headers) {
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    auto result = client.Get(parts.path, to_httplib(headers));
    if (!result) throw TransportFailure(httplib::to_string(result.error()));
    return {result->status, result->body};
}

HttpResponse post_with_retry(HttpTransport& transport, const RetryPolicy& retry, const std::string& url,
                             const std::string& body, const HttpHeaders& headers) {
    std::string last_error;
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            auto response = transport.post(url, body, headers);
            if (!RetryPolicy::retryable_status(response.status)) return response;
            last_error = "HTTP " + std::to_string(response.status) + ": " + remote_message(response);
        } catch (const TransportFailure& e) {
            last_error = e.what();
        }
        if (attempt >= retry.backoff.size()) break;
        if (retry.sleep) {
            retry.sleep(retry.backoff[attempt]);
        } else {
            std::this_thread::sleep_for(retry.backoff[attempt]);
        }
    }
    throw Error(ErrorCode::BackendUnavailable, url + " unavailable after " +
                                                   std::to_string(retry.backoff.size() + 1) +
                                                   " attempts: " + last_error);
}

OpenAIEmbedder::OpenAIEmbedder(RemoteBackendConfig config, std::shared_ptr<HttpTransport> transport, RetryPolicy retry)
    : config_(std::move(config)), transport_(std::move(transport)), retry_(std::move(retry)) {
    if (config_.batch_size == 0) config_.batch_size = 64;
}

BackendDescriptor OpenAIEmbedder::descriptor() const {
    return BackendDescriptor{"openai_embeddings", BackendKind::Embedder, config_.endpoint, config_.model,
                             config_.deterministic};
}

std::string OpenAIEmbedder::request_body(const std::string& model, const std::vector<std::string>& inputs) {
    nlohmann::ordered_json body;
    body["model"] = model;
    body["input"] = inputs;
    return body.dump();
}

std::vector<EmbeddingVector> OpenAIEmbedder::embed_batch(const std::vector<std::string>& inputs) const {
    const auto url = join(config_.endpoint, "/embeddings");
    const auto response = post_with_retry(*transport_, retry_, url, request_body(config_.model, inputs),
                                          auth_headers(config_));
    if (response.status < 200 || response.status >= 300) {
        throw Error(ErrorCode::BackendProtocolError,
                    "embeddings HTTP " + std::to_string(response.status) + ": " + remote_message(response));
    }
    const auto j = parse_body(response);
    if (!j.contains("data") || !j["data"].is_array() || j["data"].size() != inputs.size()) {
        throw Error(ErrorCode::BackendProtocolError, "embeddings response has wrong number of items");
    }
    std::vector<EmbeddingVector> out(inputs.size());
    std::vector<bool> seen(inputs.size(), false);
    Eigen::Index dim = -1;
    for (const auto& item : j["data"]) {
        if (!item.contains("index") || !item.contains("embedding") || !item["embedding"].is_array()) {
            throw Error(ErrorCode::BackendProtocolError, "embeddings item missing index or embedding");
        }
        const auto idx = item["index"].get<std::size_t>();
        if (idx >= inputs.size() || seen[idx]) {
            throw Error(ErrorCode::BackendProtocolError, "embeddings item index out of range or repeated");
        }
        seen[idx] = true;
        const auto& values = item["embedding"];
        EmbeddingVector v(static_cast<Eigen::Index>(values.size()));
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (!values[k].is_number()) throw Error(ErrorCode::BackendProtocolError, "non-numeric embedding value");
            v[static_cast<Eigen::Index>(k)] = values[k].get<double>();
        }
        if (!v.allFinite()) throw Error(ErrorCode::BackendProtocolError, "non-finite embedding value");
        if (dim >= 0 && v.size() != dim) {
            throw Error(ErrorCode::BackendProtocolError, "embedding dimension mismatch within batch");
        }
        dim = v.size();
        out[idx] = unit_normalized(v);
    }
    return out;
}

std::vector<EmbeddingVector> OpenAIEmbedder::embed(const std::vector<std::string>& texts) const {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (!texts[i].empty()) pending.push_back(i);
    }
    for (std::size_t begin = 0; begin < pending.size(); begin += config_.batch_size) {
        const auto end = std::min(pending.size(), begin + config_.batch_size);
        std::vector<std::string> batch;
        for (std::size_t k = begin; k < end; ++k) batch.push_back(texts[pending[k]]);
        auto vectors = embed_batch(batch);
        std::lock_guard lock(dimension_mutex_);
        for (std::size_t k = begin; k < end; ++k) {
            auto& v = vectors[k - begin];
            if (dimension_ && v.size() != *dimension_) {
                throw Error(ErrorCode::BackendProtocolError, "embedding dimension changed between requests");
            }
            dimension_ = v.size();
            out[pending[k]] = std::move(v);
        }
    }
    std::lock_guard lock(dimension_mutex_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (!texts[i].empty()) continue;
        if (!dimension_) {
            throw Error(ErrorCode::BackendProtocolError, "cannot size the zero vector before any embedding call");
        }
        out[i] = EmbeddingVector::Zero(*dimension_);
    }
    return out;
}

bool OpenAIEmbedder::reachable() const { return probe(*transport_, config_); }

OpenAIChatGenerator::OpenAIChatGenerator(RemoteBackendConfig config, std::shared_ptr<HttpTransport> transport,
                                         RetryPolicy retry)
    : config_(std::move(config)), transport_(std::move(transport)), retry_(std::move(retry)) {}

BackendDescriptor OpenAIChatGenerator::descriptor() const {
    return BackendDescriptor{"openai_chat", BackendKind::Generator, config_.endpoint, config_.model,
                             config_.deterministic};
}

std::string OpenAIChatGenerator::request_body(const std::string& model, const std::string& prompt_text,
                                              std::optional<long long> seed) {
    nlohmann::ordered_json message;
    message["role"] = "user";
    message["content"] = prompt_text;
    nlohmann::ordered_json body;
    body["model"] = model;
    body["messages"] = nlohmann::ordered_json::array({message});
    body["temperature"] = 0;
    if (seed) body["seed"] = *seed;
    return body.dump();
}

GeneratedResponse OpenAIChatGenerator::generate(const std::string& prompt_text) const {
    const auto url = join(config_.endpoint, "/chat/completions");
    const auto response = post_with_retry(*transport_, retry_, url,
                                          request_body(config_.model, prompt_text, config_.seed),
                                          auth_headers(config_));
    if (response.status < 200 || response.status >= 300) {
        throw Error(ErrorCode::BackendProtocolError,
                    "chat HTTP " + std::to_string(response.status) + ": " + remote_message(response));
    }
    const auto j = parse_body(response);
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty() ||
        !j["choices"][0].contains("message")) {
        throw Error(ErrorCode::BackendProtocolError, "chat response has no choices");
    }
    const auto& content = j["choices"][0]["message"]["content"];
    GeneratedResponse out;
    if (content.is_string()) {
        out.text = content.get<std::string>();
    } else if (!content.is_null()) {
        throw Error(ErrorCode::BackendProtocolError, "chat message content is not a string");
    }
    out.backend_id = descriptor().backend_id;
    out.settings_fingerprint = sha256_hex(request_body(config_.model, "", config_.seed) + "|" + config_.endpoint);
    return out;
}

bool OpenAIChatGenerator::reachable() const { return probe(*transport_, config_); }

}  // namespace ragx
