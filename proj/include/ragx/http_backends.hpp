#pragma once

#include "ragx/backends.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ragx {

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Raised by transports when no HTTP response was obtained at all.
class TransportFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& url, const std::string& body, const HttpHeaders& headers) = 0;
    virtual HttpResponse get(const std::string& url, const HttpHeaders& headers) = 0;
};

// cpp-httplib backed transport; a fresh client per request.
class HttplibTransport final : public HttpTransport {
public:
    explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(60));
    HttpResponse post(const std::string& url, const std::string& body, const HttpHeaders& headers) override;
    HttpResponse get(const std::string& url, const HttpHeaders& headers) override;

private:
    std::chrono::seconds timeout_;
};

struct RetryPolicy {
    // One retry per delay; only transport failures, 429 and 5xx are retried.
    std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(250), std::chrono::milliseconds(1000),
                                                   std::chrono::milliseconds(4000)};
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for

    static bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }
};

struct RemoteBackendConfig {
    std::string endpoint;  // e.g. http://localhost:8000/v1
    std::string model;
    std::optional<std::string> api_key;
    bool deterministic = false;
    std::optional<long long> seed;
    std::size_t batch_size = 64;
};

// POST {endpoint}/embeddings  {"model":m,"input":[...]}
class OpenAIEmbedder final : public Embedder {
public:
    OpenAIEmbedder(RemoteBackendConfig config, std::shared_ptr<HttpTransport> transport, RetryPolicy retry = {});

    BackendDescriptor descriptor() const override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override;
    bool reachable() const override;

    static std::string request_body(const std::string& model, const std::vector<std::string>& inputs);

private:
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& inputs) const;

    RemoteBackendConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    RetryPolicy retry_;
    mutable std::mutex dimension_mutex_;
    mutable std::optional<Eigen::Index> dimension_;
};

// POST {endpoint}/chat/completions  {"model":m,"messages":[...],"temperature":0}
class OpenAIChatGenerator final : public Generator {
public:
    OpenAIChatGenerator(RemoteBackendConfig config, std::shared_ptr<HttpTransport> transport, RetryPolicy retry = {});

    BackendDescriptor descriptor() const override;
    GeneratedResponse generate(const std::string& prompt_text) const override;
    bool reachable() const override;

    static std::string request_body(const std::string& model, const std::string& prompt_text,
                                    std::optional<long long> seed);

private:
    RemoteBackendConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    RetryPolicy retry_;
};

// Sends with retries; returns the first non-retryable response. Throws
// BackendUnavailable when attempts are exhausted.
HttpResponse post_with_retry(HttpTransport& transport, const RetryPolicy& retry, const std::string& url,
                             const std::string& body, const HttpHeaders& headers);

}  // namespace ragx
