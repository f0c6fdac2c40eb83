#include "ragx/service.hpp"

#include "ragx/canonical_json.hpp"
#include "ragx/render.hpp"

#include <httplib.h>

#include <chrono>
#include <future>
#include <regex>
#include <thread>

namespace ragx {
namespace {

ServiceResponse json_response(int status, const nlohmann::json& body) {
    return ServiceResponse{status, canonical_dump(body), {}};
}

ServiceResponse error_response(int status, const std::string& code, const std::string& message) {
    return json_response(status, {{"code", code}, {"message", message}});
}

nlohmann::json parse_object(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body.empty() ? "{}" : body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed JSON body: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
    return j;
}

std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a string");
    return j[key].get<std::string>();
}

std::string req_string(const nlohmann::json& j, const char* key) {
    auto v = opt_string(j, key);
    if (!v) throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
    return *v;
}

std::optional<std::size_t> opt_count(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_number_integer()) throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be an integer");
    const auto v = j[key].get<long long>();
    if (v < 1) throw Error(ErrorCode::PreconditionViolation, std::string("field '") + key + "' must be >= 1");
    return static_cast<std::size_t>(v);
}

std::optional<bool> opt_bool(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_boolean()) throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a boolean");
    return j[key].get<bool>();
}

}  // namespace

int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound:
            return 404;
        case ErrorCode::BackendUnavailable:
        case ErrorCode::BackendProtocolError:
            return 502;
        case ErrorCode::ParseError:
        case ErrorCode::UsageError:
        case ErrorCode::UnknownStrategy:
        case ErrorCode::UnknownComparator:
        case ErrorCode::UnknownBackend:
        case ErrorCode::PreconditionViolation:
            return 400;
        default:
            return 422;
    }
}

ExplanationStore::ExplanationStore(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

std::string ExplanationStore::put(Explanation explanation) {
    auto id = explanation_id(explanation);
    auto value = std::make_shared<const Explanation>(std::move(explanation));
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(id); it != entries_.end()) {
        order_.erase(it->second.second);
        entries_.erase(it);
    }
    order_.push_front(id);
    entries_.emplace(id, std::make_pair(std::move(value), order_.begin()));
    while (entries_.size() > capacity_) {
        entries_.erase(order_.back());
        order_.pop_back();
    }
    return id;
}

std::shared_ptr<const Explanation> ExplanationStore::get(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second.second);
    return it->second.first;
}

std::size_t ExplanationStore::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

Service::Service(std::shared_ptr<App> app)
    : app_(std::move(app)), store_(std::make_shared<ExplanationStore>(app_->config().service.lru_capacity)) {
    app_->set_call_limiter(std::make_shared<CallLimiter>(app_->config().service.max_in_flight));
}

Service::~Service() { stop(); }

namespace {

ServiceResponse dispatch(App& app, ExplanationStore& store, const std::string& method, const std::string& path,
                         const std::string& body) {
    static const std::regex perturbation_route(R"(^/api/perturbation/([0-9a-f]{64})/([0-9]+)$)");
    try {
        if (method == "GET" && path == "/api/health") {
            nlohmann::json backends = nlohmann::json::array();
            for (const auto& h : app.health()) {
                auto d = to_json(h.descriptor);
                d["reachable"] = h.reachable;
                backends.push_back(std::move(d));
            }
            return json_response(200, {{"status", "ok"}, {"backends", backends}});
        }
        if (method == "GET" && path == "/api/config") {
            return json_response(200, to_json(app.config(), true));
        }
        if (method == "POST" && path == "/api/query") {
            const auto j = parse_object(body);
            const auto question = req_string(j, "question");
            return json_response(200, to_json(app.query(question, opt_count(j, "k"))));
        }
        if (method == "POST" && path == "/api/explain/retrieval") {
            const auto j = parse_object(body);
            RetrievalRequest r;
            r.question = req_string(j, "question");
            r.document_id = opt_string(j, "document_id");
            r.text = opt_string(j, "text");
            r.strategy = opt_string(j, "strategy");
            if (auto g = opt_string(j, "granularity")) r.granularity = parse_granularity(*g);
            auto explanation = app.explain_retrieval(r);
            auto response = ServiceResponse{200, to_canonical_json(explanation), {}};
            response.headers["X-Explanation-Id"] = store.put(std::move(explanation));
            return response;
        }
        if (method == "POST" && path == "/api/explain/generation") {
            const auto j = parse_object(body);
            Explanation explanation;
            if (j.contains("prompt")) {
                PairRequest r;
                r.prompt = req_string(j, "prompt");
                r.reference_response = req_string(j, "reference_response");
                r.comparator = opt_string(j, "comparator");
                explanation = app.explain_pair(r);
            } else {
                GenerationRequest r;
                r.question = req_string(j, "question");
                r.k = opt_count(j, "k");
                r.comparator = opt_string(j, "comparator");
                r.include_instruction = opt_bool(j, "include_instruction");
                explanation = app.explain_generation(r);
            }
            auto response = ServiceResponse{200, to_canonical_json(explanation), {}};
            response.headers["X-Explanation-Id"] = store.put(std::move(explanation));
            return response;
        }
        if (std::smatch m; method == "POST" && std::regex_match(path, m, perturbation_route)) {
            const auto explanation = store.get(m[1]);
            if (!explanation) return error_response(404, "NotFound", "unknown explanation '" + m[1].str() + "'");
            const auto index = std::stoull(m[2]);
            for (const auto& a : explanation->features) {
                if (a.feature.index != index) continue;
                auto j = to_json(a.outcome);
                j["feature_index"] = a.feature.index;
                j["feature_text"] = a.feature.text;
                return json_response(200, j);
            }
            return error_response(404, "NotFound", "explanation has no feature " + m[2].str());
        }
        if (path.rfind("/api/", 0) == 0) return error_response(404, "NotFound", "no route " + method + " " + path);
        return error_response(404, "NotFound", "no route " + path);
    } catch (const Error& e) {
        return error_response(http_status_for(e.code()), std::string(to_string(e.code())), e.what());
    } catch (const std::exception& e) {
        return error_response(500, "InternalError", e.what());
    }
}

}  // namespace

ServiceResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) {
    // The worker holds its own references to the app and the store, so a
    // timed-out request can finish in the background after the service is gone.
    auto task = std::make_shared<std::packaged_task<ServiceResponse()>>(
        [app = app_, store = store_, method, path, body] { return dispatch(*app, *store, method, path, body); });
    auto future = task->get_future();
    std::thread([task] { (*task)(); }).detach();
    const auto timeout = std::chrono::seconds(app_->config().service.timeout_seconds);
    if (future.wait_for(timeout) == std::future_status::timeout) {
        return error_response(504, "Timeout", "request exceeded " + std::to_string(timeout.count()) + " s");
    }
    return future.get();
}

void Service::install_routes() {
    server_ = std::make_unique<httplib::Server>();
    const auto origin = app_->config().service.cors_origin;
    auto forward = [this, origin](const httplib::Request& req, httplib::Response& res) {
        const auto out = handle(req.method, req.path, req.body);
        res.status = out.status;
        for (const auto& [k, v] : out.headers) res.set_header(k, v);
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Access-Control-Expose-Headers", "X-Explanation-Id");
        res.set_content(out.body, "application/json; charset=utf-8");
    };
    server_->Get(R"(/api/.*)", forward);
    server_->Post(R"(/api/.*)", forward);
    server_->Options(R"(/api/.*)", [origin](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
    const auto timeout = app_->config().service.timeout_seconds;
    server_->set_read_timeout(timeout, 0);
    server_->set_write_timeout(timeout, 0);
}

bool Service::listen(const std::string& host, int port) {
    install_routes();
    return server_->listen(host, port);
}

int Service::start_background(const std::string& host) {
    install_routes();
    const int port = server_->bind_to_any_port(host);
    if (port < 0) throw Error(ErrorCode::BackendUnavailable, "cannot bind a port on " + host);
    thread_ = std::make_unique<std::thread>([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void Service::stop() {
    if (server_) server_->stop();
    if (thread_ && thread_->joinable()) thread_->join();
    thread_.reset();
}

}  // namespace ragx
