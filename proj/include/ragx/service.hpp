#pragma once

#include "ragx/app.hpp"

#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace httplib {
class Server;
}

namespace ragx {

// Bounded LRU of explanations keyed by content digest. Values are shared so
// an eviction never invalidates a reader that already holds one.
class ExplanationStore {
public:
    explicit ExplanationStore(std::size_t capacity = 128);

    std::string put(Explanation explanation);
    std::shared_ptr<const Explanation> get(const std::string& id);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::size_t capacity_;
    std::list<std::string> order_;  // most recent first
    std::map<std::string, std::pair<std::shared_ptr<const Explanation>, std::list<std::string>::iterator>> entries_;
};

struct ServiceResponse {
    int status = 200;
    std::string body;
    std::map<std::string, std::string> headers;
};

int http_status_for(ErrorCode code);

class Service {
public:
    explicit Service(std::shared_ptr<App> app);
    ~Service();

    // Routes one request; used by the HTTP server and directly by tests.
    ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body);

    // Blocking. Returns false if the socket could not be bound.
    bool listen(const std::string& host, int port);
    // Binds an ephemeral port and serves on a background thread.
    int start_background(const std::string& host = "127.0.0.1");
    void stop();

    ExplanationStore& store() noexcept { return *store_; }

private:
    void install_routes();

    std::shared_ptr<App> app_;
    std::shared_ptr<ExplanationStore> store_;
    std::unique_ptr<httplib::Server> server_;
    std::unique_ptr<std::thread> thread_;
};

}  // namespace ragx
