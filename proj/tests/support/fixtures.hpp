#pragma once

#include "ragx/http_backends.hpp"
#include "ragx/rag.hpp"

#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

inline const char* kSkyQuestion = "what color is the sky";
inline const char* kSkyDocument = "the sky is blue";

inline const char* kCapitalQuestion = "What is the capital of France?";
inline const char* kCapitalContext = "Paris is the capital of France. Berlin is the capital of Germany.";
inline const char* kParis = "Paris is the capital of France.";
inline const char* kBerlin = "Berlin is the capital of Germany.";

inline ragx::Prompt capital_prompt(bool protect = true) {
    return ragx::compose_prompt(ragx::kDefaultTemplate, kCapitalQuestion, {ragx::Document{"d1", kCapitalContext, {}}},
                                protect);
}

inline std::string fixtures_dir() { return RAGX_FIXTURES_DIR; }

// Unique scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("ragx-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

    std::filesystem::path write(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::filesystem::create_directories(p.parent_path());
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }

private:
    std::filesystem::path path_;
};

// Replays scripted responses and records every request byte for byte.
class RecordingTransport final : public ragx::HttpTransport {
public:
    struct Request {
        std::string method;
        std::string url;
        std::string body;
        ragx::HttpHeaders headers;
    };

    // status 0 scripts a transport failure.
    void script(int status, std::string body = "{}") {
        std::lock_guard lock(mutex_);
        script_.push_back({status, std::move(body)});
    }

    ragx::HttpResponse post(const std::string& url, const std::string& body, const ragx::HttpHeaders& headers) override {
        return next({"POST", url, body, headers});
    }
    ragx::HttpResponse get(const std::string& url, const ragx::HttpHeaders& headers) override {
        return next({"GET", url, "", headers});
    }

    std::vector<Request> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

private:
    ragx::HttpResponse next(Request r) {
        std::lock_guard lock(mutex_);
        requests_.push_back(std::move(r));
        if (script_.empty()) throw ragx::TransportFailure("no scripted response");
        auto resp = script_.front();
        script_.pop_front();
        if (resp.status == 0) throw ragx::TransportFailure("connection refused");
        return resp;
    }

    mutable std::mutex mutex_;
    std::deque<ragx::HttpResponse> script_;
    std::vector<Request> requests_;
};

}  // namespace fixtures
