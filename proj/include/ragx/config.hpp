#pragma once

#include "ragx/core.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace ragx {

struct BackendSettings {
    std::string id;  // "local_lexical" / "extractive_mock" / "openai"
    std::string endpoint;
    std::string model;
    std::optional<std::string> api_key;
    std::optional<long long> seed;
    bool deterministic = false;
    std::size_t batch_size = 64;
};

inline BackendSettings backend_settings(std::string id) {
    BackendSettings s;
    s.id = std::move(id);
    return s;
}

struct ServiceSettings {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string cors_origin = "*";
    int timeout_seconds = 120;
    int max_in_flight = 32;
    std::size_t lru_capacity = 128;
};

struct RagSettings {
    std::string index_path = "index.ragx";
    std::string prompt_template;  // empty = default template
    std::size_t k = 1;
};

// Sections: "embedder", "generator", "explain", "service", "rag". The
// RAGX_API_KEY environment variable overrides any api_key in the file.
struct AppConfig {
    BackendSettings embedder = backend_settings("local_lexical");
    BackendSettings generator = backend_settings("extractive_mock");
    ExplainerConfig explain;
    ServiceSettings service;
    RagSettings rag;
};

AppConfig config_from_json(const nlohmann::json& j);
AppConfig load_config(const std::filesystem::path& path);
void apply_environment(AppConfig& config);
nlohmann::json to_json(const AppConfig& config, bool redact_secrets = true);

}  // namespace ragx
