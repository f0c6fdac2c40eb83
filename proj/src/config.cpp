#include "ragx/config.hpp"

#include "ragx/errors.hpp"

#include <cstdlib>
#include <fstream>

namespace ragx {
namespace {

BackendSettings backend_from_json(const nlohmann::json& j, BackendSettings base) {
    if (j.contains("id")) base.id = j["id"];
    if (j.contains("endpoint")) base.endpoint = j["endpoint"];
    if (j.contains("model")) base.model = j["model"];
    if (j.contains("api_key") && !j["api_key"].is_null()) base.api_key = j["api_key"].get<std::string>();
    if (j.contains("seed") && !j["seed"].is_null()) base.seed = j["seed"].get<long long>();
    if (j.contains("deterministic")) base.deterministic = j["deterministic"];
    if (j.contains("batch_size")) base.batch_size = j["batch_size"];
    return base;
}

nlohmann::json backend_json(const BackendSettings& b, bool redact) {
    nlohmann::json j{{"id", b.id}, {"endpoint", b.endpoint}, {"model", b.model},
                     {"deterministic", b.deterministic}, {"batch_size", b.batch_size}};
    if (b.api_key) j["api_key"] = redact ? "***" : *b.api_key;
    if (b.seed) j["seed"] = *b.seed;
    return j;
}

}  // namespace

AppConfig config_from_json(const nlohmann::json& j) {
    AppConfig c;
    try {
        if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
        if (j.contains("embedder")) c.embedder = backend_from_json(j["embedder"], c.embedder);
        if (j.contains("generator")) c.generator = backend_from_json(j["generator"], c.generator);
        if (j.contains("explain")) {
            const auto& e = j["explain"];
            if (e.contains("granularity") && !e["granularity"].is_null()) {
                c.explain.granularity = parse_granularity(e["granularity"]);
            }
            if (e.contains("strategy")) c.explain.strategy_id = e["strategy"];
            if (e.contains("comparator")) c.explain.comparator_id = e["comparator"];
            if (e.contains("parallelism")) c.explain.parallelism = e["parallelism"];
            if (e.contains("top_k_render") && !e["top_k_render"].is_null()) c.explain.top_k_render = e["top_k_render"];
            if (e.contains("protect_instruction")) c.explain.protect_instruction = e["protect_instruction"];
            if (e.contains("mask_token")) c.explain.mask_token = e["mask_token"];
        }
        if (j.contains("service")) {
            const auto& s = j["service"];
            c.service.host = s.value("host", c.service.host);
            c.service.port = s.value("port", c.service.port);
            c.service.cors_origin = s.value("cors_origin", c.service.cors_origin);
            c.service.timeout_seconds = s.value("timeout_seconds", c.service.timeout_seconds);
            c.service.max_in_flight = s.value("max_in_flight", c.service.max_in_flight);
            c.service.lru_capacity = s.value("lru_capacity", c.service.lru_capacity);
        }
        if (j.contains("rag")) {
            const auto& r = j["rag"];
            c.rag.index_path = r.value("index", c.rag.index_path);
            c.rag.prompt_template = r.value("template", c.rag.prompt_template);
            c.rag.k = r.value("k", c.rag.k);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("invalid config: ") + e.what());
    }
    if (c.explain.parallelism < 1) throw Error(ErrorCode::ConfigError, "explain.parallelism must be >= 1");
    if (c.rag.k < 1) throw Error(ErrorCode::ConfigError, "rag.k must be >= 1");
    return c;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, "config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

void apply_environment(AppConfig& config) {
    if (const char* key = std::getenv("RAGX_API_KEY"); key != nullptr && *key != '\0') {
        config.embedder.api_key = key;
        config.generator.api_key = key;
    }
}

nlohmann::json to_json(const AppConfig& c, bool redact_secrets) {
    nlohmann::json explain{{"granularity", c.explain.granularity ? nlohmann::json(to_string(*c.explain.granularity))
                                                                 : nlohmann::json()},
                           {"strategy", c.explain.strategy_id},
                           {"comparator", c.explain.comparator_id},
                           {"parallelism", c.explain.parallelism},
                           {"top_k_render", c.explain.top_k_render ? nlohmann::json(*c.explain.top_k_render)
                                                                   : nlohmann::json()},
                           {"protect_instruction", c.explain.protect_instruction},
                           {"mask_token", c.explain.mask_token}};
    return {{"embedder", backend_json(c.embedder, redact_secrets)},
            {"generator", backend_json(c.generator, redact_secrets)},
            {"explain", explain},
            {"service",
             {{"host", c.service.host},
              {"port", c.service.port},
              {"cors_origin", c.service.cors_origin},
              {"timeout_seconds", c.service.timeout_seconds},
              {"max_in_flight", c.service.max_in_flight},
              {"lru_capacity", c.service.lru_capacity}}},
            {"rag", {{"index", c.rag.index_path}, {"template", c.rag.prompt_template}, {"k", c.rag.k}}}};
}

}  // namespace ragx
