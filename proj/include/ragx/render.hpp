#pragma once

#include "ragx/core.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace ragx {

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const Explanation& explanation);
nlohmann::json to_json(const PerturbationOutcome& outcome);
nlohmann::json to_json(const BackendDescriptor& descriptor);
Explanation explanation_from_json(const nlohmann::json& j);

// Sorted keys, 9 significant digits, newline-terminated.
std::string to_canonical_json(const Explanation& explanation);
Explanation parse_explanation(const std::string& canonical_json);

// Content digest of the canonical JSON; used as the explanation id.
std::string explanation_id(const Explanation& explanation);

// Five weight buckets: [0,.2) plain, [.2,.4) dim yellow, [.4,.6) yellow,
// [.6,.8) bright yellow, [.8,1] red background. With top_k, only the k
// highest-weighted features (ties to the lower index) are styled.
std::string render_ansi(const Explanation& explanation, std::optional<int> top_k = std::nullopt);
int ansi_bucket(double weight);
std::string strip_ansi(const std::string& text);

// Standalone HTML page; each feature's background runs linearly from white
// (weight 0) to red (weight 1).
std::string render_html(const Explanation& explanation);
std::string html_background(double weight);
std::string html_escape(const std::string& text);

// Plain text listing: text block followed by the top features.
std::string render_text_summary(const Explanation& explanation, bool color, std::optional<int> top_k);

}  // namespace ragx
