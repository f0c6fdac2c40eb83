#include "ragx/render.hpp"

#include "ragx/canonical_json.hpp"
#include "ragx/digest.hpp"
#include "ragx/errors.hpp"
#include "ragx/utf8.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace ragx {
namespace {

const char* const kAnsiReset = "\x1b[0m";
const char* const kAnsiBuckets[] = {"", "\x1b[2;33m", "\x1b[33m", "\x1b[93m", "\x1b[41m"};

nlohmann::json span_json(const Span& s) { return nlohmann::json::array({s.start, s.end}); }

Span span_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::ParseError, "span must be [start, end]");
    return Span{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

BackendDescriptor descriptor_from_json(const nlohmann::json& j) {
    BackendDescriptor d;
    d.backend_id = j.at("backend_id");
    d.kind = j.at("kind") == "generator" ? BackendKind::Generator : BackendKind::Embedder;
    d.deterministic = j.at("deterministic");
    if (j.contains("endpoint")) d.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("model_name")) d.model_name = j["model_name"].get<std::string>();
    return d;
}

PerturbationOutcome outcome_from_json(const nlohmann::json& j, std::size_t feature_index) {
    PerturbationOutcome o;
    o.feature_index = feature_index;
    const std::string kind = j.at("kind");
    if (kind == "retrieval_score") {
        o.kind = OutcomeKind::RetrievalScore;
        o.score = j.at("score").get<double>();
    } else if (kind == "generated_text") {
        o.kind = OutcomeKind::GeneratedText;
        o.response_text = j.at("response_text").get<std::string>();
    } else {
        throw Error(ErrorCode::ParseError, "unknown outcome kind '" + kind + "'");
    }
    o.similarity_to_reference = j.at("similarity_to_reference");
    o.raw_delta = j.at("raw_delta");
    o.perturbed_text = j.at("perturbed_text");
    o.strategy_id = j.at("strategy_id");
    return o;
}

// Feature positions (into explanation.features) that get styled.
std::set<std::size_t> styled_features(const Explanation& ex, std::optional<int> top_k) {
    std::vector<std::size_t> order(ex.features.size());
    std::iota(order.begin(), order.end(), 0);
    if (top_k) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return ex.features[a].weight > ex.features[b].weight;
        });
        order.resize(std::min(order.size(), static_cast<std::size_t>(std::max(0, *top_k))));
    }
    return {order.begin(), order.end()};
}

template <typename Wrap>
std::string interleave(const Explanation& ex, Wrap&& wrap, bool escape) {
    const auto cps = utf8::decode(ex.source_text);
    const std::u32string_view view(cps);
    std::string out;
    std::size_t cursor = 0;
    auto plain = [&](std::size_t from, std::size_t to) {
        auto s = utf8::encode(view.substr(from, to - from));
        out += escape ? html_escape(s) : s;
    };
    for (std::size_t i = 0; i < ex.features.size(); ++i) {
        const auto& span = ex.features[i].feature.span;
        if (span.start < cursor || span.end > cps.size()) {
            throw Error(ErrorCode::PreconditionViolation, "explanation feature spans are invalid");
        }
        plain(cursor, span.start);
        auto text = utf8::encode(view.substr(span.start, span.length()));
        out += wrap(i, escape ? html_escape(text) : text);
        cursor = span.end;
    }
    plain(cursor, cps.size());
    return out;
}

std::string excerpt(const std::string& text, std::size_t max_cps = 160) {
    const auto cps = utf8::decode(text);
    if (cps.size() <= max_cps) return text;
    return utf8::encode(std::u32string_view(cps).substr(0, max_cps)) + "...";
}

}  // namespace

nlohmann::json to_json(const BackendDescriptor& d) {
    nlohmann::json j{{"backend_id", d.backend_id}, {"kind", to_string(d.kind)}, {"deterministic", d.deterministic}};
    if (d.endpoint) j["endpoint"] = *d.endpoint;
    if (d.model_name) j["model_name"] = *d.model_name;
    return j;
}

nlohmann::json to_json(const PerturbationOutcome& o) {
    nlohmann::json j{{"kind", to_string(o.kind)},
                     {"similarity_to_reference", o.similarity_to_reference},
                     {"raw_delta", o.raw_delta},
                     {"perturbed_text", o.perturbed_text},
                     {"strategy_id", o.strategy_id}};
    if (o.score) j["score"] = *o.score;
    if (o.response_text) j["response_text"] = *o.response_text;
    return j;
}

nlohmann::json to_json(const Explanation& ex) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& a : ex.features) {
        features.push_back({{"index", a.feature.index},
                            {"text", a.feature.text},
                            {"span", span_json(a.feature.span)},
                            {"weight", a.weight},
                            {"raw_delta", a.raw_delta},
                            {"outcome", to_json(a.outcome)}});
    }
    nlohmann::json reference = nlohmann::json::object();
    if (ex.reference_score) reference["score"] = *ex.reference_score;
    if (ex.reference_response) reference["response"] = *ex.reference_response;
    nlohmann::json protected_spans = nlohmann::json::array();
    for (const auto& s : ex.protected_spans) protected_spans.push_back(span_json(s));
    return {{"schema_version", kSchemaVersion},
            {"target", to_string(ex.target)},
            {"source_text", ex.source_text},
            {"reference", reference},
            {"granularity", to_string(ex.granularity)},
            {"backend", to_json(ex.backend)},
            {"config_fingerprint", ex.config_fingerprint},
            {"protected_spans", protected_spans},
            {"warnings", ex.warnings},
            {"features", features}};
}

Explanation explanation_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version") != kSchemaVersion) {
            throw Error(ErrorCode::ParseError, "unsupported explanation schema_version");
        }
        Explanation ex;
        ex.target = parse_target(j.at("target"));
        ex.source_text = j.at("source_text");
        const auto& ref = j.at("reference");
        if (ref.contains("score")) ex.reference_score = ref["score"].get<double>();
        if (ref.contains("response")) ex.reference_response = ref["response"].get<std::string>();
        ex.granularity = parse_granularity(j.at("granularity"));
        ex.backend = descriptor_from_json(j.at("backend"));
        ex.config_fingerprint = j.at("config_fingerprint");
        for (const auto& s : j.at("protected_spans")) ex.protected_spans.push_back(span_from_json(s));
        ex.warnings = j.at("warnings").get<std::vector<std::string>>();
        for (const auto& f : j.at("features")) {
            FeatureAttribution a;
            a.feature.index = f.at("index");
            a.feature.text = f.at("text");
            a.feature.span = span_from_json(f.at("span"));
            a.feature.granularity = ex.granularity;
            a.weight = f.at("weight");
            a.raw_delta = f.at("raw_delta");
            a.outcome = outcome_from_json(f.at("outcome"), a.feature.index);
            ex.features.push_back(std::move(a));
        }
        return ex;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed explanation JSON: ") + e.what());
    }
}

std::string to_canonical_json(const Explanation& explanation) { return canonical_dump(to_json(explanation)); }

Explanation parse_explanation(const std::string& canonical_json) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(canonical_json);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed explanation JSON: ") + e.what());
    }
    return explanation_from_json(j);
}

std::string explanation_id(const Explanation& explanation) {
    return sha256_hex(to_canonical_json(explanation));
}

int ansi_bucket(double weight) {
    if (weight >= 0.8) return 4;
    if (weight >= 0.6) return 3;
    if (weight >= 0.4) return 2;
    if (weight >= 0.2) return 1;
    return 0;
}

std::string render_ansi(const Explanation& explanation, std::optional<int> top_k) {
    const auto styled = styled_features(explanation, top_k);
    return interleave(
        explanation,
        [&](std::size_t i, const std::string& text) {
            const int bucket = ansi_bucket(explanation.features[i].weight);
            if (bucket == 0 || !styled.count(i)) return text;
            return std::string(kAnsiBuckets[bucket]) + text + kAnsiReset;
        },
        false);
}

std::string strip_ansi(const std::string& text) {
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\x1b' && i + 1 < text.size() && text[i + 1] == '[') {
            i += 2;
            while (i < text.size() && !(text[i] >= 0x40 && text[i] <= 0x7E)) ++i;
            continue;
        }
        out.push_back(text[i]);
    }
    return out;
}

std::string html_background(double weight) {
    const double w = std::clamp(weight, 0.0, 1.0);
    const int other = static_cast<int>(std::lround(255.0 * (1.0 - w)));
    char buf[32];
    std::snprintf(buf, sizeof buf, "rgb(255,%d,%d)", other, other);
    return buf;
}

std::string html_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string render_html(const Explanation& ex) {
    auto body = interleave(
        ex,
        [&](std::size_t i, const std::string& escaped_text) {
            const auto& a = ex.features[i];
            std::string output = a.outcome.score ? "score " + format_float(*a.outcome.score)
                                                 : "response: " + excerpt(a.outcome.response_text.value_or(""));
            const auto tooltip = "weight " + format_float(a.weight) + " | raw delta " + format_float(a.raw_delta) +
                                 " | " + output;
            return "<mark class=\"ragx-feature\" data-index=\"" + std::to_string(a.feature.index) +
                   "\" data-weight=\"" + format_float(a.weight) + "\" style=\"background-color:" +
                   html_background(a.weight) + "\" title=\"" + html_escape(tooltip) + "\">" + escaped_text +
                   "</mark>";
        },
        true);
    std::ostringstream html;
    html << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
         << "<title>ragx " << to_string(ex.target) << " explanation</title>\n"
         << "<style>body{font-family:sans-serif;margin:2em}"
         << ".ragx-source{white-space:pre-wrap;line-height:1.6}"
         << "mark.ragx-feature{color:inherit;border-radius:2px}</style>\n</head>\n<body>"
         << "<div class=\"ragx-source\">" << body << "</div></body>\n</html>\n";
    return html.str();
}

std::string render_text_summary(const Explanation& ex, bool color, std::optional<int> top_k) {
    std::ostringstream out;
    out << (color ? render_ansi(ex, top_k) : ex.source_text) << "\n\n";
    if (ex.reference_score) out << "reference score: " << format_float(*ex.reference_score) << "\n";
    if (ex.reference_response) out << "reference response: " << *ex.reference_response << "\n";
    for (const auto& w : ex.warnings) out << "warning: " << w << "\n";
    std::vector<std::size_t> order(ex.features.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ex.features[a].weight > ex.features[b].weight; });
    if (top_k) order.resize(std::min(order.size(), static_cast<std::size_t>(std::max(0, *top_k))));
    out << "rank  weight     raw_delta  feature\n";
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& a = ex.features[order[r]];
        char line[64];
        std::snprintf(line, sizeof line, "%-5zu %-10.6f %-10.6f ", r + 1, a.weight, a.raw_delta);
        out << line << a.feature.text << "\n";
    }
    return out.str();
}

}  // namespace ragx
