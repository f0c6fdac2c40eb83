#include "ragx/eval.hpp"

#include "ragx/explain.hpp"
#include "ragx/rag.hpp"
#include "ragx/tokens.hpp"
#include "ragx/utf8.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ragx {
namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

void validate_spans(const AnnotationRecord& r) {
    const auto n = utf8::length(r.source_text);
    auto spans = r.annotated_spans;
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.start < b.start; });
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (spans[i].start >= spans[i].end || spans[i].end > n) {
            throw Error(ErrorCode::ParseError, "annotated span out of bounds in case " + r.case_id);
        }
        if (i > 0 && spans[i].start < spans[i - 1].end) {
            throw Error(ErrorCode::ParseError, "annotated spans overlap in case " + r.case_id);
        }
    }
}

MetricMeans means_of(const std::vector<const CaseMetrics*>& cases) {
    MetricMeans m;
    m.case_count = cases.size();
    if (cases.empty()) return m;
    for (const auto* c : cases) {
        m.completeness += c->completeness;
        m.precision += c->scores.precision;
        m.recall += c->scores.recall;
        m.f1 += c->scores.f1;
    }
    const auto n = static_cast<double>(cases.size());
    m.completeness /= n;
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    return m;
}

nlohmann::json means_json(const MetricMeans& m) {
    return {{"case_count", m.case_count},
            {"completeness_mean", m.completeness},
            {"precision_mean", m.precision},
            {"recall_mean", m.recall},
            {"f1_mean", m.f1}};
}

Explanation explain_record(const AnnotationRecord& r, const ExplainerConfig& config, const EvalBackends& backends) {
    Explainer explainer(config);
    if (r.target == Target::Retrieval) {
        if (!r.question) throw Error(ErrorCode::ParseError, "retrieval record " + r.case_id + " has no question");
        if (!backends.embedder_for) throw Error(ErrorCode::UnknownBackend, "no embedder configured");
        const auto embedder = backends.embedder_for(r);
        return explainer.retrieval(*r.question, r.source_text, *embedder);
    }
    if (!backends.generator) throw Error(ErrorCode::UnknownBackend, "no generator configured");
    Prompt prompt;
    if (r.question) {
        std::vector<Document> docs;
        for (std::size_t i = 0; i < r.contexts.size(); ++i) {
            docs.push_back(Document{"ctx" + std::to_string(i), r.contexts[i], {}});
        }
        prompt = compose_prompt(kDefaultTemplate, *r.question, docs, config.protect_instruction);
    } else {
        prompt = raw_prompt(r.source_text);
    }
    return explainer.generation(prompt, *backends.generator);
}

}  // namespace

AnnotationRecord parse_annotation(const nlohmann::json& j) {
    try {
        AnnotationRecord r;
        r.case_id = j.at("case_id");
        r.target = parse_target(j.at("target"));
        r.source_text = j.at("source_text");
        for (const auto& s : j.at("annotated_spans")) {
            if (!s.is_array() || s.size() != 2) throw Error(ErrorCode::ParseError, "span must be [start, end]");
            r.annotated_spans.push_back(Span{s[0].get<std::size_t>(), s[1].get<std::size_t>()});
        }
        if (j.contains("gold_answer") && !j["gold_answer"].is_null()) r.gold_answer = j["gold_answer"];
        if (j.contains("question") && !j["question"].is_null()) r.question = j["question"];
        if (j.contains("contexts")) r.contexts = j["contexts"].get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed annotation record: ") + e.what());
    }
}

double completeness(const std::set<std::size_t>& annotated, const std::vector<std::size_t>& predicted_topk) {
    if (annotated.empty()) throw Error(ErrorCode::UndefinedMetric, "completeness of an empty annotation set");
    const std::set<std::size_t> predicted(predicted_topk.begin(), predicted_topk.end());
    std::size_t hit = 0;
    for (auto i : annotated) hit += predicted.count(i);
    return static_cast<double>(hit) / static_cast<double>(annotated.size());
}

PrecisionRecallF1 prf1(const std::set<std::size_t>& annotated, const std::set<std::size_t>& predicted) {
    if (annotated.empty()) throw Error(ErrorCode::UndefinedMetric, "precision/recall of an empty annotation set");
    std::size_t hit = 0;
    for (auto i : predicted) hit += annotated.count(i);
    PrecisionRecallF1 out;
    out.precision = predicted.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(predicted.size());
    out.recall = static_cast<double>(hit) / static_cast<double>(annotated.size());
    const double sum = out.precision + out.recall;
    out.f1 = sum == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / sum;
    return out;
}

FeatureMatch match_features(const Explanation& explanation, const std::string& annotated_source,
                            const std::vector<Span>& annotated_spans, std::optional<std::size_t> k) {
    if (explanation.source_text != annotated_source) {
        throw Error(ErrorCode::AnnotationMismatch, "annotation text does not match the explained text");
    }
    FeatureMatch m;
    for (const auto& a : explanation.features) {
        for (const auto& s : annotated_spans) {
            if (a.feature.span.overlaps(s)) {
                m.annotated.insert(a.feature.index);
                break;
            }
        }
    }
    std::vector<std::size_t> order(explanation.features.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& fa = explanation.features[a];
        const auto& fb = explanation.features[b];
        if (fa.weight != fb.weight) return fa.weight > fb.weight;
        return fa.feature.index < fb.feature.index;
    });
    const auto take = std::min(order.size(), k.value_or(m.annotated.size()));
    for (std::size_t i = 0; i < take; ++i) m.predicted.push_back(explanation.features[order[i]].feature.index);
    return m;
}

AnswerScore answer_correctness(const std::string& predicted, const std::string& gold) {
    AnswerScore s;
    s.exact_match = normalize_text(predicted) == normalize_text(gold) ? 1 : 0;
    s.token_f1 = token_f1(gold, predicted);
    return s;
}

double correlate(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw Error(ErrorCode::UndefinedMetric, "correlation inputs differ in length");
    if (xs.size() < 3) throw Error(ErrorCode::UndefinedMetric, "correlation needs at least 3 pairs");
    for (double v : xs) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NumericError, "non-finite correlation input");
    }
    for (double v : ys) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NumericError, "non-finite correlation input");
    }
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(rx.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::UndefinedMetric, "correlation undefined for constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EvalReport run_eval(const std::vector<AnnotationRecord>& records, const ExplainerConfig& config,
                    const EvalBackends& backends) {
    EvalReport report;
    for (const auto& r : records) {
        try {
            validate_spans(r);
            const auto explanation = explain_record(r, config, backends);
            const auto match = match_features(explanation, r.source_text, r.annotated_spans);
            CaseMetrics c;
            c.case_id = r.case_id;
            c.target = r.target;
            c.completeness = completeness(match.annotated, match.predicted);
            c.scores = prf1(match.annotated, {match.predicted.begin(), match.predicted.end()});
            c.annotated.assign(match.annotated.begin(), match.annotated.end());
            c.predicted = match.predicted;
            if (r.gold_answer && r.target == Target::Generation) {
                c.answer = answer_correctness(explanation.reference_response.value_or(""), *r.gold_answer);
            }
            report.cases.push_back(std::move(c));
        } catch (const Error& e) {
            report.failures.push_back({r.case_id, std::string(to_string(e.code())), e.what()});
        }
    }
    std::stable_sort(report.cases.begin(), report.cases.end(),
                     [](const CaseMetrics& a, const CaseMetrics& b) { return a.case_id < b.case_id; });

    std::vector<const CaseMetrics*> all;
    std::map<std::string, std::vector<const CaseMetrics*>> per_target;
    std::vector<double> intuitiveness;
    std::vector<double> answer_f1;
    double em_sum = 0.0;
    for (const auto& c : report.cases) {
        all.push_back(&c);
        per_target[to_string(c.target)].push_back(&c);
        if (c.answer) {
            intuitiveness.push_back(c.scores.f1);
            answer_f1.push_back(c.answer->token_f1);
            em_sum += c.answer->exact_match;
        }
    }
    report.overall = means_of(all);
    for (const auto& [target, cases] : per_target) report.by_target[target] = means_of(cases);
    if (!answer_f1.empty()) {
        const auto n = static_cast<double>(answer_f1.size());
        report.answer_exact_match_mean = em_sum / n;
        report.answer_token_f1_mean = std::accumulate(answer_f1.begin(), answer_f1.end(), 0.0) / n;
        try {
            report.correlation = correlate(intuitiveness, answer_f1);
        } catch (const Error& e) {
            report.correlation_note = e.what();
        }
    }
    return report;
}

EvalReport run_eval(const std::filesystem::path& annotations_path, const ExplainerConfig& config,
                    const EvalBackends& backends) {
    std::ifstream in(annotations_path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot read annotations " + annotations_path.string());
    std::vector<AnnotationRecord> records;
    std::vector<CaseFailure> parse_failures;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (utf8::trim(line).empty()) continue;
        try {
            records.push_back(parse_annotation(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            parse_failures.push_back({"line " + std::to_string(line_no), "ParseError", e.what()});
        } catch (const Error& e) {
            parse_failures.push_back({"line " + std::to_string(line_no), std::string(to_string(e.code())), e.what()});
        }
    }
    auto report = run_eval(records, config, backends);
    report.failures.insert(report.failures.begin(), parse_failures.begin(), parse_failures.end());
    return report;
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& c : report.cases) {
        nlohmann::json j{{"case_id", c.case_id},
                         {"target", to_string(c.target)},
                         {"completeness", c.completeness},
                         {"precision", c.scores.precision},
                         {"recall", c.scores.recall},
                         {"f1", c.scores.f1},
                         {"annotated", c.annotated},
                         {"predicted", c.predicted}};
        if (c.answer) {
            j["answer_exact_match"] = c.answer->exact_match;
            j["answer_token_f1"] = c.answer->token_f1;
        }
        cases.push_back(std::move(j));
    }
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : report.failures) {
        failures.push_back({{"case_id", f.case_id}, {"code", f.code}, {"message", f.message}});
    }
    nlohmann::json aggregates = means_json(report.overall);
    if (report.answer_exact_match_mean) aggregates["answer_exact_match_mean"] = *report.answer_exact_match_mean;
    if (report.answer_token_f1_mean) aggregates["answer_token_f1_mean"] = *report.answer_token_f1_mean;
    if (report.correlation) aggregates["correlation"] = *report.correlation;
    if (report.correlation_note) aggregates["correlation_note"] = *report.correlation_note;
    nlohmann::json by_target = nlohmann::json::object();
    for (const auto& [t, m] : report.by_target) by_target[t] = means_json(m);
    return {{"cases", cases}, {"failures", failures}, {"aggregates", aggregates}, {"by_target", by_target}};
}

std::string render_table(const EvalReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-20s %-11s %-12s %-9s %-9s %-9s\n", "case", "target", "completeness",
                  "precision", "recall", "f1");
    out << line;
    for (const auto& c : report.cases) {
        std::snprintf(line, sizeof line, "%-20s %-11s %-12.4f %-9.4f %-9.4f %-9.4f\n", c.case_id.c_str(),
                      to_string(c.target).c_str(), c.completeness, c.scores.precision, c.scores.recall, c.scores.f1);
        out << line;
    }
    const auto& m = report.overall;
    std::snprintf(line, sizeof line, "%-20s %-11zu %-12.4f %-9.4f %-9.4f %-9.4f\n", "mean", m.case_count,
                  m.completeness, m.precision, m.recall, m.f1);
    out << line;
    if (report.correlation) out << "spearman(intuitiveness f1, answer f1): " << *report.correlation << "\n";
    if (report.correlation_note) out << "correlation unavailable: " << *report.correlation_note << "\n";
    for (const auto& f : report.failures) out << "failed " << f.case_id << ": " << f.code << " " << f.message << "\n";
    return out.str();
}

}  // namespace ragx
