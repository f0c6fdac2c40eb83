#pragma once

#include "ragx/backends.hpp"
#include "ragx/core.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ragx {

struct AnnotationRecord {
    std::string case_id;
    Target target = Target::Retrieval;
    std::string source_text;
    std::vector<Span> annotated_spans;  // [start, end) code points, disjoint
    std::optional<std::string> gold_answer;
    // Inputs needed to reproduce the explanation. Retrieval records need the
    // question; generation records with a question are composed from it and
    // `contexts` with the default template.
    std::optional<std::string> question;
    std::vector<std::string> contexts;
};

AnnotationRecord parse_annotation(const nlohmann::json& j);

// |annotated ∩ predicted_topk| / |annotated|.
double completeness(const std::set<std::size_t>& annotated, const std::vector<std::size_t>& predicted_topk);

struct PrecisionRecallF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

PrecisionRecallF1 prf1(const std::set<std::size_t>& annotated, const std::set<std::size_t>& predicted);

struct FeatureMatch {
    std::set<std::size_t> annotated;
    std::vector<std::size_t> predicted;  // weight descending, ties by index
};

// Features overlapping any annotated span, and the k highest-weighted
// features (k defaults to the number of annotated features).
FeatureMatch match_features(const Explanation& explanation, const std::string& annotated_source,
                            const std::vector<Span>& annotated_spans, std::optional<std::size_t> k = std::nullopt);

struct AnswerScore {
    int exact_match = 0;
    double token_f1 = 0.0;
};

AnswerScore answer_correctness(const std::string& predicted, const std::string& gold);

// Spearman rank correlation, average ranks for ties.
double correlate(const std::vector<double>& xs, const std::vector<double>& ys);

struct CaseMetrics {
    std::string case_id;
    Target target = Target::Retrieval;
    double completeness = 0.0;
    PrecisionRecallF1 scores;
    std::vector<std::size_t> annotated;
    std::vector<std::size_t> predicted;
    std::optional<AnswerScore> answer;
};

struct CaseFailure {
    std::string case_id;
    std::string code;
    std::string message;
};

struct MetricMeans {
    std::size_t case_count = 0;
    double completeness = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    std::vector<CaseMetrics> cases;  // ordered by case_id
    std::vector<CaseFailure> failures;
    MetricMeans overall;
    std::map<std::string, MetricMeans> by_target;
    std::optional<double> answer_exact_match_mean;
    std::optional<double> answer_token_f1_mean;
    std::optional<double> correlation;
    std::optional<std::string> correlation_note;
};

struct EvalBackends {
    // Embedder for a retrieval record (lets local embedders pick a vocabulary).
    std::function<std::shared_ptr<const Embedder>(const AnnotationRecord&)> embedder_for;
    std::shared_ptr<const Generator> generator;
};

EvalReport run_eval(const std::vector<AnnotationRecord>& records, const ExplainerConfig& config,
                    const EvalBackends& backends);

// Reads JSONL; unparseable lines become failures in the returned report.
EvalReport run_eval(const std::filesystem::path& annotations_path, const ExplainerConfig& config,
                    const EvalBackends& backends);

nlohmann::json to_json(const EvalReport& report);
std::string render_table(const EvalReport& report);

}  // namespace ragx
