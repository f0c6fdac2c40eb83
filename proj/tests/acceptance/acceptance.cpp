// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "ragx/app.hpp"
#include "ragx/canonical_json.hpp"
#include "ragx/cli.hpp"
#include "ragx/eval.hpp"
#include "ragx/explain.hpp"
#include "ragx/http_backends.hpp"
#include "ragx/render.hpp"
#include "ragx/service.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracle.hpp"
#include "../support/properties.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace ragx;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

int failures = 0;

void report(const std::string& name, const std::function<Verdict()>& check) {
    Verdict v;
    try {
        v = check();
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail = std::string("exception: ") + e.what();
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << (v.detail.empty() ? "" : "  (" + v.detail + ")") << "\n";
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

struct CliRun {
    int code = 0;
    std::string out;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err, false);
    return {code, out.str()};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<missing " + path + ">";
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const FeatureAttribution* feature(const Explanation& ex, const std::string& text) {
    for (const auto& f : ex.features) {
        if (f.feature.text == text) return &f;
    }
    return nullptr;
}

Verdict oracle_equivalence() {
    Verdict v;
    const auto& cases = oracle::retrieval_fixtures();
    v.require(cases.size() >= 5, "fewer than 5 fixtures");
    double worst = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& fx : cases) {
        const auto e = LocalLexicalEmbedder::from_texts({fx.document});
        const auto ex = explain_retrieval(fx.question, fx.document, e);
        const auto rc = oracle::retrieval(fx.question, fx.document);
        v.require(ex.features.size() == rc.scores.size(), std::string("feature count on ") + fx.document);
        if (ex.features.size() != rc.scores.size()) continue;
        worst = std::max(worst, std::abs(*ex.reference_score - rc.reference));
        std::vector<double> weights;
        for (std::size_t i = 0; i < rc.scores.size(); ++i) {
            worst = std::max(worst, std::abs(*ex.features[i].outcome.score - rc.scores[i]));
            weights.push_back(ex.features[i].weight);
        }
        v.require(oracle::same_ranking(weights, rc.weights, 1e-9), std::string("ranking differs on ") + fx.document);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(worst <= 1e-9, "max |s_i - oracle| = " + fmt(worst));
    v.require(seconds < 1.0, "took " + fmt(seconds) + " s");
    if (v.pass) v.detail = std::to_string(cases.size()) + " fixtures, max error " + fmt(worst) + ", " + fmt(seconds) + " s";
    return v;
}

Verdict sky_fixture() {
    Verdict v;
    const auto e = LocalLexicalEmbedder::from_texts({fixtures::kSkyDocument});
    const auto ex = explain_retrieval(fixtures::kSkyQuestion, fixtures::kSkyDocument, e);
    v.require(std::abs(*ex.reference_score - 0.67082) <= 1e-5, "s_d = " + fmt(*ex.reference_score));
    double max_w = 0;
    for (const auto& f : ex.features) max_w = std::max(max_w, f.weight);
    const auto* sky = feature(ex, "sky");
    v.require(sky != nullptr, "no 'sky' feature");
    v.require(sky && sky->weight == 1.0 && max_w == 1.0, "'sky' is not an argmax with weight 1.0");
    return v;
}

Verdict capital_fixture() {
    Verdict v;
    ExtractiveMockGenerator gen;
    const auto ex = explain_generation(fixtures::capital_prompt(), gen);
    const auto* paris = feature(ex, fixtures::kParis);
    const auto* berlin = feature(ex, fixtures::kBerlin);
    v.require(paris && berlin, "sentences not found as features");
    if (!paris || !berlin) return v;
    v.require(paris->weight == 1.0, "Paris weight " + fmt(paris->weight));
    v.require(berlin->weight == 0.0, "Berlin weight " + fmt(berlin->weight));
    v.require(std::abs(paris->raw_delta - (1.0 - 2.0 / 3.0)) <= 1e-6, "Paris raw_delta " + fmt(paris->raw_delta));
    return v;
}

Verdict perturbation_algebra() {
    Verdict v;
    const auto stats = properties::check_perturbation_algebra(2000, 20261018);
    v.require(stats.failure.empty(), stats.failure);
    v.require(stats.texts >= 1000, "only " + std::to_string(stats.texts) + " texts");
    if (v.pass) {
        v.detail = std::to_string(stats.texts) + " texts, " + std::to_string(stats.perturbations) + " perturbations";
    }
    return v;
}

Verdict normalization() {
    Verdict v;
    const auto failure = properties::check_normalization(5000, 7);
    v.require(failure.empty(), failure);
    if (v.pass) v.detail = "5000 vectors";
    return v;
}

Verdict metrics() {
    Verdict v;
    v.require(completeness({1, 3, 5}, {1, 2, 3}) == 2.0 / 3.0, "completeness {1,3,5} vs {1,2,3}");
    v.require(completeness({1, 2}, {2, 1, 7}) == 1.0, "completeness subset");
    v.require(completeness({1, 2}, {3, 4}) == 0.0, "completeness disjoint");
    auto p = prf1({1, 2}, {2, 3});
    v.require(p.precision == 0.5 && p.recall == 0.5 && p.f1 == 0.5, "prf1 {1,2} vs {2,3}");
    p = prf1({4, 5}, {4, 5});
    v.require(p.precision == 1 && p.recall == 1 && p.f1 == 1, "prf1 identity");
    p = prf1({1}, {});
    v.require(p.precision == 0 && p.recall == 0 && p.f1 == 0, "prf1 empty prediction");
    auto a = answer_correctness("Paris", "paris.");
    v.require(a.exact_match == 1 && a.token_f1 == 1.0, "answer normalization");
    a = answer_correctness("the capital is Paris", "Paris");
    v.require(a.exact_match == 0 && std::abs(a.token_f1 - 0.4) < 1e-12, "answer partial F1");
    a = answer_correctness("", "Paris");
    v.require(a.exact_match == 0 && a.token_f1 == 0.0, "answer empty");
    v.require(std::abs(correlate({1, 2, 3}, {10, 20, 30}) - 1.0) <= 1e-9, "spearman monotone");
    v.require(std::abs(correlate({1, 2, 3}, {3, 2, 1}) + 1.0) <= 1e-9, "spearman reversed");
    v.require(std::abs(correlate({1, 2, 3}, {2, 1, 3}) - 0.5) <= 1e-9, "spearman 0.5");
    v.require(std::abs(correlate({5, 5, 7, 9}, {1, 2, 3, 4}) - 0.9486832980505138) <= 1e-9, "spearman ties");
    const auto mono = properties::check_spearman_monotone(2000, 3);
    v.require(mono.empty(), mono);

    // Three-record fixture; aggregates recomputed by hand.
    EvalBackends backends;
    backends.embedder_for = [](const AnnotationRecord& r) {
        return std::make_shared<const LocalLexicalEmbedder>(LocalLexicalEmbedder::from_texts({r.source_text}));
    };
    backends.generator = std::make_shared<ExtractiveMockGenerator>();
    const auto rep = run_eval(std::filesystem::path(fixtures::fixtures_dir()) / "annotations.jsonl", ExplainerConfig{},
                              backends);
    v.require(rep.cases.size() == 3 && rep.failures.empty(), "fixture cases");
    v.require(std::abs(rep.overall.f1 - 2.0 / 3.0) < 1e-12, "F1 mean " + fmt(rep.overall.f1));
    v.require(std::abs(rep.overall.completeness - 2.0 / 3.0) < 1e-12, "completeness mean");
    return v;
}

// Full pipeline on the fixture corpus, canonical JSON of query, retrieval and
// generation explanations. The fingerprint covers parallelism by definition,
// so it can be blanked to compare runs that differ only in that setting.
std::string pipeline_bytes(const std::string& index, int parallelism, bool blank_fingerprint = false) {
    AppConfig cfg;
    cfg.rag.index_path = index;
    cfg.explain.parallelism = parallelism;
    App app(cfg);
    std::string out = canonical_dump(to_json(app.query(fixtures::kCapitalQuestion, 2)));
    RetrievalRequest rr;
    rr.question = fixtures::kSkyQuestion;
    rr.document_id = "sky";
    auto retrieval = app.explain_retrieval(rr);
    GenerationRequest gr;
    gr.question = fixtures::kCapitalQuestion;
    auto generation = app.explain_generation(gr);
    if (blank_fingerprint) {
        retrieval.config_fingerprint.clear();
        generation.config_fingerprint.clear();
    }
    out += to_canonical_json(retrieval);
    out += to_canonical_json(generation);
    return out;
}

Verdict determinism(const std::string& index, const std::string& absent) {
    Verdict v;
    const auto a = pipeline_bytes(index, 1);
    const auto b = pipeline_bytes(index, 1);
    v.require(a == b, "two runs differ");
    v.require(pipeline_bytes(index, 8) == pipeline_bytes(index, 8), "two parallel runs differ");
    v.require(pipeline_bytes(index, 1, true) == pipeline_bytes(index, 8, true), "parallelism changes results");

    const std::string golden = RAGX_GOLDEN_DIR;
    const auto sky = cli({"--index", absent, "explain", "retrieval", fixtures::kSkyQuestion, "--text",
                          fixtures::kSkyDocument, "--format", "json"});
    v.require(sky.code == 0 && sky.out == read_file(golden + "/sky_retrieval.json"), "sky golden differs");
    const auto cap = cli({"--index", index, "explain", "generation", fixtures::kCapitalQuestion, "--format", "json"});
    v.require(cap.code == 0 && cap.out == read_file(golden + "/capital_generation.json"), "capital golden differs");
    const auto parsed = parse_explanation(sky.out);
    v.require(to_canonical_json(parsed) == sky.out, "canonical form is not a fixpoint");
    return v;
}

Verdict cross_interface(const std::string& index) {
    Verdict v;
    AppConfig cfg;
    cfg.rag.index_path = index;
    Service service(std::make_shared<App>(cfg));
    const int port = service.start_background();
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(60, 0);

    struct Case {
        std::string route;
        std::string body;
        std::vector<std::string> args;
    };
    const std::vector<Case> cases{
        {"/api/explain/retrieval", R"({"question":"what color is the sky","document_id":"sky"})",
         {"--index", index, "explain", "retrieval", fixtures::kSkyQuestion, "--doc-id", "sky", "--format", "json"}},
        {"/api/explain/retrieval", R"({"question":"what color is the sky","text":"the sky is blue"})",
         {"--index", index, "explain", "retrieval", fixtures::kSkyQuestion, "--text", fixtures::kSkyDocument,
          "--format", "json"}},
        {"/api/explain/generation", R"({"question":"What is the capital of France?"})",
         {"--index", index, "explain", "generation", fixtures::kCapitalQuestion, "--format", "json"}},
        {"/api/explain/generation", R"({"question":"What is the capital of France?","k":2,"comparator":"levenshtein"})",
         {"--index", index, "explain", "generation", fixtures::kCapitalQuestion, "--k", "2", "--comparator",
          "levenshtein", "--format", "json"}},
        {"/api/query", R"({"question":"What is the capital of France?","k":2})",
         {"--index", index, "query", fixtures::kCapitalQuestion, "--k", "2", "--format", "json"}},
    };
    for (const auto& c : cases) {
        const auto res = client.Post(c.route, c.body, "application/json");
        const auto local = cli(c.args);
        v.require(res && res->status == 200, "service call failed on " + c.route);
        v.require(local.code == 0, "cli failed on " + c.route);
        v.require(res && res->body == local.out, "bytes differ on " + c.route + " " + c.body);
    }
    service.stop();
    if (v.pass) v.detail = std::to_string(cases.size()) + " request pairs";
    return v;
}

Verdict wire_conformance() {
    Verdict v;
    v.require(OpenAIEmbedder::request_body("text-embedding-3-small", {"the sky", "is blue"}) ==
                  R"({"model":"text-embedding-3-small","input":["the sky","is blue"]})",
              "embeddings body");
    v.require(OpenAIChatGenerator::request_body("gpt-4o-mini", "Q?", std::nullopt) ==
                  R"({"model":"gpt-4o-mini","messages":[{"role":"user","content":"Q?"}],"temperature":0})",
              "chat body");

    std::vector<std::chrono::milliseconds> sleeps;
    RetryPolicy retry;
    retry.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
    RemoteBackendConfig rc;
    rc.endpoint = "http://models.test/v1";
    rc.model = "m";

    auto t = std::make_shared<fixtures::RecordingTransport>();
    t->script(429);
    t->script(0);
    t->script(502);
    t->script(200, R"({"choices":[{"message":{"content":"ok"}}]})");
    OpenAIChatGenerator g(rc, t, retry);
    v.require(g.generate("p").text == "ok", "chat after retries");
    v.require(t->requests().size() == 4, "expected 4 requests, saw " + std::to_string(t->requests().size()));
    v.require(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(250),
                                                                std::chrono::milliseconds(1000),
                                                                std::chrono::milliseconds(4000)},
              "backoff schedule");
    for (const auto& r : t->requests()) {
        v.require(nlohmann::json::parse(r.body)["temperature"] == 0, "temperature not pinned to 0");
        v.require(r.url == "http://models.test/v1/chat/completions", "chat url");
    }

    for (int status : {400, 401, 403, 404, 408, 422}) {
        sleeps.clear();
        auto t4 = std::make_shared<fixtures::RecordingTransport>();
        t4->script(status, R"({"error":{"message":"no"}})");
        OpenAIEmbedder e(rc, t4, retry);
        try {
            e.embed({"x"});
            v.require(false, "status " + std::to_string(status) + " accepted");
        } catch (const Error&) {
        }
        v.require(t4->requests().size() == 1 && sleeps.empty(), "retried on " + std::to_string(status));
    }

    sleeps.clear();
    auto t5 = std::make_shared<fixtures::RecordingTransport>();
    for (int i = 0; i < 5; ++i) t5->script(503);
    OpenAIEmbedder e5(rc, t5, retry);
    try {
        e5.embed({"x"});
        v.require(false, "persistent 503 accepted");
    } catch (const Error& err) {
        v.require(err.code() == ErrorCode::BackendUnavailable, "persistent 503 code");
    }
    v.require(t5->requests().size() == 4, "persistent 503 request count");
    return v;
}

}  // namespace

int main() {
    fixtures::TempDir dir;
    const auto index = (dir.path() / "corpus.ragx").string();
    const auto absent = (dir.path() / "absent.ragx").string();
    const auto built = cli({"index", fixtures::fixtures_dir() + "/corpus", "--out", index});
    if (built.code != 0) {
        std::cout << "FAIL setup  (could not index the fixture corpus)\n";
        return 1;
    }

    report("retrieval oracle equivalence", oracle_equivalence);
    report("sky fixture", sky_fixture);
    report("capital generation fixture", capital_fixture);
    report("perturbation algebra", perturbation_algebra);
    report("weight normalization", normalization);
    report("metric correctness", metrics);
    report("determinism and canonical output", [&] { return determinism(index, absent); });
    report("service and cli byte equality", [&] { return cross_interface(index); });
    report("backend wire conformance", wire_conformance);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures == 0 ? 0 : 1;
}
