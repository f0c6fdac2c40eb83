#include "ragx/cli.hpp"

#include "ragx/app.hpp"
#include "ragx/canonical_json.hpp"
#include "ragx/eval.hpp"
#include "ragx/render.hpp"
#include "ragx/service.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace ragx {
namespace {

int exit_code_for(ErrorCode code) {
    switch (category_of(code)) {
        case ErrorCategory::Usage: return 1;
        case ErrorCategory::Backend: return 2;
        case ErrorCategory::Data: return 3;
    }
    return 3;
}

void print_error(std::ostream& err, const std::string& code, const std::string& message) {
    err << canonical_dump(nlohmann::json{{"code", code}, {"message", message}});
}

struct GlobalOptions {
    std::string config_path;
    std::string embedder;
    std::string generator;
    std::string index_path;
    int parallelism = 0;
};

struct OutputOptions {
    std::string format = "ansi";
    std::string color = "auto";
    int top_k = 0;
    std::string out_path;
};

AppConfig resolve_config(const GlobalOptions& g) {
    AppConfig config = g.config_path.empty() ? AppConfig{} : load_config(g.config_path);
    apply_environment(config);
    if (!g.embedder.empty()) config.embedder.id = g.embedder;
    if (!g.generator.empty()) config.generator.id = g.generator;
    if (!g.index_path.empty()) config.rag.index_path = g.index_path;
    if (g.parallelism > 0) config.explain.parallelism = g.parallelism;
    return config;
}

void add_output_options(CLI::App* cmd, OutputOptions& o) {
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"ansi", "html", "json"}));
    cmd->add_option("--top-k", o.top_k, "Only highlight/list the k highest-weighted features")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--color", o.color, "ANSI color policy")->check(CLI::IsMember({"auto", "always", "never"}));
    cmd->add_option("--out", o.out_path, "Write output to a file instead of stdout");
}

void emit(const std::string& text, const OutputOptions& o, std::ostream& out) {
    if (o.out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(o.out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorCode::IngestError, "cannot write " + o.out_path);
    file << text;
}

void print_explanation(const Explanation& ex, const AppConfig& config, const OutputOptions& o, std::ostream& out,
                       bool terminal) {
    std::optional<int> top_k = o.top_k > 0 ? std::optional<int>(o.top_k) : config.explain.top_k_render;
    if (o.format == "json") {
        emit(to_canonical_json(ex), o, out);
    } else if (o.format == "html") {
        emit(render_html(ex), o, out);
    } else {
        const bool color = o.color == "always" || (o.color == "auto" && terminal && o.out_path.empty());
        emit(render_text_summary(ex, color, top_k), o, out);
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool out_is_terminal) {
    CLI::App app{"ragx: explain retrieval-augmented generation pipelines", "ragx"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--embedder", g.embedder, "Embedder backend id (local_lexical, openai)");
    app.add_option("--generator", g.generator, "Generator backend id (extractive_mock, openai)");
    app.add_option("--index", g.index_path, "Index file (default index.ragx)");
    app.add_option("--parallelism", g.parallelism, "Concurrent backend calls per explanation")
        ->check(CLI::PositiveNumber);

    auto* index_cmd = app.add_subcommand("index", "Ingest a corpus and build a vector index");
    std::string corpus_path;
    std::string index_out = "index.ragx";
    index_cmd->add_option("path", corpus_path, "Directory of .txt/.jsonl files or a single file")->required();
    index_cmd->add_option("--out", index_out, "Index file to write");

    auto* query_cmd = app.add_subcommand("query", "Answer a question with the RAG pipeline");
    std::string question;
    std::size_t k = 0;
    std::string query_format = "text";
    query_cmd->add_option("question", question, "Question text")->required();
    query_cmd->add_option("--k", k, "Documents to retrieve")->check(CLI::PositiveNumber);
    query_cmd->add_option("--format", query_format, "Output format")->check(CLI::IsMember({"text", "json"}));

    auto* explain_cmd = app.add_subcommand("explain", "Explain retrieval or generation");
    explain_cmd->require_subcommand(1);

    auto* retrieval_cmd = explain_cmd->add_subcommand("retrieval", "Explain why a document matches a question");
    RetrievalRequest rr;
    std::string doc_id;
    std::string doc_text;
    std::string strategy = "loo";
    std::string granularity;
    OutputOptions retrieval_out;
    retrieval_cmd->add_option("question", rr.question, "Question text")->required();
    auto* doc_opt = retrieval_cmd->add_option("--doc-id", doc_id, "Document id from the index");
    auto* text_opt = retrieval_cmd->add_option("--text", doc_text, "Explain this document text instead");
    doc_opt->excludes(text_opt);
    retrieval_cmd->add_option("--strategy", strategy, "Perturbation strategy (loo, mask)");
    retrieval_cmd->add_option("--granularity", granularity, "word or sentence")
        ->check(CLI::IsMember({"word", "sentence"}));
    add_output_options(retrieval_cmd, retrieval_out);

    auto* generation_cmd = explain_cmd->add_subcommand("generation", "Explain which prompt parts drove the answer");
    GenerationRequest gr;
    std::size_t gen_k = 0;
    std::string comparator;
    bool include_instruction = false;
    OutputOptions generation_out;
    generation_cmd->add_option("question", gr.question, "Question text")->required();
    generation_cmd->add_option("--k", gen_k, "Documents to retrieve")->check(CLI::PositiveNumber);
    generation_cmd->add_option("--comparator", comparator, "token_f1, exact, levenshtein, embedding");
    generation_cmd->add_flag("--include-instruction", include_instruction, "Also perturb the prompt template");
    add_output_options(generation_cmd, generation_out);

    auto* eval_cmd = app.add_subcommand("eval", "Score explanations against human annotations");
    std::string annotations;
    std::string report_path;
    eval_cmd->add_option("annotations", annotations, "Annotations JSONL file")->required();
    eval_cmd->add_option("--report", report_path, "Write the JSON report here");

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    int port = 0;
    std::string host;
    serve_cmd->add_option("--port", port, "Port (default 8080)");
    serve_cmd->add_option("--host", host, "Bind address (default 127.0.0.1)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        print_error(err, "UsageError", e.what());
        return 1;
    }

    try {
        const auto config = resolve_config(g);
        App ragx_app(config);

        if (*index_cmd) {
            const auto corpus = ingest(corpus_path);
            const auto index = ragx_app.build_index(corpus);
            save_index(index, index_out);
            out << "indexed " << index.size() << " documents (dimension " << index.dimension() << ") into "
                << index_out << "\n";
            return 0;
        }
        if (*query_cmd) {
            const auto result = ragx_app.query(question, k > 0 ? std::optional<std::size_t>(k) : std::nullopt);
            if (query_format == "json") {
                out << canonical_dump(to_json(result));
            } else {
                for (const auto& r : result.retrieved) {
                    out << format_float(r.score) << "  " << r.document.id << "\n";
                }
                out << "\n" << result.response.text << "\n";
            }
            return 0;
        }
        if (*retrieval_cmd) {
            if (*doc_opt) rr.document_id = doc_id;
            if (*text_opt) rr.text = doc_text;
            rr.strategy = strategy;
            if (!granularity.empty()) rr.granularity = parse_granularity(granularity);
            print_explanation(ragx_app.explain_retrieval(rr), config, retrieval_out, out, out_is_terminal);
            return 0;
        }
        if (*generation_cmd) {
            if (gen_k > 0) gr.k = gen_k;
            if (!comparator.empty()) gr.comparator = comparator;
            if (include_instruction) gr.include_instruction = true;
            print_explanation(ragx_app.explain_generation(gr), config, generation_out, out, out_is_terminal);
            return 0;
        }
        if (*eval_cmd) {
            EvalBackends backends;
            const bool have_index = ragx_app.index_available();
            backends.embedder_for = [&](const AnnotationRecord& r) {
                return have_index ? ragx_app.index_embedder()
                                  : ragx_app.embedder_for(Corpus{{Document{r.case_id, r.source_text, {}}}});
            };
            backends.generator = ragx_app.generator();
            const auto report = run_eval(std::filesystem::path(annotations), config.explain, backends);
            if (!report_path.empty()) {
                std::ofstream file(report_path, std::ios::binary | std::ios::trunc);
                if (!file) throw Error(ErrorCode::IngestError, "cannot write " + report_path);
                file << canonical_dump(to_json(report));
            }
            out << render_table(report);
            return 0;
        }
        if (*serve_cmd) {
            auto service_config = config;
            if (port > 0) service_config.service.port = port;
            if (!host.empty()) service_config.service.host = host;
            auto shared = std::make_shared<App>(service_config);
            if (shared->index_available()) shared->index();
            Service service(shared);
            err << "ragx serving on http://" << service_config.service.host << ":" << service_config.service.port
                << "\n";
            if (!service.listen(service_config.service.host, service_config.service.port)) {
                throw Error(ErrorCode::UsageError, "cannot bind " + service_config.service.host + ":" +
                                                       std::to_string(service_config.service.port));
            }
            return 0;
        }
    } catch (const Error& e) {
        print_error(err, std::string(to_string(e.code())), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        print_error(err, "InternalError", e.what());
        return 3;
    }
    return 1;
}

}  // namespace ragx
