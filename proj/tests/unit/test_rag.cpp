#include "ragx/rag.hpp"
#include "ragx/utf8.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace ragx;
using fixtures::TempDir;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected ragx::Error");
    return ErrorCode::ParseError;
}

Corpus sky_grass() {
    return Corpus{{Document{"d1", "the sky is blue", {}}, Document{"d2", "grass is green", {}}}};
}

}  // namespace

TEST_CASE("ingest a directory of text and jsonl files") {
    TempDir dir;
    dir.write("b.txt", "second doc");
    dir.write("a.txt", "first doc\n");
    dir.write("sub/c.txt", "nested");
    dir.write("more.jsonl", "{\"id\":\"d1\",\"text\":\"hello\"}\n\n{\"id\":\"d0\",\"text\":\"hi\",\"metadata\":{\"title\":\"T\"}}\n");
    dir.write("ignored.md", "# not a corpus file");
    const auto corpus = ingest(dir.path());
    std::vector<std::string> ids;
    for (const auto& d : corpus.documents) ids.push_back(d.id);
    CHECK(ids == std::vector<std::string>{"a.txt", "b.txt", "d0", "d1", "sub/c.txt"});
    CHECK(corpus.find("d1")->text == "hello");
    CHECK(corpus.find("d0")->metadata.at("title") == "T");
    CHECK(corpus.find("a.txt")->metadata.count("source") == 1);
    CHECK(corpus.find("nope") == nullptr);
}

TEST_CASE("ingest a single jsonl file") {
    TempDir dir;
    const auto p = dir.write("c.jsonl", "{\"id\":\"d1\",\"text\":\"hello\"}\n");
    const auto corpus = ingest(p);
    REQUIRE(corpus.size() == 1);
    CHECK(corpus.documents[0].id == "d1");
    CHECK(corpus.documents[0].text == "hello");
}

TEST_CASE("ingest errors") {
    TempDir dir;
    CHECK(code_of([&] { ingest(dir.path() / "missing"); }) == ErrorCode::IngestError);
    const auto dup = dir.write("dup/x.jsonl", "{\"id\":\"a.txt\",\"text\":\"one\"}\n");
    dir.write("dup/a.txt", "two");
    CHECK(code_of([&] { ingest(dup.parent_path()); }) == ErrorCode::DuplicateId);
    const auto bad = dir.write("bad.jsonl", "{\"id\":\"x\"}\n");
    CHECK(code_of([&] { ingest(bad); }) == ErrorCode::IngestError);
    const auto broken = dir.write("broken.jsonl", "{not json\n");
    CHECK(code_of([&] { ingest(broken); }) == ErrorCode::IngestError);
    const auto empty = dir.write("empty/e.txt", "   \n");
    CHECK(code_of([&] { ingest(empty.parent_path()); }) == ErrorCode::IngestError);
}

TEST_CASE("build_index and search") {
    const auto corpus = sky_grass();
    const auto e = LocalLexicalEmbedder(corpus);
    const auto index = build_index(corpus, e);
    CHECK(index.size() == 2);
    CHECK(index.dimension() == e.dimension());
    CHECK(index.embedder.backend_id == "local_lexical");
    CHECK(build_index(corpus, e).vectors == index.vectors);

    const auto top = search(index, e, fixtures::kSkyQuestion, 1);
    REQUIRE(top.size() == 1);
    CHECK(top[0].document.id == "d1");
    CHECK(std::abs(top[0].score - 3 / (std::sqrt(5.0) * 2)) < 1e-12);

    // Exhaustive oracle over both documents.
    const auto all = search(index, e, fixtures::kSkyQuestion, 10);
    REQUIRE(all.size() == 2);
    for (const auto& r : all) {
        CHECK(std::abs(r.score - oracle::bow_cosine(fixtures::kSkyQuestion, r.document.text)) < 1e-12);
        CHECK(std::abs(r.score - cosine(e.embed_one(fixtures::kSkyQuestion), e.embed_one(r.document.text))) < 1e-9);
    }
    CHECK(all[0].score >= all[1].score);

    CHECK(code_of([&] { search(index, e, "q", 0); }) == ErrorCode::PreconditionViolation);
    CHECK(code_of([&] { search(index, e, "  ", 1); }) == ErrorCode::EmptyInput);
    CHECK(code_of([&] { build_index(Corpus{}, e); }) == ErrorCode::EmptyCorpus);
}

TEST_CASE("search ties break by id") {
    const Corpus corpus{{Document{"b", "same text", {}}, Document{"a", "same text", {}}, Document{"c", "other", {}}}};
    const auto e = LocalLexicalEmbedder(corpus);
    const auto index = build_index(corpus, e);
    const auto top = search(index, e, "same", 2);
    CHECK(top[0].document.id == "a");
    CHECK(top[1].document.id == "b");
    CHECK(top[0].score == top[1].score);
}

TEST_CASE("index save and load") {
    TempDir dir;
    const Corpus corpus{{Document{"d1", "the sky is blue", {{"title", "Sky"}}}, Document{"d2", "grass is green", {}}}};
    const auto e = LocalLexicalEmbedder(corpus);
    const auto index = build_index(corpus, e);
    const auto path = dir.path() / "i.ragx";
    save_index(index, path);
    const auto loaded = load_index(path);
    CHECK(loaded.documents == index.documents);
    CHECK(loaded.embedder == index.embedder);
    CHECK(loaded.dimension() == index.dimension());
    CHECK((loaded.vectors - index.vectors).cwiseAbs().maxCoeff() < 1e-7);
    save_index(loaded, dir.path() / "again.ragx");
    CHECK(load_index(dir.path() / "again.ragx").vectors == loaded.vectors);

    CHECK(code_of([&] { load_index(dir.path() / "none.ragx"); }) == ErrorCode::NotFound);
    dir.write("junk.ragx", "garbage\n");
    CHECK(code_of([&] { load_index(dir.path() / "junk.ragx"); }) == ErrorCode::ParseError);
    dir.write("short.ragx",
              "{\"count\":1,\"dimension\":4,\"documents\":[{\"id\":\"x\",\"metadata\":{},\"text\":\"x\"}],"
              "\"embedder\":{\"backend_id\":\"local_lexical\",\"deterministic\":true,\"kind\":\"embedder\"},"
              "\"format\":\"ragx-index\",\"version\":1}\n\x01\x02");
    CHECK(code_of([&] { load_index(dir.path() / "short.ragx"); }) == ErrorCode::ParseError);
}

TEST_CASE("compose_prompt with the default template") {
    const auto p = compose_prompt(kDefaultTemplate, "Q?", {Document{"d", "D.", {}}});
    CHECK(p.rendered == "Answer using the context.\nContext: D.\nQuestion: Q?");
    CHECK(p.instruction == "Answer using the context.\nContext:");  // template text before the first slot
    CHECK(p.question_text == "Q?");
    CHECK(p.context_blocks == std::vector<ContextBlock>{{"d", "D."}});
    CHECK_FALSE(p.empty_context);
    REQUIRE(p.protected_spans.size() == 2);
    CHECK(p.protected_spans[0] == Span{0, 35});
    CHECK(utf8::slice(p.rendered, 0, 35) == "Answer using the context.\nContext: ");
    CHECK(utf8::slice(p.rendered, p.protected_spans[1].start, p.protected_spans[1].end) == "\nQuestion: ");

    const auto open = compose_prompt(kDefaultTemplate, "Q?", {Document{"d", "D.", {}}}, false);
    CHECK(open.rendered == p.rendered);
    CHECK(open.protected_spans.empty());
}

TEST_CASE("compose_prompt joins documents and flags empty context") {
    const auto p = compose_prompt("{context}|{question}", "q", {Document{"a", "one", {}}, Document{"b", "two", {}}});
    CHECK(p.rendered == "one\ntwo|q");
    CHECK(p.instruction.empty());
    CHECK(p.protected_spans == std::vector<Span>{{7, 8}});
    const auto empty = compose_prompt(kDefaultTemplate, "Q?", {});
    CHECK(empty.empty_context);
    CHECK(empty.rendered == "Answer using the context.\nContext: \nQuestion: Q?");
}

TEST_CASE("compose_prompt template errors") {
    CHECK(code_of([] { compose_prompt("no placeholders", "q", {}); }) == ErrorCode::TemplateError);
    CHECK(code_of([] { compose_prompt("{context} {context} {question}", "q", {}); }) == ErrorCode::TemplateError);
    CHECK(code_of([] { compose_prompt("{context} {question} {extra}", "q", {}); }) == ErrorCode::TemplateError);
    CHECK(code_of([] { compose_prompt("{context} {question", "q", {}); }) == ErrorCode::TemplateError);
}

TEST_CASE("rag pipeline answers the capital question") {
    const Corpus corpus{{Document{"france", fixtures::kCapitalContext, {}},
                         Document{"other", "Bananas are yellow fruit.", {}}}};
    auto e = std::make_shared<LocalLexicalEmbedder>(corpus);
    auto index = std::make_shared<VectorIndex>(build_index(corpus, *e));
    RagPipeline pipeline(index, e, std::make_shared<ExtractiveMockGenerator>());
    const auto r = pipeline.answer(fixtures::kCapitalQuestion, 1);
    REQUIRE(r.retrieved.size() == 1);
    CHECK(r.retrieved[0].document.id == "france");
    CHECK(r.response.text == fixtures::kParis);
    CHECK(r.prompt.rendered.find(fixtures::kCapitalContext) != std::string::npos);
    CHECK(r.prompt.rendered == fixtures::capital_prompt().rendered);

    const auto again = pipeline.answer(fixtures::kCapitalQuestion, 1);
    CHECK(again.prompt == r.prompt);
    CHECK(again.response == r.response);
    CHECK(again.retrieved[0].score == r.retrieved[0].score);

    const auto both = pipeline.answer(fixtures::kCapitalQuestion, 5);
    CHECK(both.retrieved.size() == 2);
    for (const auto& s : both.retrieved) CHECK(both.prompt.rendered.find(s.document.text) != std::string::npos);
    CHECK(code_of([&] { pipeline.answer("q", 0); }) == ErrorCode::PreconditionViolation);
}
