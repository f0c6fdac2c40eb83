#include "ragx/rag.hpp"

#include "ragx/utf8.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace ragx {
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IngestError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::IngestError, "cannot read " + path.string());
    return ss.str();
}

void add_text_file(std::vector<Document>& docs, const fs::path& file, const std::string& id) {
    Document d;
    d.id = id;
    d.text = read_file(file);
    if (utf8::trim(d.text).empty()) throw Error(ErrorCode::IngestError, "empty document " + file.string());
    d.metadata["source"] = file.generic_string();
    docs.push_back(std::move(d));
}

void add_jsonl_file(std::vector<Document>& docs, const fs::path& file) {
    std::istringstream lines(read_file(file));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (utf8::trim(line).empty()) continue;
        const auto where = file.string() + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::IngestError, where + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
            !j["text"].is_string()) {
            throw Error(ErrorCode::IngestError, where + ": expected {\"id\",\"text\"} strings");
        }
        Document d;
        d.id = j["id"];
        d.text = j["text"];
        if (utf8::trim(d.text).empty()) throw Error(ErrorCode::IngestError, where + ": empty text");
        if (j.contains("metadata")) {
            if (!j["metadata"].is_object()) throw Error(ErrorCode::IngestError, where + ": metadata must be an object");
            for (const auto& [k, v] : j["metadata"].items()) {
                d.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
            }
        }
        d.metadata.emplace("source", file.generic_string());
        docs.push_back(std::move(d));
    }
}

void finalize(std::vector<Document>& docs) {
    std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < docs.size(); ++i) {
        if (docs[i].id == docs[i - 1].id) throw Error(ErrorCode::DuplicateId, "duplicate document id '" + docs[i].id + "'");
    }
}

constexpr const char* kIndexFormat = "ragx-index";

nlohmann::json descriptor_json(const BackendDescriptor& d) {
    nlohmann::json j{{"backend_id", d.backend_id}, {"kind", to_string(d.kind)}, {"deterministic", d.deterministic}};
    if (d.endpoint) j["endpoint"] = *d.endpoint;
    if (d.model_name) j["model_name"] = *d.model_name;
    return j;
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

std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        return ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
    }
    return v;
}

}  // namespace

Corpus ingest(const fs::path& path) {
    std::error_code ec;
    if (!fs::exists(path, ec)) throw Error(ErrorCode::IngestError, "path does not exist: " + path.string());
    std::vector<Document> docs;
    if (fs::is_regular_file(path)) {
        if (path.extension() == ".jsonl") {
            add_jsonl_file(docs, path);
        } else {
            add_text_file(docs, path, path.filename().generic_string());
        }
    } else {
        std::vector<fs::path> files;
        for (auto it = fs::recursive_directory_iterator(path, ec); !ec && it != fs::recursive_directory_iterator();
             it.increment(ec)) {
            if (it->is_regular_file() && (it->path().extension() == ".txt" || it->path().extension() == ".jsonl")) {
                files.push_back(it->path());
            }
        }
        if (ec) throw Error(ErrorCode::IngestError, "cannot walk " + path.string() + ": " + ec.message());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            if (f.extension() == ".txt") {
                add_text_file(docs, f, fs::relative(f, path).generic_string());
            } else {
                add_jsonl_file(docs, f);
            }
        }
    }
    finalize(docs);
    return Corpus{std::move(docs)};
}

VectorIndex build_index(const Corpus& corpus, const Embedder& embedder, std::size_t batch_size) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot index an empty corpus");
    std::set<std::string> ids;
    for (const auto& d : corpus.documents) {
        if (!ids.insert(d.id).second) throw Error(ErrorCode::DuplicateId, "duplicate document id '" + d.id + "'");
    }
    batch_size = std::max<std::size_t>(1, batch_size);
    VectorIndex index;
    index.documents = corpus.documents;
    index.embedder = embedder.descriptor();
    for (std::size_t begin = 0; begin < corpus.size(); begin += batch_size) {
        const auto end = std::min(corpus.size(), begin + batch_size);
        std::vector<std::string> texts;
        for (std::size_t i = begin; i < end; ++i) texts.push_back(corpus.documents[i].text);
        const auto vectors = embedder.embed(texts);
        if (vectors.size() != texts.size()) {
            throw Error(ErrorCode::BackendProtocolError, "embedder returned wrong number of vectors");
        }
        for (std::size_t i = begin; i < end; ++i) {
            const auto& v = vectors[i - begin];
            if (index.vectors.size() == 0) index.vectors.resize(static_cast<Eigen::Index>(corpus.size()), v.size());
            if (v.size() != index.vectors.cols()) {
                throw Error(ErrorCode::BackendProtocolError, "embedder returned vectors of differing dimension");
            }
            index.vectors.row(static_cast<Eigen::Index>(i)) = v.transpose();
        }
    }
    return index;
}

void save_index(const VectorIndex& index, const fs::path& path) {
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& d : index.documents) {
        docs.push_back({{"id", d.id}, {"text", d.text}, {"metadata", d.metadata}});
    }
    const nlohmann::json header{{"format", kIndexFormat},
                                {"version", 1},
                                {"count", index.size()},
                                {"dimension", index.dimension()},
                                {"embedder", descriptor_json(index.embedder)},
                                {"documents", docs}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IngestError, "cannot write " + path.string());
    out << header.dump() << '\n';
    for (Eigen::Index r = 0; r < index.vectors.rows(); ++r) {
        for (Eigen::Index c = 0; c < index.vectors.cols(); ++c) {
            const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(index.vectors(r, c))));
            out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
    if (!out) throw Error(ErrorCode::IngestError, "failed writing " + path.string());
}

VectorIndex load_index(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "no index at " + path.string());
    std::string header_line;
    std::getline(in, header_line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, "corrupt index header in " + path.string() + ": " + e.what());
    }
    if (!header.is_object() || header.value("format", "") != kIndexFormat || header.value("version", 0) != 1) {
        throw Error(ErrorCode::ParseError, path.string() + " is not a ragx index (version 1)");
    }
    VectorIndex index;
    try {
        for (const auto& d : header.at("documents")) {
            Document doc;
            doc.id = d.at("id");
            doc.text = d.at("text");
            doc.metadata = d.at("metadata").get<std::map<std::string, std::string>>();
            index.documents.push_back(std::move(doc));
        }
        index.embedder = descriptor_from_json(header.at("embedder"));
        const auto count = header.at("count").get<Eigen::Index>();
        const auto dim = header.at("dimension").get<Eigen::Index>();
        if (count != static_cast<Eigen::Index>(index.documents.size())) {
            throw Error(ErrorCode::ParseError, "index header count does not match documents");
        }
        index.vectors.resize(count, dim);
        for (Eigen::Index r = 0; r < count; ++r) {
            for (Eigen::Index c = 0; c < dim; ++c) {
                std::uint32_t bits = 0;
                if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
                    throw Error(ErrorCode::ParseError, "index vector block truncated in " + path.string());
                }
                index.vectors(r, c) = static_cast<double>(std::bit_cast<float>(to_little_endian(bits)));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, "corrupt index header in " + path.string() + ": " + e.what());
    }
    return index;
}

std::vector<ScoredDocument> search(const VectorIndex& index, const Embedder& embedder, const std::string& question,
                                   std::size_t k) {
    if (k == 0) throw Error(ErrorCode::PreconditionViolation, "k must be at least 1");
    if (utf8::trim(question).empty()) throw Error(ErrorCode::EmptyInput, "question is empty");
    const auto q = embedder.embed({question}).at(0);
    if (q.size() != index.dimension()) {
        throw Error(ErrorCode::DimensionError, "question embedding dimension " + std::to_string(q.size()) +
                                                   " does not match index dimension " +
                                                   std::to_string(index.dimension()));
    }
    std::vector<double> scores(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        scores[i] = cosine(q, index.vectors.row(static_cast<Eigen::Index>(i)).transpose());
    }
    std::vector<std::size_t> order(index.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return index.documents[a].id < index.documents[b].id;
    });
    order.resize(std::min(k, order.size()));
    std::vector<ScoredDocument> out;
    for (auto i : order) out.push_back({index.documents[i], scores[i]});
    return out;
}

Prompt compose_prompt(const std::string& prompt_template, const std::string& question,
                      const std::vector<Document>& documents, bool protect_instruction) {
    // Literal segments and placeholders, in template order.
    struct Piece {
        bool placeholder;
        std::string text;
    };
    std::vector<Piece> pieces;
    int context_count = 0;
    int question_count = 0;
    std::size_t pos = 0;
    std::string literal;
    while (pos < prompt_template.size()) {
        const auto open = prompt_template.find('{', pos);
        if (open == std::string::npos) {
            literal += prompt_template.substr(pos);
            break;
        }
        const auto close = prompt_template.find('}', open);
        if (close == std::string::npos) throw Error(ErrorCode::TemplateError, "unterminated placeholder in template");
        const auto name = prompt_template.substr(open + 1, close - open - 1);
        if (name != "context" && name != "question") {
            throw Error(ErrorCode::TemplateError, "unknown placeholder {" + name + "} in template");
        }
        (name == "context" ? context_count : question_count)++;
        literal += prompt_template.substr(pos, open - pos);
        if (!literal.empty()) pieces.push_back({false, std::move(literal)});
        literal.clear();
        pieces.push_back({true, name});
        pos = close + 1;
    }
    if (!literal.empty()) pieces.push_back({false, literal});
    if (context_count != 1 || question_count != 1) {
        throw Error(ErrorCode::TemplateError, "template needs exactly one {context} and one {question}");
    }

    Prompt prompt;
    prompt.question_text = question;
    std::string context;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (i > 0) context.push_back('\n');
        context += documents[i].text;
        prompt.context_blocks.push_back({documents[i].id, documents[i].text});
    }
    prompt.empty_context = documents.empty();

    std::size_t offset = 0;  // code points
    for (const auto& piece : pieces) {
        const std::string& text = piece.placeholder ? (piece.text == "context" ? context : question) : piece.text;
        const auto len = utf8::length(text);
        if (!piece.placeholder) {
            if (prompt.instruction.empty() && offset == 0) prompt.instruction = utf8::trim(text);
            if (protect_instruction && len > 0) prompt.protected_spans.push_back({offset, offset + len});
        }
        prompt.rendered += text;
        offset += len;
    }
    return prompt;
}

RagPipeline::RagPipeline(std::shared_ptr<const VectorIndex> index, std::shared_ptr<const Embedder> embedder,
                         std::shared_ptr<const Generator> generator, std::string prompt_template,
                         bool protect_instruction)
    : index_(std::move(index)),
      embedder_(std::move(embedder)),
      generator_(std::move(generator)),
      template_(std::move(prompt_template)),
      protect_instruction_(protect_instruction) {}

RagResult RagPipeline::answer(const std::string& question, std::size_t k) const {
    RagResult result;
    result.question = Question{"q", question};
    result.retrieved = search(*index_, *embedder_, question, k);
    std::vector<Document> docs;
    for (const auto& r : result.retrieved) docs.push_back(r.document);
    result.prompt = compose_prompt(template_, question, docs, protect_instruction_);
    result.response = generator_->generate(result.prompt.rendered);
    return result;
}

}  // namespace ragx
