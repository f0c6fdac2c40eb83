#include "ragx/backends.hpp"

#include "ragx/decompose.hpp"
#include "ragx/digest.hpp"
#include "ragx/tokens.hpp"
#include "ragx/utf8.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ragx {

LocalLexicalEmbedder::LocalLexicalEmbedder(const Corpus& corpus) {
    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const auto& d : corpus.documents) texts.push_back(d.text);
    build(texts);
}

LocalLexicalEmbedder LocalLexicalEmbedder::from_texts(const std::vector<std::string>& texts) {
    LocalLexicalEmbedder e;
    e.build(texts);
    return e;
}

void LocalLexicalEmbedder::build(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "lexical embedder needs a non-empty corpus");
    }
    std::set<std::string> unique;
    for (const auto& t : texts) {
        for (auto& tok : lexical_tokens(t)) unique.insert(std::move(tok));
    }
    vocabulary_.assign(unique.begin(), unique.end());
    for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
        lookup_.emplace(vocabulary_[i], static_cast<Eigen::Index>(i));
    }
}

BackendDescriptor LocalLexicalEmbedder::descriptor() const {
    BackendDescriptor d;
    d.backend_id = "local_lexical";
    d.kind = BackendKind::Embedder;
    d.model_name = "tf-vocab-" + std::to_string(vocabulary_.size());
    d.deterministic = true;
    return d;
}

EmbeddingVector LocalLexicalEmbedder::embed_one(const std::string& text) const {
    EmbeddingVector v = EmbeddingVector::Zero(dimension());
    std::map<std::string, double> oov;
    for (const auto& tok : lexical_tokens(text)) {
        auto it = lookup_.find(tok);
        if (it != lookup_.end()) {
            v[it->second] += 1.0;
        } else {
            oov[tok] += 1.0;
        }
    }
    double residual = 0.0;
    for (const auto& [tok, count] : oov) residual += count * count;
    v[dimension() - 1] = std::sqrt(residual);
    return unit_normalized(v);
}

std::vector<EmbeddingVector> LocalLexicalEmbedder::embed(const std::vector<std::string>& texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

ExtractiveMockGenerator::ExtractiveMockGenerator(std::string context_label, std::string question_label)
    : context_label_(std::move(context_label)), question_label_(std::move(question_label)) {}

BackendDescriptor ExtractiveMockGenerator::descriptor() const {
    BackendDescriptor d;
    d.backend_id = "extractive_mock";
    d.kind = BackendKind::Generator;
    d.deterministic = true;
    return d;
}

GeneratedResponse ExtractiveMockGenerator::generate(const std::string& prompt_text) const {
    auto q_pos = prompt_text.rfind(question_label_);
    std::string question;
    std::string_view before(prompt_text);
    if (q_pos != std::string::npos) {
        question = prompt_text.substr(q_pos + question_label_.size());
        before = before.substr(0, q_pos);
    }
    auto c_pos = before.rfind(context_label_);
    std::string context(c_pos == std::string_view::npos ? before : before.substr(c_pos + context_label_.size()));

    GeneratedResponse response;
    response.backend_id = descriptor().backend_id;
    response.settings_fingerprint = sha256_hex("extractive_mock|" + context_label_ + "|" + question_label_);

    const auto trimmed = utf8::trim(context);
    if (trimmed.empty()) return response;

    const auto question_tokens = normalize_tokens(question);
    double best = -1.0;
    for (const auto& sentence : decompose_sentences(trimmed)) {
        const double score = question_tokens.empty() ? 0.0 : token_f1(question_tokens, normalize_tokens(sentence.text));
        if (score > best) {
            best = score;
            response.text = sentence.text;
        }
    }
    return response;
}

CallLimiter::CallLimiter(int max_in_flight) : max_(std::max(1, max_in_flight)) {}

CallLimiter::Permit::Permit(CallLimiter& limiter) : limiter_(limiter) {
    std::unique_lock lock(limiter_.mutex_);
    limiter_.cv_.wait(lock, [&] { return limiter_.in_flight_ < limiter_.max_; });
    ++limiter_.in_flight_;
}

CallLimiter::Permit::~Permit() {
    {
        std::lock_guard lock(limiter_.mutex_);
        --limiter_.in_flight_;
    }
    limiter_.cv_.notify_one();
}

namespace {

class LimitedEmbedder final : public Embedder {
public:
    LimitedEmbedder(std::shared_ptr<Embedder> inner, std::shared_ptr<CallLimiter> limiter)
        : inner_(std::move(inner)), limiter_(std::move(limiter)) {}
    BackendDescriptor descriptor() const override { return inner_->descriptor(); }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override {
        CallLimiter::Permit permit(*limiter_);
        return inner_->embed(texts);
    }
    bool reachable() const override { return inner_->reachable(); }

private:
    std::shared_ptr<Embedder> inner_;
    std::shared_ptr<CallLimiter> limiter_;
};

class LimitedGenerator final : public Generator {
public:
    LimitedGenerator(std::shared_ptr<Generator> inner, std::shared_ptr<CallLimiter> limiter)
        : inner_(std::move(inner)), limiter_(std::move(limiter)) {}
    BackendDescriptor descriptor() const override { return inner_->descriptor(); }
    GeneratedResponse generate(const std::string& prompt_text) const override {
        CallLimiter::Permit permit(*limiter_);
        return inner_->generate(prompt_text);
    }
    bool reachable() const override { return inner_->reachable(); }

private:
    std::shared_ptr<Generator> inner_;
    std::shared_ptr<CallLimiter> limiter_;
};

}  // namespace

std::shared_ptr<Embedder> limit_calls(std::shared_ptr<Embedder> inner, std::shared_ptr<CallLimiter> limiter) {
    return std::make_shared<LimitedEmbedder>(std::move(inner), std::move(limiter));
}

std::shared_ptr<Generator> limit_calls(std::shared_ptr<Generator> inner, std::shared_ptr<CallLimiter> limiter) {
    return std::make_shared<LimitedGenerator>(std::move(inner), std::move(limiter));
}

}  // namespace ragx
