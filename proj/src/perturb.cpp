#include "ragx/perturb.hpp"

#include "ragx/errors.hpp"
#include "ragx/utf8.hpp"

#include <algorithm>

namespace ragx {
namespace {

void check_inputs(const std::vector<Feature>& features, const std::vector<Span>& protected_spans) {
    if (features.empty()) {
        throw Error(ErrorCode::NoFeatures, "no features to perturb");
    }
    auto sorted = protected_spans;
    std::sort(sorted.begin(), sorted.end(), [](const Span& a, const Span& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].start < sorted[i - 1].end) {
            throw Error(ErrorCode::PreconditionViolation, "protected spans overlap");
        }
    }
}

bool is_protected(const Span& span, const std::vector<Span>& protected_spans) {
    return std::any_of(protected_spans.begin(), protected_spans.end(),
                       [&](const Span& p) { return p.overlaps(span); });
}

// Marks the code points that fall inside a protected span.
std::vector<bool> protection_mask(std::size_t n, const std::vector<Span>& protected_spans) {
    std::vector<bool> mask(n, false);
    for (const auto& p : protected_spans) {
        for (std::size_t i = p.start; i < std::min(p.end, n); ++i) mask[i] = true;
    }
    return mask;
}

// Drops leading/trailing whitespace that is not protected.
std::u32string trim_unprotected(const std::u32string& text, const std::vector<bool>& prot) {
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && utf8::is_space(text[b]) && !prot[b]) ++b;
    while (e > b && utf8::is_space(text[e - 1]) && !prot[e - 1]) --e;
    return text.substr(b, e - b);
}

struct Rewritten {
    std::u32string text;
    std::vector<bool> prot;

    void append(const std::u32string& cps, const std::vector<bool>& mask, std::size_t from, std::size_t to) {
        text.append(cps, from, to - from);
        prot.insert(prot.end(), mask.begin() + static_cast<std::ptrdiff_t>(from),
                    mask.begin() + static_cast<std::ptrdiff_t>(to));
    }
    void push(char32_t c) {
        text.push_back(c);
        prot.push_back(false);
    }
};

// Removes the span and collapses the unprotected whitespace around the cut to
// one space. Protected whitespace is kept as is and then serves as the gap.
std::u32string cut(const std::u32string& cps, const std::vector<bool>& prot, const Span& span) {
    std::size_t left_end = span.start;
    while (left_end > 0 && utf8::is_space(cps[left_end - 1]) && !prot[left_end - 1]) --left_end;
    std::size_t right_begin = span.end;
    while (right_begin < cps.size() && utf8::is_space(cps[right_begin]) && !prot[right_begin]) ++right_begin;

    Rewritten out;
    out.append(cps, prot, 0, left_end);
    const bool had_gap = left_end < span.start || right_begin > span.end;
    const bool kept_gap = (left_end > 0 && utf8::is_space(cps[left_end - 1])) ||
                          (right_begin < cps.size() && utf8::is_space(cps[right_begin]));
    if (had_gap && !kept_gap) out.push(U' ');
    out.append(cps, prot, right_begin, cps.size());
    return trim_unprotected(out.text, out.prot);
}

std::u32string substitute(const std::u32string& cps, const std::vector<bool>& prot, const Span& span,
                          const std::u32string& token) {
    Rewritten out;
    out.append(cps, prot, 0, span.start);
    for (char32_t c : token) out.push(c);
    out.append(cps, prot, span.end, cps.size());
    return trim_unprotected(out.text, out.prot);
}

template <typename Fn>
std::vector<PerturbedInput> apply(const std::string& source, const std::vector<Feature>& features,
                                  const std::vector<Span>& protected_spans, const std::string& strategy_id,
                                  Fn&& rewrite) {
    check_inputs(features, protected_spans);
    const auto cps = utf8::decode(source);
    const auto prot = protection_mask(cps.size(), protected_spans);
    std::vector<PerturbedInput> out;
    out.reserve(features.size());
    for (const auto& f : features) {
        if (f.span.end > cps.size() || f.span.start > f.span.end) {
            throw Error(ErrorCode::PreconditionViolation, "feature span out of bounds");
        }
        if (is_protected(f.span, protected_spans)) continue;
        out.push_back(PerturbedInput{f.index, utf8::encode(rewrite(cps, prot, f.span)), strategy_id});
    }
    return out;
}

class LeaveOneOutStrategy final : public PerturbationStrategy {
public:
    std::string id() const override { return kLeaveOneOut; }
    std::string description() const override { return "remove each feature individually"; }
    std::vector<PerturbedInput> perturb(const std::string& source, const std::vector<Feature>& features,
                                        const std::vector<Span>& protected_spans) const override {
        return leave_one_out(source, features, protected_spans);
    }
};

class MaskStrategy final : public PerturbationStrategy {
public:
    explicit MaskStrategy(std::string token) : token_(std::move(token)) {}
    std::string id() const override { return kMask; }
    std::string description() const override { return "replace each feature with a mask token"; }
    std::vector<PerturbedInput> perturb(const std::string& source, const std::vector<Feature>& features,
                                        const std::vector<Span>& protected_spans) const override {
        return mask_feature(source, features, protected_spans, token_);
    }

private:
    std::string token_;
};

}  // namespace

std::vector<PerturbedInput> leave_one_out(const std::string& source, const std::vector<Feature>& features,
                                          const std::vector<Span>& protected_spans) {
    return apply(source, features, protected_spans, kLeaveOneOut, cut);
}

std::vector<PerturbedInput> mask_feature(const std::string& source, const std::vector<Feature>& features,
                                         const std::vector<Span>& protected_spans,
                                         const std::string& mask_token) {
    if (mask_token.empty()) {
        auto out = leave_one_out(source, features, protected_spans);
        for (auto& p : out) p.strategy_id = kMask;
        return out;
    }
    const auto token = utf8::decode(mask_token);
    return apply(source, features, protected_spans, kMask,
                 [&](const std::u32string& cps, const std::vector<bool>& prot, const Span& span) {
                     return substitute(cps, prot, span, token);
                 });
}

StrategyRegistry StrategyRegistry::with_defaults(const std::string& mask_token) {
    StrategyRegistry registry;
    registry.add(std::make_shared<LeaveOneOutStrategy>());
    registry.add(std::make_shared<MaskStrategy>(mask_token));
    return registry;
}

void StrategyRegistry::add(std::shared_ptr<const PerturbationStrategy> strategy) {
    auto id = strategy->id();
    strategies_[id] = std::move(strategy);
}

std::shared_ptr<const PerturbationStrategy> StrategyRegistry::find(const std::string& id) const {
    const std::string key = id == "loo" ? kLeaveOneOut : id;
    auto it = strategies_.find(key);
    if (it == strategies_.end()) {
        throw Error(ErrorCode::UnknownStrategy, "unknown perturbation strategy '" + id + "'");
    }
    return it->second;
}

std::vector<StrategyInfo> StrategyRegistry::list() const {
    std::vector<StrategyInfo> out;
    for (const auto& [id, s] : strategies_) out.push_back({id, s->description()});
    return out;
}

std::vector<StrategyInfo> list_strategies() { return StrategyRegistry::with_defaults().list(); }

}  // namespace ragx
