#pragma once

#include "ragx/core.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ragx {

inline constexpr const char* kLeaveOneOut = "leave_one_out";
inline constexpr const char* kMask = "mask";

// One output per feature that does not intersect a protected span, in feature
// order. The feature's span is cut out, the whitespace run left at the cut is
// collapsed to one space, and the result is trimmed. Whitespace inside a
// protected span is never removed.
std::vector<PerturbedInput> leave_one_out(const std::string& source, const std::vector<Feature>& features,
                                          const std::vector<Span>& protected_spans = {});

// As leave_one_out but the span is replaced by `mask_token`. An empty token
// is exactly leave_one_out.
std::vector<PerturbedInput> mask_feature(const std::string& source, const std::vector<Feature>& features,
                                         const std::vector<Span>& protected_spans = {},
                                         const std::string& mask_token = "[MASK]");

class PerturbationStrategy {
public:
    virtual ~PerturbationStrategy() = default;
    virtual std::string id() const = 0;
    virtual std::string description() const = 0;
    virtual std::vector<PerturbedInput> perturb(const std::string& source, const std::vector<Feature>& features,
                                                const std::vector<Span>& protected_spans) const = 0;
};

struct StrategyInfo {
    std::string id;
    std::string description;
};

class StrategyRegistry {
public:
    // Registry with "leave_one_out" and "mask" (using `mask_token`).
    static StrategyRegistry with_defaults(const std::string& mask_token = "[MASK]");

    void add(std::shared_ptr<const PerturbationStrategy> strategy);

    // Accepts "loo" as an alias for leave_one_out. Throws UnknownStrategy.
    std::shared_ptr<const PerturbationStrategy> find(const std::string& id) const;

    std::vector<StrategyInfo> list() const;

private:
    std::map<std::string, std::shared_ptr<const PerturbationStrategy>> strategies_;
};

std::vector<StrategyInfo> list_strategies();

}  // namespace ragx
