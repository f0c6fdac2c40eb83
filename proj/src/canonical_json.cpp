#include "ragx/canonical_json.hpp"

#include "ragx/errors.hpp"

#include <cmath>
#include <cstdio>

namespace ragx {
namespace {

void write(const nlohmann::json& value, std::string& out) {
    using value_t = nlohmann::json::value_t;
    switch (value.type()) {
        case value_t::null:
            out += "null";
            break;
        case value_t::boolean:
            out += value.get<bool>() ? "true" : "false";
            break;
        case value_t::number_integer:
            out += std::to_string(value.get<std::int64_t>());
            break;
        case value_t::number_unsigned:
            out += std::to_string(value.get<std::uint64_t>());
            break;
        case value_t::number_float:
            out += format_float(value.get<double>());
            break;
        case value_t::string:
            out += value.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
            break;
        case value_t::array: {
            out.push_back('[');
            bool first = true;
            for (const auto& item : value) {
                if (!first) out.push_back(',');
                first = false;
                write(item, out);
            }
            out.push_back(']');
            break;
        }
        case value_t::object: {
            // nlohmann::json stores objects in a std::map, already key-sorted.
            out.push_back('{');
            bool first = true;
            for (const auto& [key, item] : value.items()) {
                if (!first) out.push_back(',');
                first = false;
                out += nlohmann::json(key).dump();
                out.push_back(':');
                write(item, out);
            }
            out.push_back('}');
            break;
        }
        case value_t::binary:
        case value_t::discarded:
            throw Error(ErrorCode::ParseError, "value not representable in canonical JSON");
    }
}

}  // namespace

std::string format_float(double value) {
    if (!std::isfinite(value)) {
        throw Error(ErrorCode::NumericError, "non-finite number in canonical JSON");
    }
    if (value == 0.0) {
        return "0";  // folds -0
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

std::string canonical_dump_compact(const nlohmann::json& value) {
    std::string out;
    write(value, out);
    return out;
}

std::string canonical_dump(const nlohmann::json& value) {
    auto out = canonical_dump_compact(value);
    out.push_back('\n');
    return out;
}

}  // namespace ragx
