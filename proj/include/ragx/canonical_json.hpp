#pragma once

#include <json.hpp>

#include <string>

namespace ragx {

// Canonical serialization: object keys sorted bytewise, no insignificant
// whitespace, floats with 9 significant digits, integers verbatim, UTF-8
// strings unescaped except where JSON requires. Output is newline-terminated.
std::string canonical_dump(const nlohmann::json& value);

// Same, without the trailing newline (for embedding in larger documents).
std::string canonical_dump_compact(const nlohmann::json& value);

std::string format_float(double value);

}  // namespace ragx
