#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ragx {

// Exit codes: 0 success, 1 usage error, 2 backend error, 3 data error.
// Errors go to `err` as one line of JSON {"code","message"}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool out_is_terminal);

}  // namespace ragx
