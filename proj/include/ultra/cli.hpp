#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ultra {

// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ultra
