#pragma once

#include "json.hpp"

namespace ultra {

// Insertion-ordered so reports serialize in a fixed field order.
using Json = nlohmann::ordered_json;

}  // namespace ultra
