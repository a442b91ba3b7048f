#pragma once

namespace homokin {

inline constexpr const char* version = "0.1.0";

}  // namespace homokin
