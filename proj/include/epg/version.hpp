#pragma once

namespace epg {

inline constexpr const char* version = "0.1.0";

}  // namespace epg
