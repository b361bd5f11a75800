#pragma once

namespace clusterwalk {

inline constexpr const char* kVersion = "clusterwalk 1.0.0";

}
