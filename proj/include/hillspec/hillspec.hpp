#pragma once

#include "hillspec/asymptotics.hpp"
#include "hillspec/floquet.hpp"
#include "hillspec/model.hpp"
#include "hillspec/shooting.hpp"
#include "hillspec/singularity.hpp"
#include "hillspec/spectrum.hpp"

namespace hillspec {

inline constexpr const char* tool_version = "0.1.0";

}  // namespace hillspec
