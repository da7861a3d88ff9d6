#pragma once

#include <string>

namespace nclab {

// Round-trip decimal text ("%.17g"); identical doubles give identical bytes.
std::string fmt_num(double v);

}  // namespace nclab
