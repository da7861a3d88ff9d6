#include "nclab/format.hpp"

#include <cmath>
#include <cstdio>

namespace nclab {

std::string fmt_num(double v) {
    if (v == 0.0) return "0";  // folds -0 into 0
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace nclab
