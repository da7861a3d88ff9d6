#include "nclab/sampling.hpp"

#include <boost/random/sobol.hpp>

namespace nclab {

namespace {

std::vector<std::array<double, 4>> unit_points(std::size_t dims, std::size_t n, std::uint64_t skip) {
    boost::random::sobol gen(dims);
    gen.discard(skip * dims);
    const double scale = 1.0 / (static_cast<double>(gen.max()) + 1.0);
    std::vector<std::array<double, 4>> pts(n);
    for (auto& p : pts) {
        for (std::size_t d = 0; d < dims; ++d) p[d] = (static_cast<double>(gen()) + 0.5) * scale;
    }
    return pts;
}

}  // namespace

std::vector<Event> sobol_events(const Box& box, std::size_t n, std::uint64_t skip) {
    std::vector<Event> out;
    out.reserve(n);
    for (const auto& u : unit_points(4, n, skip)) {
        Event e;
        for (int a = 0; a < 4; ++a) {
            const auto i = static_cast<std::size_t>(a);
            e[a] = box.lo[i] + u[i] * (box.hi[i] - box.lo[i]);
        }
        out.push_back(e);
    }
    return out;
}

std::vector<Event> sobol_slice_events(const Box& box, double t, std::size_t n, std::uint64_t skip) {
    std::vector<Event> out;
    out.reserve(n);
    for (const auto& u : unit_points(3, n, skip)) {
        Event e;
        e[0] = t;
        for (int a = 1; a < 4; ++a) {
            const auto i = static_cast<std::size_t>(a);
            e[a] = box.lo[i] + u[i - 1] * (box.hi[i] - box.lo[i]);
        }
        out.push_back(e);
    }
    return out;
}

}  // namespace nclab
