#pragma once

#include <cstdint>
#include <vector>

#include "nclab/tensor.hpp"

namespace nclab {

// First n points of the 4-dimensional Sobol sequence mapped into the box,
// after discarding `skip` leading points.
std::vector<Event> sobol_events(const Box& box, std::size_t n, std::uint64_t skip = 0);

// Same sequence restricted to the spatial axes of a slice at time t.
std::vector<Event> sobol_slice_events(const Box& box, double t, std::size_t n, std::uint64_t skip = 0);

}  // namespace nclab
