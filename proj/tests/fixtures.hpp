#pragma once

#include <vector>

#include "nclab/trautman.hpp"

namespace nclab::testing {

inline std::vector<Event> events_of(const Box& box, double singular_radius, std::size_t n = 200) {
    return working_events(box, singular_radius, n);
}

inline GeometrizedModel geometrized(const Potential& p, const Box& box) {
    const NewtonianModel nm = newtonian_model(p, DerivativeOperator::coordinate(box), box);
    const auto ev = events_of(box, p.singular_radius);
    return geometrize(nm, ev);
}

// -t_b t_c grad^a phi for phi with spatial gradient g(e), built directly.
template <class Grad>
TensorField gravity_difference(const Box& box, Grad g) {
    return TensorField({Slot::Up, Slot::Down, Slot::Down}, box, [g](const Event& e, double* out) {
        for (int i = 0; i < 64; ++i) out[i] = 0.0;
        const auto grad = g(e);
        for (int a = 1; a < 4; ++a) out[a * 16] = -grad[static_cast<std::size_t>(a - 1)];
    });
}

}  // namespace nclab::testing
