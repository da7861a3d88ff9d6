#pragma once

#include <stdexcept>
#include <string>

namespace nclab {

// Wrong slot kind or slot index in a tensor operation.
struct SlotError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation outside a field's bounding box, or a stencil leaving it.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Violated precondition of a construction (asymmetric field, bad curve, ...).
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Trajectory or body left the working region.
struct RegionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flow Jacobian of a dust congruence collapsed.
struct CausticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hypersurface does not contain the support it is asked to integrate.
struct SlicingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Geometrized model cannot be written as flat gravity plus a potential.
struct RecoveryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace nclab
