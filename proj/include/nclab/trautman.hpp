#pragma once

#include <span>
#include <string>

#include "nclab/geodesics.hpp"
#include "nclab/spacetime.hpp"

namespace nclab {

// Static potentials with closed-form gradient and Hessian attached as exact
// derivatives of the scalar field.
struct Potential {
    std::string name;
    TensorField phi;      // scalar
    TensorField density;  // scalar source, phi's Laplacian / 4 pi
    double singular_radius = 0.0;  // events this close to the spatial origin are excluded
};

Potential zero_potential(const Box& region);
// phi = k (x^2 + y^2 + z^2), density 6k / 4pi.
Potential harmonic_potential(double k, const Box& region);
// phi = -M / r, vacuum away from the origin.
Potential point_mass_potential(double mass, const Box& region, double singular_radius = 0.05);
// phi = g z.
Potential uniform_potential(double g, const Box& region);

struct NewtonianModel {
    ClassicalSpacetime spacetime;  // flat operator
    TensorField phi;
    TensorField density;
    double singular_radius = 0.0;
};

struct GeometrizedModel {
    ClassicalSpacetime spacetime;  // curved operator
    TensorField density;
    double singular_radius = 0.0;
};

NewtonianModel newtonian_model(const Potential& p, const DerivativeOperator& flat, const Box& region);

// Quasi-random events of the region outside the singular radius.
std::vector<Event> working_events(const Box& region, double singular_radius, std::size_t n, std::uint64_t skip = 0);

// sup |h^ab nabla_a nabla_b phi - 4 pi rho|
double poisson_residual(const NewtonianModel& m, std::span<const Event> events);

inline constexpr double kPoissonTolerance = 1e-6;

// Difference field -t_b t_c grad^a phi added to the model's flat operator.
// Refuses models whose Poisson residual on `events` exceeds `tolerance`.
GeometrizedModel geometrize(const NewtonianModel& m, std::span<const Event> events,
                            double tolerance = kPoissonTolerance);

struct TrautmanReport {
    double ricci_source = 0.0;  // |R_ab - 4 pi rho t_a t_b|
    double pair_symmetry = 0.0;  // |R^a_b^c_d - R^c_d^a_b|
    double newtonian = 0.0;  // |R^ab_cd|
    double worst() const;
};

TrautmanReport check_trautman(const GeometrizedModel& g, std::span<const Event> events);

struct RecoveryOptions {
    Box region;                  // simply connected working region holding the anchor
    std::span<const Event> curl_events;
    double tolerance = kPoissonTolerance;
    double line_tolerance = 1e-13;  // relative, per line integral
};

// Flat operator plus a potential vanishing along the anchor's spatial point.
// The acceleration field -C^b_nm eta^n eta^m is integrated along x-, then y-,
// then z-parallel legs from the anchor after a curl test.
NewtonianModel recover(const GeometrizedModel& g, const Event& anchor, const RecoveryOptions& opt);

// Flat compatible operator whose difference field from st.op vanishes on the
// curve. The curve must be timelike and meet each constant-time slice once.
DerivativeOperator flat_operator_on_curve(const ClassicalSpacetime& st, const WorldLine& curve,
                                          double tolerance = kPoissonTolerance);

}  // namespace nclab
