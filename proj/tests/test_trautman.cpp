#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "nclab/errors.hpp"
#include "nclab/geodesics.hpp"
#include "nclab/sampling.hpp"
#include "nclab/trautman.hpp"

using namespace nclab;
using nclab::testing::events_of;
using nclab::testing::geometrized;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const Box kCube{{0, -1, -1, -1}, {1, 1, 1, 1}};
const Box kOrbitBox{{-0.1, -1.5, -1.5, -1.5}, {7.0, 1.5, 1.5, 1.5}};

double radius(const Event& e) { return std::hypot(e[1], e[2], e[3]); }

// Circular free fall at r = 1 around a unit point mass: speed 1, period 2 pi.
WorldLine circular_orbit(const DerivativeOperator& op, double span) {
    IntegratorOptions opt;
    opt.region = kOrbitBox;
    return integrate_geodesic(op, Event(0, 1, 0, 0), {1, 0, 1, 0}, span, 1e-10, opt);
}

double half_range(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return 0.5 * (*hi - *lo);
}

}  // namespace

TEST(Geometrize, ZeroPotentialLeavesOperatorFlat) {
    const GeometrizedModel g = geometrized(zero_potential(kCube), kCube);
    for (const Event& e : sobol_events(kCube, 100)) EXPECT_EQ(g.spacetime.op.difference_field()(e).max_abs(), 0.0);
}

TEST(Geometrize, HarmonicTrapSatisfiesCurvatureConditions) {
    const GeometrizedModel g = geometrized(harmonic_potential(1.0, kCube), kCube);
    const auto ev = events_of(kCube, 0.0, 500);
    const TrautmanReport r = check_trautman(g, ev);
    EXPECT_LT(r.ricci_source, 1e-6);
    EXPECT_LT(r.pair_symmetry, 1e-6);
    EXPECT_LT(r.newtonian, 1e-10);
}

TEST(Geometrize, RefusesInconsistentSource) {
    Potential p = harmonic_potential(1.0, kCube);
    p.density = TensorField::constant(Tensor::scalar(0.0), kCube);
    const NewtonianModel nm = newtonian_model(p, DerivativeOperator::coordinate(kCube), kCube);
    const auto ev = events_of(kCube, 0.0);
    EXPECT_THROW(geometrize(nm, ev), PreconditionError);
}

TEST(Geometrize, KeplerCircularOrbitCloses) {
    const GeometrizedModel g = geometrized(point_mass_potential(1.0, kOrbitBox), kOrbitBox);
    const WorldLine w = circular_orbit(g.spacetime.op, kTwoPi + 0.5);
    double drift = 0.0;
    for (const CurveSample& c : w.samples()) drift = std::max(drift, std::abs(radius(c.x) - 1.0));
    EXPECT_LT(drift, 1e-4);
    // First return to the positive x axis: y crosses zero upward after half a turn.
    double period = 0.0;
    const auto& S = w.samples();
    for (std::size_t i = 1; i < S.size(); ++i)
        if (S[i - 1].x[2] < 0 && S[i].x[2] >= 0) {
            const double f = -S[i - 1].x[2] / (S[i].x[2] - S[i - 1].x[2]);
            period = S[i - 1].x[0] + f * (S[i].x[0] - S[i - 1].x[0]);
            break;
        }
    EXPECT_NEAR(period, kTwoPi, 1e-3);
}

TEST(Geometrize, EquivalenceWithForcedMotion) {
    const Box box{{0, -3, -3, -3}, {1.2, 3, 3, 3}};
    for (const Potential& p : {harmonic_potential(1.0, box), point_mass_potential(1.0, box), uniform_potential(0.5, box)}) {
        const NewtonianModel nm = newtonian_model(p, DerivativeOperator::coordinate(box), box);
        const auto ev = events_of(box, p.singular_radius);
        const GeometrizedModel g = geometrize(nm, ev);
        const double tol = 1e-8;
        IntegratorOptions opt;
        opt.region = box;
        const Event e0(0.1, 0.8, -0.3, 0.5);
        const Vec4 v0{1.0, 0.2, 0.4, -0.1};
        const WorldLine geo = integrate_geodesic(g.spacetime.op, e0, v0, 1.0, tol, opt);
        opt.fixed_step = geo.samples()[1].s - geo.samples()[0].s;
        const WorldLine forced = integrate_forced(nm.spacetime.op, nm.phi, e0, v0, 1.0, tol, opt);
        EXPECT_LT(sup_distance(geo, forced), 10 * tol) << p.name;
    }
}

TEST(Recover, HarmonicPotentialUpToConstant) {
    const Box box{{0, -1, -1, -1}, {1, 1, 1, 1}};
    const Potential p = harmonic_potential(1.0, box);
    const GeometrizedModel g = geometrized(p, box);
    const auto ev = events_of(box, 0.0);
    RecoveryOptions opt;
    opt.region = box;
    opt.curl_events = ev;
    const Event anchor(0.5, 0, 0, 0);
    const NewtonianModel rec = recover(g, anchor, opt);
    EXPECT_NEAR(rec.phi(anchor).value(), 0.0, 1e-15);
    std::vector<double> diff;
    for (const Event& e : sobol_events(box, 300)) diff.push_back(rec.phi(e).value() - p.phi(e).value());
    EXPECT_LT(half_range(diff), 1e-6);
}

TEST(Recover, VacuumGivesZeroPotential) {
    const GeometrizedModel g = geometrized(zero_potential(kCube), kCube);
    const auto ev = events_of(kCube, 0.0);
    RecoveryOptions opt;
    opt.region = kCube;
    opt.curl_events = ev;
    const NewtonianModel rec = recover(g, Event(0.5, 0, 0, 0), opt);
    for (const Event& e : sobol_events(kCube, 100)) EXPECT_EQ(rec.phi(e).value(), 0.0);
}

TEST(Recover, PointMassOperatorRoundTrip) {
    const Box outer{{0, -2.2, -2.2, -2.2}, {1, 2.2, 2.2, 2.2}};
    const GeometrizedModel g = geometrized(point_mass_potential(1.0, outer), outer);
    const Box shell{{0, 1.0, -0.6, -0.6}, {1, 2.0, 0.6, 0.6}};  // simply connected, 1 <= r <= 2.2
    const auto ev = sobol_events(shell, 200);
    RecoveryOptions opt;
    opt.region = shell;
    opt.curl_events = ev;
    const NewtonianModel rec = recover(g, Event(0.5, 1.5, 0, 0), opt);
    const GeometrizedModel again = geometrize(rec, ev);
    double worst = 0.0;
    for (const Event& e : sobol_events(shell.shrunk(0.01), 300))
        worst = std::max(worst, max_abs_diff(again.spacetime.op.difference_field()(e), g.spacetime.op.difference_field()(e)));
    EXPECT_LT(worst, 1e-8);
}

TEST(Recover, RejectsCurledAcceleration) {
    // A rotating acceleration field has no potential (and breaks pair symmetry).
    const TensorField C({Slot::Up, Slot::Down, Slot::Down}, kCube, [](const Event& e, double* out) {
        for (int i = 0; i < 64; ++i) out[i] = 0.0;
        out[ci(1, 0, 0)] = e[2];
        out[ci(2, 0, 0)] = -e[1];
    });
    GeometrizedModel g = geometrized(zero_potential(kCube), kCube);
    g.spacetime.op = compose_operators(g.spacetime.op, C);
    const auto ev = events_of(kCube.shrunk(0.05), 0.0);  // room for difference stencils
    RecoveryOptions opt;
    opt.region = kCube;
    opt.curl_events = ev;
    EXPECT_THROW(recover(g, Event(0.5, 0, 0, 0), opt), RecoveryError);
}

TEST(FlatOperatorOnCurve, FlatInputIsReturnedUnchanged) {
    const ClassicalSpacetime st = adapted_spacetime(DerivativeOperator::coordinate(kOrbitBox), kOrbitBox);
    IntegratorOptions opt;
    opt.region = kOrbitBox;
    const WorldLine line = integrate_geodesic(st.op, Event(0, 0.2, 0, 0), {1, 0.3, 0, 0}, 1.0, 1e-10, opt);
    const DerivativeOperator lf = flat_operator_on_curve(st, line);
    for (const Event& e : sobol_events(lf.box(), 200)) EXPECT_LT(lf.difference_field()(e).max_abs(), 1e-10);
}

TEST(FlatOperatorOnCurve, AgreesAlongKeplerOrbit) {
    const GeometrizedModel g = geometrized(point_mass_potential(1.0, kOrbitBox), kOrbitBox);
    const WorldLine orbit = circular_orbit(g.spacetime.op, kTwoPi);
    const DerivativeOperator lf = flat_operator_on_curve(g.spacetime, orbit);

    double agreement = 0.0;
    for (const CurveSample& c : orbit.samples())
        agreement = std::max(agreement, max_abs_diff(lf.difference_field()(c.x), g.spacetime.op.difference_field()(c.x)));
    EXPECT_LT(agreement, 1e-6);

    const ClassicalSpacetime out = adapted_spacetime(lf, lf.box());
    const auto ev = working_events(lf.box(), 0.05, 500);
    EXPECT_LT(riemann(out, ev).flat_residual, 1e-6);
    EXPECT_LT(check_structure(out, ev).worst(), 1e-6);
}

TEST(FlatOperatorOnCurve, RejectsCurveMeetingSliceTwice) {
    const ClassicalSpacetime st = adapted_spacetime(DerivativeOperator::coordinate(kCube), kCube);
    std::vector<CurveSample> s;
    for (int i = 0; i < 6; ++i) {
        const double u = 0.1 * i;
        s.push_back({u, Event(0.5 + 0.2 * std::sin(10 * u), 0, 0, 0), {2.0 * std::cos(10 * u), 0, 0, 0}});
    }
    EXPECT_THROW(flat_operator_on_curve(st, WorldLine(s, Parametrization::Affine)), PreconditionError);
}
