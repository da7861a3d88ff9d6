#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "nclab/errors.hpp"
#include "nclab/geodesics.hpp"
#include "nclab/trautman.hpp"

using namespace nclab;
using nclab::testing::geometrized;

namespace {

const Box kBox{{-0.1, -3, -3, -3}, {2.5, 3, 3, 3}};
const double kRoot2 = std::sqrt(2.0);

IntegratorOptions in_box(double fixed_step = 0.0) {
    IntegratorOptions opt;
    opt.region = kBox;
    opt.fixed_step = fixed_step;
    return opt;
}

// Free fall in phi = |x|^2 from rest at (0.5, 0, 0): x(t) = 0.5 cos(sqrt2 t).
double trap_x(double t) { return 0.5 * std::cos(kRoot2 * t); }
double trap_v(double t) { return -0.5 * kRoot2 * std::sin(kRoot2 * t); }

}  // namespace

TEST(IntegrateGeodesic, FlatGivesStraightLine) {
    const DerivativeOperator flat = DerivativeOperator::coordinate(kBox);
    const Event e0(0, 0.1, -0.2, 0.3);
    const Vec4 v0{1, 0.3, -0.4, 0.2};
    const WorldLine w = integrate_geodesic(flat, e0, v0, 2.0, 1e-10, in_box());
    for (const CurveSample& c : w.samples())
        for (int a = 0; a < 4; ++a) EXPECT_NEAR(c.x[a], e0[a] + c.s * v0[a], 1e-14);
}

TEST(IntegrateGeodesic, TemporalLengthConserved) {
    const GeometrizedModel g = geometrized(point_mass_potential(1.0, kBox), kBox);
    const WorldLine w = integrate_geodesic(g.spacetime.op, Event(0, 1, 0, 0), {1.3, 0, 1.3, 0}, 1.5, 1e-8, in_box());
    for (const CurveSample& c : w.samples()) EXPECT_NEAR(c.xi[0], 1.3, 1e-8);
}

TEST(IntegrateGeodesic, MatchesClosedFormTrapOrbit) {
    const GeometrizedModel g = geometrized(harmonic_potential(1.0, kBox), kBox);
    const WorldLine w = integrate_geodesic(g.spacetime.op, Event(0, 0.5, 0, 0), {1, 0, 0, 0}, 2.0, 1e-10, in_box());
    for (const CurveSample& c : w.samples()) EXPECT_NEAR(c.x[1], trap_x(c.x[0]), 1e-9);
    const GeodesicResidual r = geodesic_residual(g.spacetime.op, w);
    EXPECT_LT(r.affine, 1e-9);
    EXPECT_LE(r.reparam, r.affine);
}

TEST(IntegrateGeodesic, FourthOrderOnStepHalving) {
    const GeometrizedModel g = geometrized(harmonic_potential(1.0, kBox), kBox);
    auto end_error = [&](double h) {
        const WorldLine w = integrate_geodesic(g.spacetime.op, Event(0, 0.5, 0, 0), {1, 0, 0, 0}, 2.0, 1.0, in_box(h));
        return std::abs(w.samples().back().x[1] - trap_x(2.0));
    };
    double prev = end_error(0.1);
    for (double h : {0.05, 0.025}) {
        const double err = end_error(h);
        EXPECT_GE(prev / err, 12.0) << "step " << h;
        prev = err;
    }
}

TEST(IntegrateGeodesic, LeavingRegionThrows) {
    const DerivativeOperator flat = DerivativeOperator::coordinate(kBox);
    EXPECT_THROW(integrate_geodesic(flat, Event(0, 0, 0, 0), {1, 5, 0, 0}, 2.0, 1e-8, in_box()), RegionError);
}

TEST(IntegrateForced, ZeroPotentialGivesStraightLine) {
    const DerivativeOperator flat = DerivativeOperator::coordinate(kBox);
    const Event e0(0, 0.5, 0.5, 0);
    const WorldLine w = integrate_forced(flat, zero_potential(kBox).phi, e0, {1, -0.2, 0, 0.1}, 1.0, 1e-10, in_box());
    for (const CurveSample& c : w.samples()) {
        EXPECT_NEAR(c.x[1], 0.5 - 0.2 * c.s, 1e-14);
        EXPECT_NEAR(c.x[3], 0.1 * c.s, 1e-14);
    }
}

TEST(IntegrateForced, UniformFieldParabola) {
    const double g = 0.5;
    const DerivativeOperator flat = DerivativeOperator::coordinate(kBox);
    const WorldLine w =
        integrate_forced(flat, uniform_potential(g, kBox).phi, Event(0, 0, 0, 0.2), {1, 0.1, 0, 0.3}, 2.0, 1e-10, in_box());
    for (const CurveSample& c : w.samples()) {
        const double t = c.x[0];
        EXPECT_NEAR(c.x[3], 0.2 + 0.3 * t - 0.5 * g * t * t, 1e-8);
        EXPECT_NEAR(c.x[1], 0.1 * t, 1e-12);
    }
    EXPECT_GT(geodesic_residual(flat, w).reparam, 0.5 * g);
}

TEST(IntegrateForced, MatchesGeometrizedGeodesic) {
    const Potential p = harmonic_potential(1.0, kBox);
    const NewtonianModel nm = newtonian_model(p, DerivativeOperator::coordinate(kBox), kBox);
    const GeometrizedModel g = geometrized(p, kBox);
    const double tol = 1e-8;
    const Event e0(0, 0.4, -0.2, 0.1);
    const Vec4 v0{1, 0.3, 0.2, 0};
    const WorldLine geo = integrate_geodesic(g.spacetime.op, e0, v0, 1.0, tol, in_box());
    const WorldLine forced =
        integrate_forced(nm.spacetime.op, nm.phi, e0, v0, 1.0, tol, in_box(geo.samples()[1].s - geo.samples()[0].s));
    EXPECT_LT(sup_distance(geo, forced), 10 * tol);
}

TEST(GeodesicResidual, CubicReparametrizationIsOnlyReparametrizable) {
    // Closed-form trap geodesic sampled at t = u^3.
    const GeometrizedModel g = geometrized(harmonic_potential(1.0, kBox), kBox);
    std::vector<CurveSample> s;
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
        const double u = 0.8 + 0.4 * i / n;
        const double t = u * u * u;
        const double dt = 3 * u * u;
        s.push_back({u, Event(t, trap_x(t), 0, 0), {dt, trap_v(t) * dt, 0, 0}});
    }
    const GeodesicResidual r = geodesic_residual(g.spacetime.op, WorldLine(s, Parametrization::Affine));
    EXPECT_GT(r.affine, 1.0);
    EXPECT_LT(r.reparam, 1e-7);
}

TEST(GeodesicResidual, NeedsFiveSamples) {
    std::vector<CurveSample> s;
    for (int i = 0; i < 4; ++i) s.push_back({0.1 * i, Event(0.1 * i, 0, 0, 0), {1, 0, 0, 0}});
    EXPECT_THROW(geodesic_residual(DerivativeOperator::coordinate(kBox), WorldLine(s, Parametrization::Affine)),
                 PreconditionError);
}

TEST(WorldLine, TimeReparametrizationNormalizesTangents) {
    const GeometrizedModel g = geometrized(harmonic_potential(1.0, kBox), kBox);
    const WorldLine w = integrate_geodesic(g.spacetime.op, Event(0, 0.5, 0, 0), {2.5, 0.5, 0, 0}, 0.8, 1e-10, in_box());
    const WorldLine n = reparametrize_by_time(w);
    EXPECT_EQ(n.parametrization(), Parametrization::TimeNormalized);
    for (const CurveSample& c : n.samples()) {
        EXPECT_EQ(c.xi[0], 1.0);
        EXPECT_DOUBLE_EQ(c.s, c.x[0]);
    }
}

TEST(WorldLine, RejectsNonIncreasingParameter) {
    std::vector<CurveSample> s{{0.0, Event(0, 0, 0, 0), {1, 0, 0, 0}}, {0.0, Event(0.1, 0, 0, 0), {1, 0, 0, 0}}};
    EXPECT_THROW(WorldLine(s, Parametrization::Affine), PreconditionError);
}

TEST(WorldLine, CsvHeaderAndRows) {
    const WorldLine w = integrate_geodesic(DerivativeOperator::coordinate(kBox), Event(0, 0, 0, 0), {1, 0.5, 0, 0}, 1.0,
                                           1e-8, in_box());
    std::ostringstream os;
    w.write_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "s,t,x,y,z,xi0,xi1,xi2,xi3");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, w.size());
}
