#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "nclab/errors.hpp"
#include "nclab/flux.hpp"
#include "nclab/hull.hpp"
#include "nclab/sampling.hpp"

using namespace nclab;
using nclab::testing::geometrized;

namespace {

const Box kRegion{{-0.2, -1.5, -1.5, -1.5}, {1.2, 4.5, 4.5, 4.5}};

ClassicalSpacetime flat_spacetime() { return adapted_spacetime(DerivativeOperator::coordinate(kRegion), kRegion); }

MassMomentumField body(const Event& start, const Vec4& velocity, double epsilon = 0.2) {
    const ClassicalSpacetime st = flat_spacetime();
    IntegratorOptions opt;
    opt.region = kRegion;
    const WorldLine gamma = integrate_geodesic(st.op, start, velocity, 1.0, 1e-10, opt);
    return build_dust_body(st, gamma, epsilon, BumpProfile::with_mass(epsilon));
}

const MassMomentumField& static_body() {
    static const MassMomentumField m = body(Event(0, 0, 0, 0), {1, 0, 0, 0});
    return m;
}

const MassMomentumField& boosted_body() {
    static const MassMomentumField m = body(Event(0, 0, 0, 0), {1, 0.3, 0, 0});
    return m;
}

Mat4d rotation_mix() {
    // Spatial rotation about a skew axis, time row untouched.
    const Eigen::AngleAxisd r(0.7, Eigen::Vector3d(1, 2, -1).normalized());
    Mat4d mix = Mat4d::Identity();
    mix.block<3, 3>(1, 1) = r.toRotationMatrix();
    return mix;
}

// Simpson on n^3 intervals of prod (1 - x_i^2)^4 over [-1,1]^3.
double cube_integral(int n) {
    const Box box{{0, -1, -1, -1}, {1, 1, 1, 1}};
    const TensorField T({Slot::Up, Slot::Up}, box, [](const Event& e, double* out) {
        for (int i = 0; i < 16; ++i) out[i] = 0.0;
        double v = 1.0;
        for (int a = 1; a < 4; ++a) v *= std::pow(1.0 - e[a] * e[a], 4);
        out[0] = v;
    });
    const Hypersurface s = Hypersurface::slice(box, 0.5);
    const DerivativeOperator flat = DerivativeOperator::coordinate(box);
    const SliceMesh mesh{Vec3(-1, -1, -1), 2.0 / n, {n, n, n}};
    return integrate_slice(T, s, standard_cobasis(flat), Event(0.5, 0, 0, 0), mesh).mass;
}

}  // namespace

TEST(VolumeElement, NormalizedAndFactorized) {
    const ClassicalSpacetime st = flat_spacetime();
    const VolumeElement v = VolumeElement::standard();
    EXPECT_LT(v.normalization_residual(st, Event(0.5, 0, 0, 0)), 1e-14);
    EXPECT_LT(v.factorization_residual(Hypersurface::slice(kRegion, 0.3)), 1e-14);
    const VolumeElement past = VolumeElement::standard(Orientation::Past);
    EXPECT_LT(past.factorization_residual(Hypersurface::slice(kRegion, 0.3, Orientation::Past)), 1e-14);
}

TEST(FluxFactorization, AgreesForSmoothFields) {
    const Box box{{0, -1, -1, -1}, {1, 1, 1, 1}};
    const TensorField beta({Slot::Up}, box, [](const Event& e, double* out) {
        out[0] = 1.0 + e[1] * e[2] + std::sin(e[3]);
        out[1] = e[2];
        out[2] = std::cos(e[1]);
        out[3] = e[0] * e[3];
    });
    const FactorizationReport r = flux_factorization(beta, Hypersurface::slice(box, 0.4), {Vec3(-1, -1, -1), 0.25, {8, 8, 8}});
    EXPECT_GT(std::abs(r.lhs), 1.0);
    EXPECT_NEAR(r.lhs, r.rhs, 1e-12 * std::abs(r.lhs));
}

TEST(Quadrature, SimpsonFourthOrderOnMeshHalving) {
    const double exact = std::pow(256.0 / 315.0, 3);
    double prev = std::abs(cube_integral(4) - exact);
    for (int n : {8, 16}) {
        const double err = std::abs(cube_integral(n) - exact);
        EXPECT_GE(prev / err, 8.0) << n;
        prev = err;
    }
}

TEST(MomentumFlux, StaticUnitBody) {
    const ClassicalSpacetime st = flat_spacetime();
    const Tensor P = momentum_flux(static_body(), Hypersurface::slice(kRegion, 0.5), st.op);
    EXPECT_NEAR(P.at({0}), 1.0, 1e-6);
    for (int i = 1; i < 4; ++i) EXPECT_NEAR(P.at({i}), 0.0, 1e-12);
}

TEST(MomentumFlux, ZeroFieldGivesZero) {
    const Tensor P = momentum_flux(static_body().scaled(0.0), Hypersurface::slice(kRegion, 0.5), flat_spacetime().op);
    EXPECT_EQ(P.max_abs(), 0.0);
}

TEST(MomentumFlux, ConservedAcrossSlices) {
    const DerivativeOperator flat = flat_spacetime().op;
    const Tensor P0 = momentum_flux(boosted_body(), Hypersurface::slice(kRegion, 0.0), flat);
    EXPECT_NEAR(P0.at({1}) / P0.at({0}), 0.3, 1e-9);
    for (double t : {0.25, 0.5, 0.75, 1.0})
        EXPECT_LT(max_abs_diff(momentum_flux(boosted_body(), Hypersurface::slice(kRegion, t), flat), P0), 1e-4 * P0.at({0}));
}

TEST(MomentumFlux, SliceMustContainSupport) {
    Hypersurface s = Hypersurface::slice(kRegion, 0.5);
    s.hi = Vec3(0.05, 1, 1);
    EXPECT_THROW(momentum_flux(static_body(), s, flat_spacetime().op), SlicingError);
}

TEST(TotalMass, UnitOnEverySliceAndLinear) {
    const DerivativeOperator flat = flat_spacetime().op;
    for (double t : {0.0, 0.5, 1.0}) {
        const Hypersurface s = Hypersurface::slice(kRegion, t);
        const double m = total_mass(boosted_body(), s, flat);
        EXPECT_NEAR(m, 1.0, 1e-4);
        EXPECT_NEAR(total_mass(boosted_body().scaled(3.0), s, flat), 3.0 * m, 1e-6);
    }
}

TEST(TotalMass, InvariantUnderArbitraryFlatOperator) {
    // Curved spacetime, a rotating accelerating frame as the flat operator.
    const Box region{{-0.1, -3, -3, -3}, {0.6, 3, 3, 3}};
    const GeometrizedModel g = geometrized(point_mass_potential(1.0, region), region);
    IntegratorOptions opt;
    opt.region = region;
    const WorldLine gamma = integrate_geodesic(g.spacetime.op, Event(0, 1, 0, 0), {1, 0, 1, 0}, 0.5, 1e-10, opt);
    const MassMomentumField m = build_dust_body(g.spacetime, gamma, 0.2, BumpProfile::with_mass(0.2));
    const DerivativeOperator frame =
        frame_operator(region, Vec3(0, 0, 0.7), [](double t) { return Vec3(0.3 * std::sin(t), 0.2, 0); });
    const ConstantCobasis basis = standard_cobasis(frame);
    QuadratureOptions q;
    q.intervals = 40;
    double lo = 1e300, hi = -1e300;
    for (double t : {0.0, 0.125, 0.25, 0.375, 0.5}) {
        const double mass = momentum_flux(m, Hypersurface::slice(region, t), basis, q).at({0});
        lo = std::min(lo, mass);
        hi = std::max(hi, mass);
    }
    EXPECT_LT((hi - lo) / hi, 1e-3);
}

TEST(FrameOperator, FlatAndCompatible) {
    const Box region{{0, -1, -1, -1}, {1, 1, 1, 1}};
    const DerivativeOperator frame =
        frame_operator(region, Vec3(0.1, -0.2, 0.7), [](double t) { return Vec3(0.3 * std::sin(t), 0.2, 0); });
    const ClassicalSpacetime st = adapted_spacetime(frame, region);
    const auto ev = sobol_events(region.shrunk(0.05), 200);
    EXPECT_LT(riemann(st, ev).flat_residual, 1e-8);
    EXPECT_LT(check_structure(st, ev).worst(), 1e-12);
}

TEST(AngularMomentumFlux, AntisymmetricAndBalancedAtCenter) {
    const DerivativeOperator flat = flat_spacetime().op;
    const Hypersurface s = Hypersurface::slice(kRegion, 0.4);
    const Tensor J = angular_momentum_flux(static_body(), s, Event(0.4, 0, 0, 0), flat);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            EXPECT_EQ(J.at({a, b}) + J.at({b, a}), 0.0);
            if (b == 0) EXPECT_LT(std::abs(J.at({a, 0})), 1e-5);
        }
    const Tensor off = angular_momentum_flux(static_body(), s, Event(0.4, 0.5, 0, 0), flat);
    // J^10 = 1/2 (chi^1 rho - chi^0 p^1) with chi^1 = -0.5 and unit mass
    EXPECT_NEAR(off.at({1, 0}), -0.25, 1e-6);
}

TEST(AngularMomentumFlux, ConservedAcrossSlices) {
    const DerivativeOperator flat = flat_spacetime().op;
    const Event p(0.0, 0.2, -0.3, 0.1);
    const Tensor J0 = angular_momentum_flux(boosted_body(), Hypersurface::slice(kRegion, 0.0), p, flat);
    EXPECT_GT(J0.max_abs(), 0.1);
    for (double t : {0.5, 1.0})
        EXPECT_LT(max_abs_diff(angular_momentum_flux(boosted_body(), Hypersurface::slice(kRegion, t), p, flat), J0), 1e-4);
}

TEST(Cobasis, RotatedBasisGivesSameVectors) {
    const DerivativeOperator flat = flat_spacetime().op;
    const ConstantCobasis standard = standard_cobasis(flat);
    const ConstantCobasis rotated{standard.chart, rotation_mix()};
    const Hypersurface s = Hypersurface::slice(kRegion, 0.6);
    EXPECT_LT(max_abs_diff(momentum_flux(boosted_body(), s, standard), momentum_flux(boosted_body(), s, rotated)), 1e-10);
    const Event p(0.6, 0.1, 0.4, -0.2);
    EXPECT_LT(max_abs_diff(angular_momentum_flux(boosted_body(), s, p, standard),
                           angular_momentum_flux(boosted_body(), s, p, rotated)),
              1e-10);
}

TEST(PositionField, VanishesAtBaseAndIsCoordinateDifference) {
    const DerivativeOperator flat = flat_spacetime().op;
    const Event p(0.3, 0.1, -0.2, 0.5);
    const PositionField chi(AffineChart(flat, default_anchor(flat)), p);
    EXPECT_LT(chi(p).norm(), 1e-14);
    const Event q(0.8, -0.4, 0.3, 0.2);
    for (int a = 0; a < 4; ++a) EXPECT_NEAR(chi(q)(a), q[a] - p[a], 1e-12);
}

TEST(PositionField, CovariantlyIdentityUnderFrameOperator) {
    const Box region{{0, -1, -1, -1}, {1, 1, 1, 1}};
    const DerivativeOperator frame = frame_operator(region, Vec3(0, 0, 0.5), [](double) { return Vec3(0.1, 0, 0); });
    const PositionField chi(AffineChart(frame, Event(0.5, 0, 0, 0)), Event(0.4, 0.1, 0.1, 0));
    const TensorField d = covariant_derivative(frame, chi.field());
    for (const Event& e : sobol_events(region.shrunk(0.2), 30)) {
        const Tensor v = d(e);  // slots {Down, Up}: nabla_a chi^b
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) EXPECT_NEAR(v.at({a, b}), a == b ? 1.0 : 0.0, 1e-6);
    }
}

TEST(CenterOfMass, OnAxisForSymmetricBody) {
    const DerivativeOperator flat = flat_spacetime().op;
    const Event q = center_of_mass(static_body(), Hypersurface::slice(kRegion, 0.7), flat);
    EXPECT_DOUBLE_EQ(q[0], 0.7);
    for (int i = 1; i < 4; ++i) EXPECT_NEAR(q[i], 0.0, 1e-5);
}

TEST(CenterOfMass, FollowsTranslation) {
    const DerivativeOperator flat = flat_spacetime().op;
    const MassMomentumField moved = body(Event(0, 1, 2, 3), {1, 0, 0, 0});
    const Hypersurface s = Hypersurface::slice(kRegion, 0.5);
    const Event a = center_of_mass(static_body(), s, flat);
    const Event b = center_of_mass(moved, s, flat);
    EXPECT_NEAR(b[1] - a[1], 1.0, 1e-5);
    EXPECT_NEAR(b[2] - a[2], 2.0, 1e-5);
    EXPECT_NEAR(b[3] - a[3], 3.0, 1e-5);
}

TEST(CenterOfMass, IndependentOfOriginAndInsideHull) {
    const ConstantCobasis basis = standard_cobasis(flat_spacetime().op);
    const Hypersurface s = Hypersurface::slice(kRegion, 0.5);
    const CenterOfMass ref = center_of_mass_report(boosted_body(), s, basis);
    EXPECT_LT(ref.j_residual, com_tolerance(s));
    EXPECT_LE(ref.hull_distance, 1e-9);
    for (const Event& o : {Event(0.5, 0, 0, 0), Event(0.5, 1, -1, 0.5), Event(0.5, -1.2, 0.3, 2), Event(0.5, 3, 3, 3),
                           Event(0.5, 0.15, 0.05, -0.05)}) {
        const CenterOfMass c = center_of_mass_report(boosted_body(), s, basis, {}, o);
        for (int i = 1; i < 4; ++i) EXPECT_NEAR(c.point[i], ref.point[i], 1e-6);
    }
}

TEST(ComWorldline, BoostedTrackIsStraightWithSlope) {
    const ConstantCobasis basis = standard_cobasis(flat_spacetime().op);
    const WorldLine w = com_worldline(boosted_body(), {0.0, 0.25, 0.5, 0.75, 1.0}, kRegion, basis);
    ASSERT_EQ(w.size(), 5u);
    for (const CurveSample& c : w.samples()) {
        EXPECT_NEAR(c.x[1], 0.3 * c.x[0], 1e-5);
        EXPECT_NEAR(c.xi[1] / c.xi[0], 0.3, 1e-4);
    }
}

TEST(JDerivative, StaticBodyResidualsSmall) {
    const ConstantCobasis basis = standard_cobasis(flat_spacetime().op);
    const JDerivativeReport r = check_J_derivative(static_body(), kRegion, basis,
                                                   {Event(0.5, 0, 0, 0), Event(0.5, 0.3, -0.2, 0.1)});
    EXPECT_LT(r.j_residual, 1e-4);
    EXPECT_LT(r.p_residual, 1e-4);
}

TEST(Stokes, BoundaryFormMatchesSliceDifference) {
    const StokesReport r = stokes_check(boosted_body(), kRegion, 0.0, 1.0);
    EXPECT_LT(r.difference.cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_LT(r.boundary_form.cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_LT(r.consistency, 1e-4);
}

TEST(ConvexHull, CubeMembership) {
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 8; ++i) pts.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
    pts.emplace_back(0.5, 0.5, 0.5);
    const ConvexHull h(pts);
    EXPECT_TRUE(h.contains({0.5, 0.2, 0.9}));
    EXPECT_TRUE(h.contains({1.0, 1.0, 1.0}));
    EXPECT_FALSE(h.contains({1.01, 0.5, 0.5}));
    EXPECT_NEAR(h.signed_distance({1.5, 0.5, 0.5}), 0.5, 1e-12);
    EXPECT_NEAR(h.signed_distance({0.5, 0.5, 0.5}), -0.5, 1e-12);
    EXPECT_EQ(h.faces().size(), 12u);
}

TEST(ConvexHull, RejectsDegenerateInput) {
    EXPECT_THROW(ConvexHull({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}), PreconditionError);
    EXPECT_THROW(ConvexHull({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}), PreconditionError);
}
