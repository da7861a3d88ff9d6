#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nclab/errors.hpp"
#include "nclab/field.hpp"
#include "nclab/tensor.hpp"

using namespace nclab;

namespace {

const Box kBox{{-5, -5, -5, -5}, {5, 5, 5, 5}};

Tensor random_tensor(Valence v, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    Tensor t(std::move(v));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
    return t;
}

TensorField scalar_field(std::function<double(const Event&)> f) {
    return TensorField({}, kBox, [f](const Event& e, double* out) { out[0] = f(e); });
}

}  // namespace

TEST(Contract, TraceOfIdentityIsFour) {
    EXPECT_DOUBLE_EQ(contract(Tensor::identity(), 0, 1).value(), 4.0);
}

TEST(Contract, UnitTimelikeNormalization) {
    const Tensor xi = Tensor::vector({1, 0, 0, 0});
    const Tensor t = Tensor::covector({1, 0, 0, 0});
    EXPECT_DOUBLE_EQ(contract(outer(xi, t), 0, 1).value(), 1.0);
}

TEST(Contract, VolumeNormalization) {
    // eps_abcd eps_efgh h^bf h^cg h^dh = 6 t_a t_e in the adapted chart.
    const Tensor eps = levi_civita();
    Tensor h({Slot::Up, Slot::Up});
    for (int i = 1; i < 4; ++i) h.at({i, i}) = 1.0;
    // Raise b, c, d one at a time (rank stays within the limit), then pair
    // the raised slots with the second factor explicitly.
    Tensor up = contract(outer(eps, h), 4, 1);  // a c d f
    up = contract(outer(up, h), 4, 1);          // a d f g
    up = contract(outer(up, h), 4, 1);          // a f g h
    Tensor acc({Slot::Down, Slot::Down});
    for (int a = 0; a < 4; ++a)
        for (int e = 0; e < 4; ++e)
            for (int f = 0; f < 4; ++f)
                for (int g = 0; g < 4; ++g)
                    for (int k = 0; k < 4; ++k) acc.at({a, e}) += up.at({a, f, g, k}) * eps.at({e, f, g, k});
    ASSERT_EQ(acc.rank(), 2u);
    for (int a = 0; a < 4; ++a)
        for (int e = 0; e < 4; ++e) EXPECT_NEAR(acc.at({a, e}), (a == 0 && e == 0) ? 6.0 : 0.0, 1e-14);
}

TEST(Contract, RejectsMismatchedSlots) {
    const Tensor t = outer(Tensor::vector({1, 2, 3, 4}), Tensor::vector({1, 0, 0, 0}));
    EXPECT_THROW(contract(t, 0, 1), SlotError);
    EXPECT_THROW(contract(Tensor::identity(), 0, 5), SlotError);
}

TEST(Contract, IsLinear) {
    std::mt19937_64 rng(7);
    const Valence v{Slot::Up, Slot::Down, Slot::Down, Slot::Up};
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor x = random_tensor(v, rng);
        const Tensor y = random_tensor(v, rng);
        const double a = 1.7, b = -0.4;
        const Tensor lhs = contract(a * x + b * y, 3, 1);
        const Tensor rhs = a * contract(x, 3, 1) + b * contract(y, 3, 1);
        EXPECT_LT(max_abs_diff(lhs, rhs), 1e-14);
    }
}

TEST(Antisymmetrize, KillsSymmetricTensor) {
    std::mt19937_64 rng(1);
    Tensor s = random_tensor({Slot::Down, Slot::Down}, rng);
    s = symmetrize(s, {0, 1});
    EXPECT_EQ(antisymmetrize(s, {0, 1}).max_abs(), 0.0);
}

TEST(Antisymmetrize, WedgeHasHalfComponents) {
    const Tensor w = antisymmetrize(outer(Tensor::vector({1, 0, 0, 0}), Tensor::vector({0, 1, 0, 0})), {0, 1});
    EXPECT_DOUBLE_EQ(w.at({0, 1}), 0.5);
    EXPECT_DOUBLE_EQ(w.at({1, 0}), -0.5);
    EXPECT_DOUBLE_EQ(w.max_abs(), 0.5);
}

TEST(Antisymmetrize, IsIdempotent) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor t = random_tensor({Slot::Up, Slot::Up, Slot::Up}, rng);
        const Tensor once = antisymmetrize(t, {0, 1, 2});
        EXPECT_LE(max_abs_diff(antisymmetrize(once, {0, 1, 2}), once), 1e-14);
    }
}

TEST(Antisymmetrize, MatchesDirectAlternation) {
    // Oracle: explicit signed sum over the six permutations.
    std::mt19937_64 rng(3);
    const Tensor t = random_tensor({Slot::Down, Slot::Down, Slot::Down}, rng);
    const Tensor a = antisymmetrize(t, {0, 1, 2});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) {
                const double expect = (t.at({i, j, k}) + t.at({j, k, i}) + t.at({k, i, j}) - t.at({j, i, k}) -
                                       t.at({i, k, j}) - t.at({k, j, i})) /
                                      6.0;
                EXPECT_NEAR(a.at({i, j, k}), expect, 1e-15);
            }
}

TEST(Antisymmetrize, RejectsMixedSlots) {
    EXPECT_THROW(antisymmetrize(Tensor::identity(), {0, 1}), SlotError);
}

TEST(PartialDerivative, ConstantFieldGivesZero) {
    const TensorField f = TensorField::constant(Tensor::vector({1, 2, 3, 4}), kBox);
    const Tensor d = partial_derivative(f, Event(0, 0.5, 0, 0), 0.1);
    EXPECT_EQ(d.rank(), 2u);
    EXPECT_EQ(d.slot(0), Slot::Down);
    EXPECT_EQ(d.max_abs(), 0.0);
}

TEST(PartialDerivative, ExactForQuadratic) {
    const TensorField f = scalar_field([](const Event& e) { return e[1] * e[1]; });
    const Tensor d = partial_derivative(f, Event(0, 3, 0, 0), 0.1);
    EXPECT_NEAR(d.at({1}), 6.0, 1e-10);
    EXPECT_NEAR(d.at({0}), 0.0, 1e-10);
}

TEST(PartialDerivative, SineMatchesCosine) {
    const TensorField f = scalar_field([](const Event& e) { return std::sin(e[1]); });
    EXPECT_NEAR(partial_derivative(f, Event(0, 0, 0, 0), 0.05).at({1}), 1.0, 1e-6);
}

TEST(PartialDerivative, FourthOrderOnHalving) {
    const TensorField s = scalar_field([](const Event& e) { return std::sin(e[1]) * std::exp(0.5 * e[2]); });
    const Event e(0, 0.4, 0.3, 0);
    const double exact = std::cos(0.4) * std::exp(0.15);
    double prev = std::abs(partial_derivative(s, e, 0.2).at({1}) - exact);
    for (double h : {0.1, 0.05}) {
        const double err = std::abs(partial_derivative(s, e, h).at({1}) - exact);
        EXPECT_GE(prev / err, 12.0) << "step " << h;
        prev = err;
    }
}

TEST(PartialDerivative, StencilLeavingBoxThrows) {
    const TensorField f = scalar_field([](const Event& e) { return e[1]; });
    EXPECT_THROW(partial_derivative(f, Event(0, 4.95, 0, 0), 0.1), DomainError);
}

TEST(TensorField, SampledFieldRecordsSpacing) {
    const TensorField f = scalar_field([](const Event& e) { return e[1] * e[2]; });
    const TensorField g = TensorField::sampled(f, Lattice{Box{{-1, -1, -1, -1}, {1, 1, 1, 1}}, {5, 9, 9, 9}});
    EXPECT_EQ(g.backend(), Backend::Grid);
    EXPECT_GT(g.spacing(), 0.0);
    EXPECT_NEAR(g(Event(0, 0.3, 0.2, 0)).value(), 0.06, 1e-12);
}
