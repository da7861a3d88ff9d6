#include "nclab/trautman.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "nclab/errors.hpp"
#include "nclab/sampling.hpp"

namespace nclab {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
const Valence kScalar = {};
const Valence kCovector = {Slot::Down};
const Valence kForm2 = {Slot::Down, Slot::Down};
const Valence kConnection = {Slot::Up, Slot::Down, Slot::Down};
const Valence kConnectionDerivative = {Slot::Down, Slot::Up, Slot::Down, Slot::Down};

double radius(const Event& e) { return std::sqrt(e[1] * e[1] + e[2] * e[2] + e[3] * e[3]); }

void require_outside(const Event& e, double r_min) {
    if (radius(e) < r_min) throw DomainError("potential evaluated inside its singular radius");
}

// Scalar potential with gradient and Hessian chained as exact derivatives.
TensorField potential_field(const Box& region, std::function<double(const Event&)> value,
                            std::function<void(const Event&, double*)> grad,
                            std::function<void(const Event&, double*)> hess, bool zero_third) {
    TensorField h(kForm2, region, [hess](const Event& e, double* out) { hess(e, out); });
    if (zero_third) h = h.with_derivative(TensorField::zero({Slot::Down, Slot::Down, Slot::Down}, region));
    TensorField g = TensorField(kCovector, region, [grad](const Event& e, double* out) { grad(e, out); })
                        .with_derivative(h);
    return TensorField(kScalar, region, [value](const Event& e, double* out) { out[0] = value(e); })
        .with_derivative(g);
}

TensorField constant_scalar(double v, const Box& region) { return TensorField::constant(Tensor::scalar(v), region); }

void require_adapted(const ClassicalSpacetime& st) {
    const Event e(std::array<double, 4>{0.5 * (st.region.lo[0] + st.region.hi[0]),
                                        0.5 * (st.region.lo[1] + st.region.hi[1]),
                                        0.5 * (st.region.lo[2] + st.region.hi[2]),
                                        0.5 * (st.region.lo[3] + st.region.hi[3])});
    std::array<double, 4> t;
    std::array<double, 16> h;
    st.temporal_metric.evaluate(e, t.data());
    st.spatial_metric.evaluate(e, h.data());
    for (int a = 0; a < 4; ++a) {
        if (t[static_cast<std::size_t>(a)] != (a == 0 ? 1.0 : 0.0)) {
            throw PreconditionError("construction requires the adapted chart");
        }
        for (int b = 0; b < 4; ++b) {
            if (h[static_cast<std::size_t>(a * 4 + b)] != (a == b && a != 0 ? 1.0 : 0.0)) {
                throw PreconditionError("construction requires the adapted chart");
            }
        }
    }
}

// Difference field sign * t_b t_c h^an G_n from a covector field G whose exact
// derivative is used when attached (adapted chart: t and h constant).
TensorField temporal_pair_field(const TensorField& G, double sign) {
    const TensorField dG = derivative_field(G);
    TensorField dC(kConnectionDerivative, G.box(), [dG, sign](const Event& e, double* out) {
        std::array<double, 16> H;
        dG.evaluate(e, H.data());
        std::fill(out, out + 256, 0.0);
        for (int d = 0; d < 4; ++d)
            for (int a = 1; a < 4; ++a) out[d * 64 + ci(a, 0, 0)] = sign * H[static_cast<std::size_t>(d * 4 + a)];
    });
    return TensorField(kConnection, G.box(),
                       [G, sign](const Event& e, double* out) {
                           std::array<double, 4> g;
                           G.evaluate(e, g.data());
                           std::fill(out, out + 64, 0.0);
                           for (int a = 1; a < 4; ++a) out[ci(a, 0, 0)] = sign * g[static_cast<std::size_t>(a)];
                       })
        .with_derivative(dC);
}

// Rotation-and-acceleration part of the reference operator built from
// kappa_ab = hhat_n[b nabla_a] eta^n with eta = (1,0,0,0):
//   out^a_bc = h^am (t_b kappa_cm + t_c kappa_bm)
void reference_correction(const double* C, double* out) {
    double D[4][4];  // nabla_a eta^n = -C^n_a0
    for (int a = 0; a < 4; ++a)
        for (int n = 0; n < 4; ++n) D[a][n] = -C[ci(n, a, 0)];
    double kappa[4][4];
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) kappa[a][b] = 0.5 * ((b ? D[a][b] : 0.0) - (a ? D[b][a] : 0.0));
    std::fill(out, out + 64, 0.0);
    for (int a = 1; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) {
                out[ci(a, b, c)] = (b == 0 ? kappa[c][a] : 0.0) + (c == 0 ? kappa[b][a] : 0.0);
            }
}

}  // namespace

Potential zero_potential(const Box& region) {
    auto phi = potential_field(
        region, [](const Event&) { return 0.0; }, [](const Event&, double* g) { std::fill(g, g + 4, 0.0); },
        [](const Event&, double* h) { std::fill(h, h + 16, 0.0); }, true);
    return {"zero", phi, constant_scalar(0.0, region), 0.0};
}

Potential harmonic_potential(double k, const Box& region) {
    auto phi = potential_field(
        region, [k](const Event& e) { return k * (e[1] * e[1] + e[2] * e[2] + e[3] * e[3]); },
        [k](const Event& e, double* g) {
            g[0] = 0.0;
            for (int i = 1; i < 4; ++i) g[i] = 2.0 * k * e[i];
        },
        [k](const Event&, double* h) {
            std::fill(h, h + 16, 0.0);
            for (int i = 1; i < 4; ++i) h[i * 5] = 2.0 * k;
        },
        true);
    return {"harmonic", phi, constant_scalar(6.0 * k / kFourPi, region), 0.0};
}

Potential point_mass_potential(double mass, const Box& region, double singular_radius) {
    auto phi = potential_field(
        region,
        [mass, singular_radius](const Event& e) {
            require_outside(e, singular_radius);
            return -mass / radius(e);
        },
        [mass, singular_radius](const Event& e, double* g) {
            require_outside(e, singular_radius);
            const double r = radius(e);
            const double r3 = r * r * r;
            g[0] = 0.0;
            for (int i = 1; i < 4; ++i) g[i] = mass * e[i] / r3;
        },
        [mass, singular_radius](const Event& e, double* h) {
            require_outside(e, singular_radius);
            const double r2 = e[1] * e[1] + e[2] * e[2] + e[3] * e[3];
            const double r5 = r2 * r2 * std::sqrt(r2);
            std::fill(h, h + 16, 0.0);
            for (int i = 1; i < 4; ++i)
                for (int j = 1; j < 4; ++j) h[i * 4 + j] = mass * ((i == j ? r2 : 0.0) - 3.0 * e[i] * e[j]) / r5;
        },
        false);
    return {"point_mass", phi, constant_scalar(0.0, region), singular_radius};
}

Potential uniform_potential(double g, const Box& region) {
    auto phi = potential_field(
        region, [g](const Event& e) { return g * e[3]; },
        [g](const Event&, double* out) {
            std::fill(out, out + 4, 0.0);
            out[3] = g;
        },
        [](const Event&, double* h) { std::fill(h, h + 16, 0.0); }, true);
    return {"uniform", phi, constant_scalar(0.0, region), 0.0};
}

NewtonianModel newtonian_model(const Potential& p, const DerivativeOperator& flat, const Box& region) {
    return {adapted_spacetime(flat, region), p.phi, p.density, p.singular_radius};
}

std::vector<Event> working_events(const Box& region, double singular_radius, std::size_t n, std::uint64_t skip) {
    std::vector<Event> out;
    std::uint64_t cursor = skip;
    while (out.size() < n) {
        for (const Event& e : sobol_events(region, n, cursor)) {
            if (radius(e) >= 2.0 * singular_radius && out.size() < n) out.push_back(e);
        }
        cursor += n;
        if (cursor - skip > 64 * n) throw PreconditionError("region lies inside the singular radius");
    }
    return out;
}

double poisson_residual(const NewtonianModel& m, std::span<const Event> events) {
    const TensorField hess = covariant_derivative(m.spacetime.op, covariant_derivative(m.spacetime.op, m.phi));
    double worst = 0.0;
    for (const Event& e : events) {
        const Tensor H = hess(e);
        const Tensor h = m.spacetime.spatial_metric(e);
        double lap = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) lap += h.at({a, b}) * H.at({a, b});
        worst = std::max(worst, std::abs(lap - kFourPi * m.density(e).value()));
    }
    return worst;
}

GeometrizedModel geometrize(const NewtonianModel& m, std::span<const Event> events, double tolerance) {
    require_adapted(m.spacetime);
    const double res = poisson_residual(m, events);
    if (!(res <= tolerance)) {
        throw PreconditionError("potential and density violate Poisson's equation (residual " + std::to_string(res) +
                                ")");
    }
    const TensorField C = temporal_pair_field(derivative_field(m.phi), -1.0);
    const DerivativeOperator op = compose_operators(m.spacetime.op, C);
    ClassicalSpacetime st = m.spacetime;
    st.op = op;
    return {st, m.density, m.singular_radius};
}

double TrautmanReport::worst() const { return std::max({ricci_source, pair_symmetry, newtonian}); }

TrautmanReport check_trautman(const GeometrizedModel& g, std::span<const Event> events) {
    const CurvatureReport cr = riemann(g.spacetime, events);
    TrautmanReport rep;
    rep.pair_symmetry = cr.pair_symmetry_residual;
    rep.newtonian = cr.newtonian_residual;
    for (const Event& e : events) {
        const Tensor ric = cr.ricci(e);
        const Tensor t = g.spacetime.temporal_metric(e);
        const double rho = g.density(e).value();
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                const double d = ric.at({a, b}) - kFourPi * rho * t.at({a}) * t.at({b});
                rep.ricci_source = std::max(rep.ricci_source, std::abs(d));
            }
    }
    return rep;
}

NewtonianModel recover(const GeometrizedModel& g, const Event& anchor, const RecoveryOptions& opt) {
    require_adapted(g.spacetime);
    const Box region = opt.region;
    if (!region.contains(anchor)) throw PreconditionError("anchor outside the recovery region");
    const TrautmanReport cc = check_trautman(g, opt.curl_events);
    if (!(cc.worst() <= opt.tolerance)) throw RecoveryError("curvature conditions fail on the recovery region");

    const DerivativeOperator op = g.spacetime.op;
    // a^b = -C^b_00, the acceleration of the adapted observers
    for (const Event& e : opt.curl_events) {
        ConnectionDerivative dC;
        op.connection_derivative(e, dC.data());
        for (int i = 1; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) {
                const double curl = dC[i * 64 + ci(j, 0, 0)] - dC[j * 64 + ci(i, 0, 0)];
                if (!(std::abs(curl) <= opt.tolerance)) {
                    throw RecoveryError("acceleration field is not curl-free on the recovery region");
                }
            }
    }

    // Integrates component `deriv` (-1: a itself, 0: d_t a) along the three legs.
    auto line_integral = [op, anchor, region, tol = opt.line_tolerance](const Event& e, int deriv) {
        if (!region.contains(e)) throw DomainError("recovered potential evaluated outside its region");
        double total = 0.0;
        std::array<double, 4> p{e[0], anchor[1], anchor[2], anchor[3]};
        for (int axis = 1; axis < 4; ++axis) {
            const double from = anchor[axis];
            const double to = e[axis];
            if (from != to) {
                auto f = [&](double s) {
                    Event q(p);
                    q[axis] = s;
                    if (deriv < 0) {
                        Connection C;
                        op.connection(q, C.data());
                        return -C[ci(axis, 0, 0)];
                    }
                    ConnectionDerivative dC;
                    op.connection_derivative(q, dC.data());
                    return -dC[static_cast<std::size_t>(deriv) * 64 + ci(axis, 0, 0)];
                };
                total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, from, to, 15, tol);
            }
            p[static_cast<std::size_t>(axis)] = to;
        }
        return total;
    };

    const double h_t = 1e-4 * std::max(1.0, region.extent());
    TensorField time_rate(kScalar, region, [line_integral](const Event& e, double* out) { out[0] = line_integral(e, 0); });
    TensorField hess(kForm2, region, [op, time_rate, h_t](const Event& e, double* out) {
        ConnectionDerivative dC;
        op.connection_derivative(e, dC.data());
        for (int d = 0; d < 4; ++d)
            for (int a = 0; a < 4; ++a) out[d * 4 + a] = a == 0 ? 0.0 : -dC[d * 64 + ci(a, 0, 0)];
        for (int a = 1; a < 4; ++a) out[a * 4] = out[a];
        // d_t d_t phi: only reachable through h-contractions that vanish; kept for completeness
        double v[4];
        const double offs[4] = {-2, -1, 1, 2};
        for (int k = 0; k < 4; ++k) {
            Event q = e;
            q[0] += offs[k] * h_t;
            q[0] = std::clamp(q[0], time_rate.box().lo[0], time_rate.box().hi[0]);
            time_rate.evaluate(q, &v[k]);
        }
        out[0] = (v[0] - 8 * v[1] + 8 * v[2] - v[3]) / (12 * h_t);
    });
    TensorField grad = TensorField(kCovector, region,
                                   [op, time_rate](const Event& e, double* out) {
                                       Connection C;
                                       op.connection(e, C.data());
                                       time_rate.evaluate(e, out);
                                       for (int a = 1; a < 4; ++a) out[a] = -C[ci(a, 0, 0)];
                                   })
                           .with_derivative(hess);
    TensorField phi =
        TensorField(kScalar, region, [line_integral](const Event& e, double* out) { out[0] = line_integral(e, -1); })
            .with_derivative(grad);
    TensorField rho(kScalar, region, [op](const Event& e, double* out) {
        ConnectionDerivative dC;
        op.connection_derivative(e, dC.data());
        double div = 0.0;
        for (int i = 1; i < 4; ++i) div -= dC[i * 64 + ci(i, 0, 0)];
        out[0] = div / kFourPi;
    });

    // Flat operator: C_g + t_b t_c a^a
    const DerivativeOperator flat = compose_operators(op, temporal_pair_field(grad, 1.0));
    return {adapted_spacetime(flat, g.spacetime.region), phi, rho, g.singular_radius};
}

DerivativeOperator flat_operator_on_curve(const ClassicalSpacetime& st, const WorldLine& curve, double tolerance) {
    require_adapted(st);
    if (curve.size() < 2) throw PreconditionError("curve needs at least two samples");
    std::vector<Event> on_curve;
    for (const auto& c : curve.samples()) {
        if (std::abs(c.xi[0]) <= kTimelikeThreshold) throw PreconditionError("curve is not timelike");
        on_curve.push_back(c.x);
    }
    curve.parameter_at_time(curve.samples().front().x[0]);  // throws when a slice is met twice
    const CurvatureReport cr = riemann(st, on_curve);
    if (!(cr.newtonian_residual <= tolerance)) {
        throw PreconditionError("spacetime is not Newtonian along the curve (R^ab_cd does not vanish)");
    }

    const DerivativeOperator op = st.op;
    auto psi = [op, curve](double t, double* out) {
        Connection C, C1;
        op.connection(curve.at_time(t), C.data());
        reference_correction(C.data(), C1.data());
        for (int a = 0; a < 4; ++a) out[a] = -C1[ci(a, 0, 0)];
    };
    auto psi_rate = [op, curve](double t, double* out) {
        const Vec4 v = curve.velocity_at_time(t);
        ConnectionDerivative dC;
        op.connection_derivative(curve.at_time(t), dC.data());
        std::fill(out, out + 4, 0.0);
        for (int m = 0; m < 4; ++m) {
            Connection C1;
            reference_correction(dC.data() + m * 64, C1.data());
            for (int a = 0; a < 4; ++a) out[a] -= C1[ci(a, 0, 0)] * v[static_cast<std::size_t>(m)];
        }
    };

    Box box = st.op.box();
    box.lo[0] = std::max(box.lo[0], curve.samples().front().x[0]);
    box.hi[0] = std::min(box.hi[0], curve.samples().back().x[0]);

    TensorField dC(kConnectionDerivative, box, [op, psi_rate](const Event& e, double* out) {
        op.connection_derivative(e, out);
        for (int n = 0; n < 4; ++n) {
            Connection C1;
            reference_correction(out + n * 64, C1.data());
            for (std::size_t k = 0; k < 64; ++k) out[static_cast<std::size_t>(n) * 64 + k] += C1[k];
        }
        double rate[4];
        psi_rate(e[0], rate);
        for (int a = 0; a < 4; ++a) out[ci(a, 0, 0)] += rate[a];
    });
    TensorField C(kConnection, box, [op, psi](const Event& e, double* out) {
        op.connection(e, out);
        Connection C1;
        reference_correction(out, C1.data());
        for (std::size_t k = 0; k < 64; ++k) out[k] += C1[k];
        double p[4];
        psi(e[0], p);
        for (int a = 0; a < 4; ++a) out[ci(a, 0, 0)] += p[a];
    });
    return DerivativeOperator(C.with_derivative(dC));
}

}  // namespace nclab
