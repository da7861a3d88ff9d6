#include "nclab/spacetime.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "nclab/errors.hpp"
#include "nclab/sampling.hpp"

namespace nclab {

namespace {

const Valence kConnectionValence = {Slot::Up, Slot::Down, Slot::Down};

std::size_t pow4(std::size_t k) { return std::size_t{1} << (2 * k); }

double sup_over(std::span<const Event> events, const TensorField& f) {
    double m = 0.0;
    std::vector<double> buf(f.components());
    for (const Event& e : events) {
        f.evaluate(e, buf.data());
        for (double v : buf) m = std::max(m, std::abs(v));
    }
    return m;
}

}  // namespace

DerivativeOperator::DerivativeOperator(TensorField difference_field) : c_(std::move(difference_field)) {
    if (c_.valence() != kConnectionValence) throw SlotError("difference field must have valence (1,2)");
}

DerivativeOperator DerivativeOperator::coordinate(const Box& box) {
    DerivativeOperator op(TensorField::zero(kConnectionValence, box));
    op.coordinate_ = true;
    return op;
}

void DerivativeOperator::connection(const Event& e, double* C) const {
    if (coordinate_) {
        std::fill(C, C + 64, 0.0);
        return;
    }
    c_.evaluate(e, C);
}

void DerivativeOperator::connection_derivative(const Event& e, double* dC) const {
    if (coordinate_) {
        std::fill(dC, dC + 256, 0.0);
        return;
    }
    if (c_.has_exact_derivative()) {
        c_.exact_derivative().evaluate(e, dC);
    } else {
        partial_derivative_into(c_, e, default_step(c_), dC);
    }
}

DerivativeOperator compose_operators(const DerivativeOperator& op, const TensorField& extra) {
    if (extra.valence() != kConnectionValence) throw SlotError("extra field must have valence (1,2)");
    Connection c{};
    // Sobol points skip the box center, where singular sources tend to sit.
    for (const Event& e : sobol_events(extra.box(), 16, 1)) {
        try {
            extra.evaluate(e, c.data());
        } catch (const DomainError&) {
            continue;
        }
        double scale = 1.0;
        for (double v : c) scale = std::max(scale, std::abs(v));
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int d = b + 1; d < 4; ++d) {
                    if (std::abs(c[ci(a, b, d)] - c[ci(a, d, b)]) > 1e-12 * scale) {
                        throw PreconditionError("extra difference field is not symmetric in its lower slots");
                    }
                }
    }
    if (op.is_coordinate()) return DerivativeOperator(extra);
    return DerivativeOperator(op.difference_field().plus(extra));
}

ClassicalSpacetime adapted_spacetime(const DerivativeOperator& op, const Box& region) {
    Tensor h({Slot::Up, Slot::Up});
    for (int i = 1; i < 4; ++i) h.at({i, i}) = 1.0;
    return ClassicalSpacetime{TensorField::constant(Tensor::covector({1, 0, 0, 0}), region),
                              TensorField::constant(h, region), op, region};
}

TensorField covariant_derivative(const DerivativeOperator& op, const TensorField& f) {
    const Valence& v = f.valence();
    if (v.size() > 5) throw SlotError("covariant derivative needs rank at most 5");
    const TensorField df = derivative_field(f);
    // No correction terms: keep df and any exact derivative chain it carries.
    if (v.empty() || op.is_coordinate()) return df;
    Valence out_v = v;
    out_v.insert(out_v.begin(), Slot::Down);
    Box box = df.box();
    for (std::size_t i = 0; i < 4; ++i) {
        box.lo[i] = std::max(box.lo[i], op.box().lo[i]);
        box.hi[i] = std::min(box.hi[i], op.box().hi[i]);
    }
    const std::size_t r = v.size();
    const std::size_t nf = pow4(r);
    return TensorField(
        out_v, box,
        [op, f, df, v, r, nf](const Event& e, double* out) {
            df.evaluate(e, out);
            if (op.is_coordinate()) return;
            Connection C;
            op.connection(e, C.data());
            std::vector<double> fv(nf);
            f.evaluate(e, fv.data());
            for (std::size_t j = 0; j < r; ++j) {
                const std::size_t shift = 2 * (r - 1 - j);
                for (int n = 0; n < 4; ++n) {
                    double* o = out + static_cast<std::size_t>(n) * nf;
                    for (std::size_t g = 0; g < nf; ++g) {
                        const int a = static_cast<int>((g >> shift) & 3u);
                        const std::size_t base = g - (static_cast<std::size_t>(a) << shift);
                        double acc = 0.0;
                        for (int m = 0; m < 4; ++m) {
                            const double fm = fv[base + (static_cast<std::size_t>(m) << shift)];
                            acc += (v[j] == Slot::Up ? -C[ci(a, n, m)] : C[ci(m, n, a)]) * fm;
                        }
                        o[g] += acc;
                    }
                }
            }
        },
        f.backend());
}

double StructureReport::worst() const {
    return std::max({orthogonality, signature, compat_temporal, compat_spatial});
}

StructureReport check_structure(const ClassicalSpacetime& st, std::span<const Event> events) {
    StructureReport rep;
    rep.min_spatial_eigen = std::numeric_limits<double>::infinity();
    const TensorField dt = covariant_derivative(st.op, st.temporal_metric);
    const TensorField dh = covariant_derivative(st.op, st.spatial_metric);
    for (const Event& e : events) {
        const Tensor t = st.temporal_metric(e);
        const Tensor h = st.spatial_metric(e);
        Eigen::Matrix4d H;
        Eigen::Vector4d tv;
        for (int a = 0; a < 4; ++a) {
            tv(a) = t.at({a});
            for (int b = 0; b < 4; ++b) H(a, b) = h.at({a, b});
        }
        rep.orthogonality = std::max(rep.orthogonality, (H * tv).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(0.5 * (H + H.transpose()));
        const auto& ev = es.eigenvalues();
        rep.signature = std::max(rep.signature, std::abs(ev(0)));
        rep.min_spatial_eigen = std::min(rep.min_spatial_eigen, ev(1));
        if (ev(1) <= kTimelikeThreshold || tv.norm() <= kTimelikeThreshold) rep.signature_ok = false;
    }
    rep.compat_temporal = sup_over(events, dt);
    rep.compat_spatial = sup_over(events, dh);
    return rep;
}

void riemann_components(const double* C, const double* dC, double* R) {
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    double v = dC[c * 64 + ci(a, d, b)] - dC[d * 64 + ci(a, c, b)];
                    for (int n = 0; n < 4; ++n) {
                        v += -C[ci(a, n, c)] * C[ci(n, d, b)] + C[ci(a, n, d)] * C[ci(n, c, b)];
                    }
                    R[ri(a, b, c, d)] = v;
                }
}

namespace {

// All curvature variants at one event from the operator and h.
struct CurvatureAt {
    Curvature R{};
    std::array<double, 16> ricci{};
    std::array<double, 16> ricci_up{};
    std::array<double, 256> all_up{};
    std::array<double, 256> mixed{};
    std::array<double, 256> half_raised{};  // R^a_b^c_d = R^a_bmd h^cm
};

CurvatureAt curvature_at(const DerivativeOperator& op, const TensorField& hfield, const Event& e) {
    CurvatureAt out;
    Connection C;
    ConnectionDerivative dC;
    op.connection(e, C.data());
    op.connection_derivative(e, dC.data());
    riemann_components(C.data(), dC.data(), out.R.data());
    std::array<double, 16> h;
    hfield.evaluate(e, h.data());
    const auto& R = out.R;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            double v = 0.0;
            for (int n = 0; n < 4; ++n) v += R[ri(n, a, b, n)];
            out.ricci[static_cast<std::size_t>(a * 4 + b)] = v;
        }
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            double v = 0.0;
            for (int m = 0; m < 4; ++m)
                for (int n = 0; n < 4; ++n) v += h[a * 4 + m] * h[b * 4 + n] * out.ricci[m * 4 + n];
            out.ricci_up[static_cast<std::size_t>(a * 4 + b)] = v;
        }
    // R^ab_cd = R^a_ncd h^nb
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    double v = 0.0;
                    double w = 0.0;
                    for (int n = 0; n < 4; ++n) {
                        v += R[ri(a, n, c, d)] * h[n * 4 + b];
                        w += R[ri(a, b, n, d)] * h[c * 4 + n];
                    }
                    out.mixed[ri(a, b, c, d)] = v;
                    out.half_raised[ri(a, b, c, d)] = w;
                }
    // R^abcd = R^ab_md h^cm raised once more on d
    std::array<double, 256> tmp{};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    double v = 0.0;
                    for (int m = 0; m < 4; ++m) v += out.mixed[ri(a, b, m, d)] * h[c * 4 + m];
                    tmp[ri(a, b, c, d)] = v;
                }
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    double v = 0.0;
                    for (int m = 0; m < 4; ++m) v += tmp[ri(a, b, c, m)] * h[d * 4 + m];
                    out.all_up[ri(a, b, c, d)] = v;
                }
    return out;
}

template <class Pick>
TensorField curvature_field(const ClassicalSpacetime& st, Valence v, Pick pick) {
    const DerivativeOperator op = st.op;
    const TensorField h = st.spatial_metric;
    return TensorField(std::move(v), st.region, [op, h, pick](const Event& e, double* out) {
        const CurvatureAt c = curvature_at(op, h, e);
        pick(c, out);
    });
}

double max_abs(const double* p, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(p[i]));
    return m;
}

}  // namespace

CurvatureReport riemann(const ClassicalSpacetime& st, std::span<const Event> samples) {
    using S = Slot;
    auto copy = [](const auto& arr, double* out) { std::copy(arr.begin(), arr.end(), out); };
    CurvatureReport rep{
        curvature_field(st, {S::Up, S::Down, S::Down, S::Down}, [copy](const CurvatureAt& c, double* o) { copy(c.R, o); }),
        curvature_field(st, {S::Down, S::Down}, [copy](const CurvatureAt& c, double* o) { copy(c.ricci, o); }),
        curvature_field(st, {S::Up, S::Up}, [copy](const CurvatureAt& c, double* o) { copy(c.ricci_up, o); }),
        curvature_field(st, {S::Up, S::Up, S::Up, S::Up}, [copy](const CurvatureAt& c, double* o) { copy(c.all_up, o); }),
        curvature_field(st, {S::Up, S::Up, S::Down, S::Down}, [copy](const CurvatureAt& c, double* o) { copy(c.mixed, o); }),
    };
    for (const Event& e : samples) {
        const CurvatureAt c = curvature_at(st.op, st.spatial_metric, e);
        rep.flat_residual = std::max(rep.flat_residual, max_abs(c.R.data(), 256));
        rep.spatial_flat_residual = std::max(rep.spatial_flat_residual, max_abs(c.all_up.data(), 256));
        rep.newtonian_residual = std::max(rep.newtonian_residual, max_abs(c.mixed.data(), 256));
        rep.ricci_raised_residual = std::max(rep.ricci_raised_residual, max_abs(c.ricci_up.data(), 16));
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int cc = 0; cc < 4; ++cc)
                    for (int d = 0; d < 4; ++d) {
                        // R^a_[bcd] reduces to the cyclic sum given antisymmetry in cd
                        const double cyc = c.R[ri(a, b, cc, d)] + c.R[ri(a, cc, d, b)] + c.R[ri(a, d, b, cc)];
                        rep.bianchi_residual = std::max(rep.bianchi_residual, std::abs(cyc) / 3.0);
                        const double pair = c.half_raised[ri(a, b, cc, d)] - c.half_raised[ri(cc, d, a, b)];
                        rep.pair_symmetry_residual = std::max(rep.pair_symmetry_residual, std::abs(pair));
                    }
    }
    return rep;
}

VectorClass classify_vector(const ClassicalSpacetime& st, const Event& e, const Tensor& v, double tol) {
    if (v.slots() != Valence{Slot::Up}) throw SlotError("classify_vector expects a (1,0) tensor");
    const Tensor t = st.temporal_metric(e);
    double tv = 0.0;
    for (int a = 0; a < 4; ++a) tv += t.at({a}) * v.at({a});
    if (std::abs(tv) > kTimelikeThreshold) return {VectorKind::Timelike, std::abs(tv), std::nullopt};

    const Tensor h = st.spatial_metric(e);
    Eigen::Matrix4d H;
    Eigen::Vector4d rhs;
    for (int a = 0; a < 4; ++a) {
        rhs(a) = v.at({a});
        for (int b = 0; b < 4; ++b) H(a, b) = h.at({a, b});
    }
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-10);
    const Eigen::Vector4d sigma = svd.solve(rhs);
    if ((H * sigma - rhs).cwiseAbs().maxCoeff() > tol) {
        throw PreconditionError("vector with zero temporal length is not in the range of h");
    }
    const double len2 = sigma.dot(H * sigma);
    return {VectorKind::Spacelike, std::abs(tv), std::sqrt(std::max(0.0, len2))};
}

}  // namespace nclab
