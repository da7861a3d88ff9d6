#include "nclab/flux.hpp"

#include <cmath>
#include <map>

#include "nclab/errors.hpp"
#include "nclab/parallel.hpp"

namespace nclab {

namespace {

Vec3 spatial(const Event& e) { return {e[1], e[2], e[3]}; }

double simpson_weight(int k, int n) {
    if (k == 0 || k == n) return 1.0;
    return (k % 2 == 1) ? 4.0 : 2.0;
}

// Pairwise summation keeps the reduction order independent of thread count.
template <class T>
T pairwise_sum(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return v[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

Mat4d time_generator(const DerivativeOperator& op, const Event& e) {
    Connection C;
    op.connection(e, C.data());
    Mat4d G;
    for (int n = 0; n < 4; ++n)
        for (int b = 0; b < 4; ++b) G(n, b) = C[ci(n, 0, b)];
    return G;
}

// G(n,b) = d^j C^n_jb for a spatial displacement d.
Mat4d leg_generator(const DerivativeOperator& op, const Event& e, const Vec3& d) {
    Connection C;
    op.connection(e, C.data());
    Mat4d G = Mat4d::Zero();
    for (int n = 0; n < 4; ++n)
        for (int b = 0; b < 4; ++b)
            for (int j = 1; j < 4; ++j) G(n, b) += d(j - 1) * C[ci(n, j, b)];
    return G;
}

}  // namespace

// ---------------------------------------------------------------- slices

Hypersurface Hypersurface::slice(const Box& region, double t, Orientation o) {
    if (t < region.lo[0] || t > region.hi[0]) throw DomainError("slice time outside the region");
    return {t, Vec3(region.lo[1], region.lo[2], region.lo[3]), Vec3(region.hi[1], region.hi[2], region.hi[3]), o};
}

Tensor Hypersurface::normal() const {
    const double s = orientation == Orientation::Future ? 1.0 : -1.0;
    return Tensor::covector({s, 0.0, 0.0, 0.0});
}

VolumeElement VolumeElement::standard(Orientation o) {
    return {o == Orientation::Future ? levi_civita() : -1.0 * levi_civita()};
}

double VolumeElement::normalization_residual(const ClassicalSpacetime& st, const Event& e) const {
    const Tensor h = st.spatial_metric(e);
    const Tensor t = st.temporal_metric(e);
    double worst = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int f = 0; f < 4; ++f) {
            double s = 0.0;
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c)
                    for (int d = 0; d < 4; ++d) {
                        const double ea = epsilon.at({a, b, c, d});
                        if (ea == 0.0) continue;
                        for (int g = 0; g < 4; ++g)
                            for (int k = 0; k < 4; ++k)
                                for (int l = 0; l < 4; ++l) {
                                    s += ea * epsilon.at({f, g, k, l}) * h.at({b, g}) * h.at({c, k}) * h.at({d, l});
                                }
                    }
            worst = std::max(worst, std::abs(s - 6.0 * t.at({a}) * t.at({f})));
        }
    return worst;
}

Tensor VolumeElement::slice_form(const Hypersurface& s) const {
    // v^a n_a = 1 with n = +-t.
    const double sign = s.orientation == Orientation::Future ? 1.0 : -1.0;
    Tensor w({Slot::Down, Slot::Down, Slot::Down});
    for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c)
            for (int d = 0; d < 4; ++d) w.at({b, c, d}) = 4.0 * sign * epsilon.at({0, b, c, d});
    return w;
}

double VolumeElement::factorization_residual(const Hypersurface& s) const {
    const Tensor f = antisymmetrize(outer(s.normal(), slice_form(s)), {0, 1, 2, 3});
    return max_abs_diff(f, epsilon);
}

// ---------------------------------------------------------------- charts

struct AffineChart::Impl {
    DerivativeOperator op;
    Event anchor;
    bool coordinate = false;
    // Time leg along the anchor's spatial point: nodes t0 + k h.
    double t0 = 0.0;
    double h = 0.0;
    std::vector<Vec4d> y, dy;
    std::vector<Mat4d> sigma, dsigma;

    Impl(DerivativeOperator o, const Event& a) : op(std::move(o)), anchor(a) {}

    Event on_axis(double t) const { return Event(t, anchor[1], anchor[2], anchor[3]); }

    void rhs(double t, const Mat4d& s, Vec4d& dy_out, Mat4d& ds_out) const {
        ds_out = -s * time_generator(op, on_axis(t));
        dy_out = s.col(0);
    }

    void time_leg(double t, Vec4d& yt, Mat4d& st) const {
        const double u = (t - t0) / h;
        const int n = static_cast<int>(y.size()) - 1;
        int k = std::clamp(static_cast<int>(std::floor(u)), 0, n - 1);
        const double s = u - k;
        if (s < -1e-9 || s > 1.0 + 1e-9) throw DomainError("chart evaluated outside its time range");
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        const auto i = static_cast<std::size_t>(k);
        yt = h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1];
        st = h00 * sigma[i] + h10 * h * dsigma[i] + h01 * sigma[i + 1] + h11 * h * dsigma[i + 1];
    }
};

AffineChart::AffineChart(const DerivativeOperator& flat, const Event& anchor, double time_step) {
    auto impl = std::make_shared<Impl>(flat, anchor);
    impl->coordinate = flat.is_coordinate();
    const Box& box = flat.box();
    if (!box.contains(anchor)) throw DomainError("chart anchor outside the operator's box");
    if (!impl->coordinate) {
        const double span = box.hi[0] - box.lo[0];
        const int n = std::max(2, static_cast<int>(std::ceil(span / time_step)));
        impl->h = span / n;
        impl->t0 = box.lo[0];
        const auto count = static_cast<std::size_t>(n + 1);
        impl->y.resize(count);
        impl->dy.resize(count);
        impl->sigma.resize(count);
        impl->dsigma.resize(count);
        auto rk4 = [&](double t, double hs, Vec4d& yk, Mat4d& sk) {
            Vec4d k1y, k2y, k3y, k4y;
            Mat4d k1s, k2s, k3s, k4s;
            impl->rhs(t, sk, k1y, k1s);
            impl->rhs(t + hs / 2, sk + hs / 2 * k1s, k2y, k2s);
            impl->rhs(t + hs / 2, sk + hs / 2 * k2s, k3y, k3s);
            impl->rhs(t + hs, sk + hs * k3s, k4y, k4s);
            yk += hs / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
            sk += hs / 6 * (k1s + 2 * k2s + 2 * k3s + k4s);
        };
        auto store = [&](int k, const Vec4d& yk, const Mat4d& sk) {
            const auto i = static_cast<std::size_t>(k);
            impl->y[i] = yk;
            impl->sigma[i] = sk;
            impl->rhs(impl->t0 + k * impl->h, sk, impl->dy[i], impl->dsigma[i]);
        };
        // Identity frame at the anchor; a partial step reaches the nearest
        // node on each side, then whole steps run outward.
        const int below = std::clamp(static_cast<int>(std::floor((anchor.t() - impl->t0) / impl->h)), 0, n - 1);
        for (int dir : {+1, -1}) {
            Vec4d yk = Vec4d::Zero();
            Mat4d sk = Mat4d::Identity();
            int k = dir > 0 ? below + 1 : below;
            rk4(anchor.t(), impl->t0 + k * impl->h - anchor.t(), yk, sk);
            store(k, yk, sk);
            for (; dir > 0 ? k < n : k > 0; k += dir) {
                rk4(impl->t0 + k * impl->h, dir * impl->h, yk, sk);
                store(k + dir, yk, sk);
            }
        }
    }
    impl_ = impl;
}

const Event& AffineChart::anchor() const { return impl_->anchor; }
const DerivativeOperator& AffineChart::op() const { return impl_->op; }

void AffineChart::evaluate(const Event& x, Vec4d& y, Mat4d& sigma) const {
    const Impl& c = *impl_;
    if (c.coordinate) {
        for (int a = 0; a < 4; ++a) y(a) = x[static_cast<std::size_t>(a)] - c.anchor[static_cast<std::size_t>(a)];
        sigma.setIdentity();
        return;
    }
    c.time_leg(x.t(), y, sigma);
    const Vec3 base(c.anchor[1], c.anchor[2], c.anchor[3]);
    const Vec3 d = spatial(x) - base;
    if (d.squaredNorm() == 0.0) return;
    const Vec4d dx(0.0, d(0), d(1), d(2));
    // Straight spatial leg; sigma is polynomial along it for the operators
    // used here, so two RK4 steps are exact up to rounding.
    constexpr int kSteps = 2;
    const double hs = 1.0 / kSteps;
    auto ds = [&](double s, const Mat4d& m) -> Mat4d {
        const Vec3 p = base + s * d;
        return -m * leg_generator(c.op, Event(x.t(), p(0), p(1), p(2)), d);
    };
    for (int k = 0; k < kSteps; ++k) {
        const double s = k * hs;
        const Mat4d k1 = ds(s, sigma);
        const Mat4d k2 = ds(s + hs / 2, sigma + hs / 2 * k1);
        const Mat4d k3 = ds(s + hs / 2, sigma + hs / 2 * k2);
        const Mat4d k4 = ds(s + hs, sigma + hs * k3);
        y += hs / 6 * (sigma + 2 * (sigma + hs / 2 * k1) + 2 * (sigma + hs / 2 * k2) + (sigma + hs * k3)) * dx;
        sigma += hs / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
}

Vec4d AffineChart::coordinates(const Event& x) const {
    Vec4d y;
    Mat4d s;
    evaluate(x, y, s);
    return y;
}

Mat4d AffineChart::cobasis(const Event& x) const {
    Vec4d y;
    Mat4d s;
    evaluate(x, y, s);
    return s;
}

Event AffineChart::locate(double t, const Vec4d& target) const {
    const Impl& c = *impl_;
    if (c.coordinate) return Event(t, c.anchor[1] + target(1), c.anchor[2] + target(2), c.anchor[3] + target(3));
    Vec3 x(c.anchor[1], c.anchor[2], c.anchor[3]);
    const double tol = 1e-14 * (1.0 + target.cwiseAbs().maxCoeff());
    for (int it = 0; it < 50; ++it) {
        Vec4d y;
        Mat4d s;
        evaluate(Event(t, x(0), x(1), x(2)), y, s);
        const Vec3 r = y.tail<3>() - target.tail<3>();
        const Vec3 dx = s.block<3, 3>(1, 1).partialPivLu().solve(r);
        x -= dx;
        if (dx.cwiseAbs().maxCoeff() <= tol) return Event(t, x(0), x(1), x(2));
    }
    throw PreconditionError("chart inversion did not converge");
}

PositionField::PositionField(AffineChart chart, const Event& base)
    : chart_(std::move(chart)), base_(base), base_y_(chart_.coordinates(base)) {}

Vec4d PositionField::operator()(const Event& x) const {
    Vec4d y;
    Mat4d s;
    chart_.evaluate(x, y, s);
    return s.partialPivLu().solve(y - base_y_);
}

TensorField PositionField::field() const {
    PositionField self = *this;
    return TensorField({Slot::Up}, chart_.op().box(), [self](const Event& e, double* out) {
        const Vec4d v = self(e);
        for (int a = 0; a < 4; ++a) out[a] = v(a);
    });
}

TensorField ConstantCobasis::covector(int i) const {
    if (i < 0 || i > 3) throw SlotError("cobasis index out of range");
    ConstantCobasis self = *this;
    return TensorField({Slot::Down}, chart.op().box(), [self, i](const Event& e, double* out) {
        const Mat4d s = self.at(e);
        for (int b = 0; b < 4; ++b) out[b] = s(i, b);
    });
}

Mat4d ConstantCobasis::dual_at_anchor() const { return at(chart.anchor()).inverse(); }

Event default_anchor(const DerivativeOperator& flat) {
    const Box& b = flat.box();
    return Event((b.lo[0] + b.hi[0]) / 2, (b.lo[1] + b.hi[1]) / 2, (b.lo[2] + b.hi[2]) / 2, (b.lo[3] + b.hi[3]) / 2);
}

ConstantCobasis standard_cobasis(const DerivativeOperator& flat) {
    return {AffineChart(flat, default_anchor(flat)), Mat4d::Identity()};
}

// ---------------------------------------------------------------- moments

Mat4d SliceMoments::angular_momentum() const { return 0.5 * (K - K.transpose()); }

Mat4d SliceMoments::angular_momentum_about(const Vec4d& y) const {
    const Vec4d d = y - origin_y;
    return angular_momentum() - 0.5 * (d * momentum.transpose() - momentum * d.transpose());
}

namespace {

struct PlaneSums {
    double mass = 0.0;
    Vec4d P = Vec4d::Zero();
    Vec4d first = Vec4d::Zero();
    Mat4d K = Mat4d::Zero();
    bool leak = false;

    PlaneSums operator+(const PlaneSums& o) const {
        return {mass + o.mass, P + o.P, first + o.first, K + o.K, leak || o.leak};
    }
};

void check_mesh(const Hypersurface& s, const SliceMesh& mesh) {
    for (int i = 0; i < 3; ++i) {
        if (mesh.intervals[static_cast<std::size_t>(i)] < 2 || mesh.intervals[static_cast<std::size_t>(i)] % 2 != 0) {
            throw PreconditionError("Simpson mesh needs an even, positive interval count");
        }
    }
    if (!(mesh.spacing > 0.0)) throw PreconditionError("mesh spacing must be positive");
    const double slack = 1e-12 * (1.0 + s.diameter());
    for (int i = 0; i < 3; ++i) {
        const double hi = mesh.lo(i) + mesh.spacing * mesh.intervals[static_cast<std::size_t>(i)];
        if (mesh.lo(i) < s.lo(i) - slack || hi > s.hi(i) + slack) {
            throw SlicingError("the support's bounding box is not contained in the slice");
        }
    }
}

}  // namespace

SliceMoments integrate_slice(const TensorField& T, const Hypersurface& s, const ConstantCobasis& basis,
                             const Event& origin, const SliceMesh& mesh, bool collect_support) {
    if (T.valence() != Valence{Slot::Up, Slot::Up}) throw SlotError("mass-momentum field must have valence (2,0)");
    return integrate_slice([&T](const Event& e, double* out) { T.evaluate(e, out); }, s, basis, origin, mesh,
                           collect_support);
}

SliceMoments integrate_slice(const TensorField::Evaluator& T, const Hypersurface& s, const ConstantCobasis& basis,
                             const Event& origin, const SliceMesh& mesh, bool collect_support) {
    if (std::abs(origin.t() - s.time) > 1e-12 * (1.0 + std::abs(s.time))) {
        throw PreconditionError("moment origin must lie on the slice");
    }
    check_mesh(s, mesh);
    const auto [ni, nj, nk] = mesh.intervals;
    const double sign = s.orientation == Orientation::Future ? 1.0 : -1.0;
    const double w0 = std::pow(mesh.spacing / 3.0, 3) * sign;

    SliceMoments out;
    out.time = s.time;
    out.origin = origin;
    const Vec4d origin_raw = basis.chart.coordinates(origin);
    out.origin_y = basis.mix * origin_raw;

    std::vector<PlaneSums> planes(static_cast<std::size_t>(ni + 1));
    std::vector<std::vector<Vec3>> support(static_cast<std::size_t>(ni + 1));
    parallel_for(planes.size(), [&](std::size_t ip) {
        const int i = static_cast<int>(ip);
        PlaneSums acc;
        std::array<double, 16> Tv;
        Vec4d y;
        Mat4d sigma;
        for (int j = 0; j <= nj; ++j) {
            int kmin = -1, kmax = -1;
            for (int k = 0; k <= nk; ++k) {
                const Vec3 x = mesh.lo + mesh.spacing * Vec3(i, j, k);
                const Event e(s.time, x(0), x(1), x(2));
                T(e, Tv.data());
                bool nonzero = false;
                for (double v : Tv) nonzero = nonzero || v != 0.0;
                if (!nonzero) continue;
                if (kmin < 0) kmin = k;
                kmax = k;
                if (i == 0 || i == ni || j == 0 || j == nj || k == 0 || k == nk) acc.leak = true;
                basis.chart.evaluate(e, y, sigma);
                const Mat4d sig = basis.mix * sigma;
                const Vec4d dy = basis.mix * (y - origin_raw);
                const double w = w0 * simpson_weight(i, ni) * simpson_weight(j, nj) * simpson_weight(k, nk);
                Vec4d flow;  // T^ab t_b
                for (int a = 0; a < 4; ++a) flow(a) = Tv[static_cast<std::size_t>(a * 4)];
                const Vec4d p = sig * flow;
                acc.mass += w * Tv[0];
                acc.P += w * p;
                acc.first += w * Tv[0] * dy;
                acc.K += w * dy * p.transpose();
            }
            if (collect_support && kmin >= 0) {
                support[ip].push_back(mesh.lo + mesh.spacing * Vec3(i, j, kmin));
                if (kmax != kmin) support[ip].push_back(mesh.lo + mesh.spacing * Vec3(i, j, kmax));
            }
        }
        planes[ip] = acc;
    });
    const PlaneSums total = pairwise_sum(planes, 0, planes.size());
    if (total.leak) throw SlicingError("mass-momentum field is nonzero on the slice mesh boundary");
    out.mass = total.mass;
    out.momentum = total.P;
    out.first = total.first;
    out.K = total.K;
    for (auto& v : support) out.support.insert(out.support.end(), v.begin(), v.end());
    return out;
}

SliceMesh body_mesh(const MassMomentumField& m, const Hypersurface& s, const QuadratureOptions& q) {
    const Vec3 c = m.center(s.time);
    const Vec3 w = m.support_half_width(s.time);
    SliceMesh mesh;
    mesh.spacing = q.spacing > 0.0 ? q.spacing : 2.0 * w.maxCoeff() / q.intervals;
    const double h = mesh.spacing;
    for (int i = 0; i < 3; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (q.mesh_origin) {
            const double o = (*q.mesh_origin)(i);
            const double lo = std::floor((c(i) - w(i) - o) / h) - 2.0;
            double hi = std::ceil((c(i) + w(i) - o) / h) + 2.0;
            if (static_cast<long>(hi - lo) % 2 != 0) hi += 1.0;
            mesh.lo(i) = o + lo * h;
            mesh.intervals[ii] = static_cast<int>(hi - lo);
        } else {
            const int k = static_cast<int>(std::ceil(w(i) / h)) + 2;
            mesh.lo(i) = c(i) - k * h;
            mesh.intervals[ii] = 2 * k;
        }
    }
    // The declared tube must fit in the slice as well as the mesh.
    const double r = m.support().radius;
    for (int i = 0; i < 3; ++i) {
        if (c(i) - r < s.lo(i) || c(i) + r > s.hi(i)) {
            throw SlicingError("the body's support tube leaves the slice");
        }
    }
    return mesh;
}

namespace {

Event mesh_center(const MassMomentumField& m, double t) {
    const Vec3 c = m.center(t);
    return Event(t, c(0), c(1), c(2));
}

SliceMoments body_moments(const MassMomentumField& m, const Hypersurface& s, const ConstantCobasis& basis,
                          const QuadratureOptions& q, const Event& origin, bool support) {
    return integrate_slice(m.slice_evaluator(s.time), s, basis, origin, body_mesh(m, s, q), support);
}

}  // namespace

Tensor momentum_flux(const MassMomentumField& m, const Hypersurface& s, const ConstantCobasis& basis,
                     const QuadratureOptions& q) {
    const SliceMoments mo = body_moments(m, s, basis, q, mesh_center(m, s.time), false);
    const Vec4d P = basis.dual_at_anchor() * mo.momentum;
    return Tensor::vector({P(0), P(1), P(2), P(3)});
}

Tensor momentum_flux(const MassMomentumField& m, const Hypersurface& s, const DerivativeOperator& flat,
                     const QuadratureOptions& q) {
    return momentum_flux(m, s, standard_cobasis(flat), q);
}

Tensor angular_momentum_flux(const MassMomentumField& m, const Hypersurface& s, const Event& p,
                             const ConstantCobasis& basis, const QuadratureOptions& q) {
    const SliceMoments mo = body_moments(m, s, basis, q, mesh_center(m, s.time), false);
    const Vec4d yp = basis.mix * basis.chart.coordinates(p);
    const Mat4d E = basis.dual_at_anchor();
    const Mat4d J = E * mo.angular_momentum_about(yp) * E.transpose();
    Tensor out({Slot::Up, Slot::Up});
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) out.at({a, b}) = a == b ? 0.0 : J(a, b);
    return out;
}

Tensor angular_momentum_flux(const MassMomentumField& m, const Hypersurface& s, const Event& p,
                             const DerivativeOperator& flat, const QuadratureOptions& q) {
    return angular_momentum_flux(m, s, p, standard_cobasis(flat), q);
}

double total_mass(const MassMomentumField& m, const Hypersurface& s, const DerivativeOperator& flat,
                  const QuadratureOptions& q) {
    const ConstantCobasis basis = standard_cobasis(flat);
    const SliceMoments mo = body_moments(m, s, basis, q, mesh_center(m, s.time), false);
    // t_a P^a with t_a expressed in the cobasis: the first row of its inverse mix.
    return (basis.mix.inverse().row(0) * mo.momentum)(0);
}

CenterOfMass center_of_mass_report(const MassMomentumField& m, const Hypersurface& s, const ConstantCobasis& basis,
                                   const QuadratureOptions& q, std::optional<Event> origin) {
    const Event o = origin ? *origin : mesh_center(m, s.time);
    CenterOfMass out;
    out.moments = body_moments(m, s, basis, q, o, true);
    const SliceMoments& mo = out.moments;
    if (!(mo.mass > 0.0)) throw PreconditionError("center of mass needs positive mass on the slice");
    const Vec4d yq = mo.origin_y + mo.first / mo.mass;
    const Mat4d inv_mix = basis.mix.inverse();
    out.point = basis.chart.locate(s.time, inv_mix * yq);
    // J^ij t_j with t_j the cobasis components of t_a.
    const Vec4d tj = inv_mix.row(0).transpose();
    out.j_residual = (mo.angular_momentum_about(yq) * tj).cwiseAbs().maxCoeff();
    if (mo.support.size() >= 4) {
        out.hull_distance = ConvexHull(mo.support).signed_distance(spatial(out.point));
    }
    return out;
}

Event center_of_mass(const MassMomentumField& m, const Hypersurface& s, const DerivativeOperator& flat,
                     const QuadratureOptions& q) {
    return center_of_mass_report(m, s, standard_cobasis(flat), q).point;
}

WorldLine com_worldline(const MassMomentumField& m, const std::vector<double>& times, const Box& region,
                        const ConstantCobasis& basis, const QuadratureOptions& q) {
    if (times.empty()) throw PreconditionError("slice plan is empty");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw PreconditionError("slice times must increase");
    }
    std::vector<Event> pts;
    for (double t : times) pts.push_back(center_of_mass_report(m, Hypersurface::slice(region, t), basis, q).point);
    const std::size_t n = pts.size();
    std::vector<CurveSample> samples;
    for (std::size_t i = 0; i < n; ++i) {
        Vec4 xi{1.0, 0.0, 0.0, 0.0};
        if (n >= 3) {
            // Quadratic through three neighbouring points, differentiated at i.
            const std::size_t a = i == 0 ? 0 : (i == n - 1 ? n - 3 : i - 1);
            const double t0 = times[a], t1 = times[a + 1], t2 = times[a + 2], t = times[i];
            const double l0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
            const double l1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
            const double l2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
            for (int c = 1; c < 4; ++c) {
                const auto cc = static_cast<std::size_t>(c);
                xi[cc] = l0 * pts[a][cc] + l1 * pts[a + 1][cc] + l2 * pts[a + 2][cc];
            }
        } else if (n == 2) {
            for (int c = 1; c < 4; ++c) {
                const auto cc = static_cast<std::size_t>(c);
                xi[cc] = (pts[1][cc] - pts[0][cc]) / (times[1] - times[0]);
            }
        }
        samples.push_back({times[i], pts[i], xi});
    }
    return WorldLine(std::move(samples), Parametrization::TimeNormalized);
}

// ---------------------------------------------------------------- derivative checks

JDerivativeReport check_J_derivative(const MassMomentumField& m, const Box& region, const ConstantCobasis& basis,
                                     const std::vector<Event>& events, const JDerivativeOptions& opt) {
    JDerivativeReport rep;
    const double window = m.support().t1 - m.support().t0;
    const double dt = opt.time_step > 0.0 ? opt.time_step : 1e-3 * (window > 0.0 ? window : 1.0);
    for (const Event& e : events) {
        QuadratureOptions q = opt.quadrature;
        if (opt.spacing > 0.0) {
            q.spacing = opt.spacing;
        } else if (q.spacing <= 0.0) {
            q.spacing = body_mesh(m, Hypersurface::slice(region, e.t()), opt.quadrature).spacing;
        }
        const Vec3 x = spatial(e);
        // Moments on slices t + k dt with the origin at (t + k dt, x).
        std::map<int, SliceMoments> cache;
        auto moments = [&](int k) -> const SliceMoments& {
            auto it = cache.find(k);
            if (it != cache.end()) return it->second;
            const double t = e.t() + k * dt;
            const Hypersurface s = Hypersurface::slice(region, t);
            const Event o(t, x(0), x(1), x(2));
            // The mesh rides with the body at a fixed spacing, so its error is smooth in t.
            QuadratureOptions qk = q;
            qk.mesh_origin = m.center(t);
            return cache.emplace(k, body_moments(m, s, basis, qk, o, false)).first->second;
        };
        auto d4 = [](const auto& fm2, const auto& fm1, const auto& fp1, const auto& fp2, double h) {
            return ((fm2 - fp2) + 8.0 * (fp1 - fm1)) / (12.0 * h);
        };
        const SliceMoments& m0 = moments(0);
        const Vec4d P = m0.momentum;
        const Mat4d sig = basis.at(e);

        std::array<Mat4d, 4> dJ;
        dJ[0] = d4(moments(-2).angular_momentum(), moments(-1).angular_momentum(), moments(1).angular_momentum(),
                   moments(2).angular_momentum(), dt);
        const Vec4d dP = d4(moments(-2).momentum, moments(-1).momentum, moments(1).momentum, moments(2).momentum, dt);
        rep.p_residual = std::max(rep.p_residual, dP.cwiseAbs().maxCoeff());
        // Spatial derivatives move the point within the slice.
        const double hx = q.spacing;
        for (int a = 1; a < 4; ++a) {
            auto J_at = [&](int k) {
                Event p = e;
                p[static_cast<std::size_t>(a)] += k * hx;
                return m0.angular_momentum_about(basis.mix * basis.chart.coordinates(p));
            };
            dJ[static_cast<std::size_t>(a)] = d4(J_at(-2), J_at(-1), J_at(1), J_at(2), hx);
        }
        for (int a = 0; a < 4; ++a) {
            // d_a J^ij + (sigma^i_a P^j - sigma^j_a P^i) / 2
            const Vec4d sa = sig.col(a);
            const Mat4d r = dJ[static_cast<std::size_t>(a)] + 0.5 * (sa * P.transpose() - P * sa.transpose());
            rep.j_residual = std::max(rep.j_residual, r.cwiseAbs().maxCoeff());
        }
    }
    return rep;
}

StokesReport stokes_check(const MassMomentumField& m, const Box& region, double t1, double t2,
                          const StokesOptions& opt) {
    if (!(t2 > t1)) throw PreconditionError("Stokes check needs t2 > t1");
    if (opt.spatial_intervals < 2 || opt.time_intervals < 2 || opt.time_intervals % 2 || opt.spatial_intervals % 2) {
        throw PreconditionError("Stokes meshes need even interval counts");
    }
    const DerivativeOperator flat = DerivativeOperator::coordinate(region);
    const ConstantCobasis basis = standard_cobasis(flat);
    const double step = opt.step > 0.0 ? opt.step : kConservationStepFactor * m.lattice_spacing();

    // Spatial box covering the support over [t1, t2].
    Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
    for (int k = 0; k <= 8; ++k) {
        const double t = t1 + (t2 - t1) * k / 8.0;
        const Vec3 c = m.center(t);
        const Vec3 w = m.support_half_width(t);
        lo = lo.cwiseMin(c - w);
        hi = hi.cwiseMax(c + w);
    }
    const double h = (hi - lo).maxCoeff() / opt.spatial_intervals;
    SliceMesh mesh;
    mesh.spacing = h;
    for (int i = 0; i < 3; ++i) {
        int n = static_cast<int>(std::ceil((hi(i) - lo(i)) / h)) + 4;
        if (n % 2) ++n;
        mesh.intervals[static_cast<std::size_t>(i)] = n;
        mesh.lo(i) = 0.5 * (lo(i) + hi(i)) - 0.5 * n * h;
    }
    const int nt = opt.time_intervals;
    const double ht = (t2 - t1) / nt;
    const auto [ni, nj, nk] = mesh.intervals;

    StokesReport rep;
    const Hypersurface s1 = Hypersurface::slice(region, t1), s2 = Hypersurface::slice(region, t2);
    rep.difference = integrate_slice(m.T(), s2, basis, mesh_center(m, t2), mesh).momentum -
                     integrate_slice(m.T(), s1, basis, mesh_center(m, t1), mesh).momentum;

    // Volume integral of d_a T^a mu over the slab.
    std::vector<Vec4d> planes(static_cast<std::size_t>(ni + 1), Vec4d::Zero());
    parallel_for(planes.size(), [&](std::size_t ip) {
        const int i = static_cast<int>(ip);
        std::array<double, 64> dT;
        Vec4d acc = Vec4d::Zero();
        for (int n = 0; n <= nt; ++n)
            for (int j = 0; j <= nj; ++j)
                for (int k = 0; k <= nk; ++k) {
                    const Vec3 x = mesh.lo + h * Vec3(i, j, k);
                    const Event e(t1 + n * ht, x(0), x(1), x(2));
                    partial_derivative_into(m.T(), e, step, dT.data());
                    const double w = simpson_weight(n, nt) * simpson_weight(i, ni) * simpson_weight(j, nj) *
                                     simpson_weight(k, nk);
                    for (int mu = 0; mu < 4; ++mu) {
                        double div = 0.0;
                        for (int a = 0; a < 4; ++a) div += dT[static_cast<std::size_t>(a * 16 + a * 4 + mu)];
                        acc(mu) += w * div;
                    }
                }
        planes[ip] = acc;
    });
    const Vec4d volume = pairwise_sum(planes, 0, planes.size()) * (ht / 3.0) * std::pow(h / 3.0, 3);

    // Outward fluxes T^{i mu} n_i through the six lateral faces.
    Vec4d lateral = Vec4d::Zero();
    std::array<double, 16> Tv;
    for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3, v = (axis + 2) % 3;
        const int nu = mesh.intervals[static_cast<std::size_t>(u)], nv = mesh.intervals[static_cast<std::size_t>(v)];
        for (int side : {0, 1}) {
            const double sign = side ? 1.0 : -1.0;
            for (int n = 0; n <= nt; ++n)
                for (int a = 0; a <= nu; ++a)
                    for (int b = 0; b <= nv; ++b) {
                        Vec3 x = mesh.lo;
                        x(axis) += side * h * mesh.intervals[static_cast<std::size_t>(axis)];
                        x(u) += a * h;
                        x(v) += b * h;
                        m.T().evaluate(Event(t1 + n * ht, x(0), x(1), x(2)), Tv.data());
                        const double w = simpson_weight(n, nt) * simpson_weight(a, nu) * simpson_weight(b, nv) *
                                         (ht / 3.0) * (h / 3.0) * (h / 3.0);
                        for (int mu = 0; mu < 4; ++mu) {
                            lateral(mu) += sign * w * Tv[static_cast<std::size_t>((axis + 1) * 4 + mu)];
                        }
                    }
        }
    }
    rep.boundary_form = volume - lateral;
    rep.consistency = (rep.difference - rep.boundary_form).cwiseAbs().maxCoeff();
    return rep;
}

FactorizationReport flux_factorization(const TensorField& beta, const Hypersurface& s, const SliceMesh& mesh) {
    if (beta.valence() != Valence{Slot::Up}) throw SlotError("flux factorization needs a vector field");
    check_mesh(s, mesh);
    const VolumeElement vol = VolumeElement::standard(s.orientation);
    const Tensor omega = vol.slice_form(s);
    const Tensor n = s.normal();
    const auto [ni, nj, nk] = mesh.intervals;
    FactorizationReport rep;
    std::array<double, 4> b;
    for (int i = 0; i <= ni; ++i)
        for (int j = 0; j <= nj; ++j)
            for (int k = 0; k <= nk; ++k) {
                const Vec3 x = mesh.lo + mesh.spacing * Vec3(i, j, k);
                beta.evaluate(Event(s.time, x(0), x(1), x(2)), b.data());
                const double w = simpson_weight(i, ni) * simpson_weight(j, nj) * simpson_weight(k, nk);
                // Pull-backs to the slice keep the (1,2,3) components.
                double form = 0.0, normal = 0.0;
                for (int a = 0; a < 4; ++a) {
                    form += b[static_cast<std::size_t>(a)] * vol.epsilon.at({a, 1, 2, 3});
                    normal += b[static_cast<std::size_t>(a)] * n.at({a});
                }
                rep.lhs += w * form;
                rep.rhs += w * 0.25 * normal * omega.at({1, 2, 3});
            }
    const double scale = std::pow(mesh.spacing / 3.0, 3);
    rep.lhs *= scale;
    rep.rhs *= scale;
    return rep;
}

DerivativeOperator frame_operator(const Box& region, const Vec3& omega, std::function<Vec3(double)> acceleration) {
    Mat3 W;  // (omega x) as a matrix
    W << 0, -omega(2), omega(1), omega(2), 0, -omega(0), -omega(1), omega(0), 0;
    const Mat3 W2 = W * W;
    auto eval = [W, W2, acceleration](const Event& e, double* out) {
        std::fill(out, out + 64, 0.0);
        const Vec3 x(e[1], e[2], e[3]);
        const Vec3 a = acceleration(e.t());
        const Vec3 c00 = -W2 * x + a;
        for (int i = 1; i < 4; ++i) {
            out[ci(i, 0, 0)] = c00(i - 1);
            for (int j = 1; j < 4; ++j) {
                out[ci(i, 0, j)] = -W(i - 1, j - 1);
                out[ci(i, j, 0)] = -W(i - 1, j - 1);
            }
        }
    };
    return DerivativeOperator(TensorField({Slot::Up, Slot::Down, Slot::Down}, region, eval));
}

}  // namespace nclab
