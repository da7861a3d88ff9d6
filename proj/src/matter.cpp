#include "nclab/matter.hpp"

#include <atomic>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <array>
#include <cmath>
#include <numbers>

#include "nclab/errors.hpp"
#include "nclab/parallel.hpp"
#include "nclab/sampling.hpp"

namespace nclab {

namespace {

struct FlowState {
    Vec3 X;
    Vec3 V;
    Mat3 M;  // dX/dX0
    Mat3 W;  // dV/dX0
};

Vec3 spatial(const Event& e) { return {e[1], e[2], e[3]}; }

}  // namespace

BumpProfile BumpProfile::with_mass(double epsilon, double mass) {
    if (!(epsilon > 0.0)) throw PreconditionError("bump radius must be positive");
    // int_0^1 s^2 exp(1/(s^2-1)) ds, computed once
    static const double radial = [] {
        auto f = [](double s) { return s < 1.0 ? s * s * std::exp(1.0 / (s * s - 1.0)) : 0.0; };
        return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 12, 1e-14);
    }();
    return {epsilon, mass / (4.0 * std::numbers::pi * radial * epsilon * epsilon * epsilon)};
}

double BumpProfile::operator()(double r) const {
    const double s = r / epsilon;
    if (s >= 1.0) return 0.0;
    return amplitude * std::exp(1.0 / (s * s - 1.0));
}

class DustBody {
public:
    DerivativeOperator op;
    bool flat = false;
    Vec3 c0;
    Vec3 V0;
    double t0 = 0.0;
    double t1 = 0.0;
    BumpProfile profile;
    DustOptions opt;
    Tube tube;
    double spacing = 0.0;
    int flow_steps = 1;
    std::vector<double> level_times;
    std::vector<LatticeNode> nodes;
    std::vector<Vec3> level_half_width;

    std::uint64_t id;  // distinguishes bodies in per-thread caches

    explicit DustBody(DerivativeOperator o) : op(std::move(o)), id(next_id()) {}

    static std::uint64_t next_id() {
        static std::atomic<std::uint64_t> counter{0};
        return ++counter;
    }

    void accel(double t, const Vec3& X, const Vec3& V, Vec3& A, Mat3* AX, Mat3* AV) const {
        const Event e(t, X(0), X(1), X(2));
        Connection C;
        op.connection(e, C.data());
        const double u[4] = {1.0, V(0), V(1), V(2)};
        for (int i = 1; i < 4; ++i) {
            double s = 0.0;
            for (int n = 0; n < 4; ++n)
                for (int m = 0; m < 4; ++m) s += C[ci(i, n, m)] * u[n] * u[m];
            A(i - 1) = s;
        }
        if (AX) {
            ConnectionDerivative dC;
            op.connection_derivative(e, dC.data());
            for (int i = 1; i < 4; ++i)
                for (int k = 1; k < 4; ++k) {
                    double sx = 0.0;
                    double sv = 0.0;
                    for (int n = 0; n < 4; ++n) {
                        sv += C[ci(i, k, n)] * u[n];
                        for (int m = 0; m < 4; ++m) sx += dC[k * 64 + ci(i, n, m)] * u[n] * u[m];
                    }
                    (*AX)(i - 1, k - 1) = sx;
                    (*AV)(i - 1, k - 1) = 2.0 * sv;
                }
        }
    }

    void advance(FlowState& s, double t, double h, bool variational) const {
        if (flat) {
            s.X += h * s.V;
            s.M += h * s.W;
            return;
        }
        Vec3 A[4];
        Mat3 AX[4], AV[4];
        FlowState k[4];
        FlowState y = s;
        const double c[4] = {0.0, 0.5, 0.5, 1.0};
        for (int j = 0; j < 4; ++j) {
            if (j > 0) {
                y.X = s.X + c[j] * h * k[j - 1].X;
                y.V = s.V + c[j] * h * k[j - 1].V;
                if (variational) {
                    y.M = s.M + c[j] * h * k[j - 1].M;
                    y.W = s.W + c[j] * h * k[j - 1].W;
                }
            }
            accel(t + c[j] * h, y.X, y.V, A[j], variational ? &AX[j] : nullptr, variational ? &AV[j] : nullptr);
            k[j].X = y.V;
            k[j].V = A[j];
            if (variational) {
                k[j].M = y.W;
                k[j].W = AX[j] * y.M + AV[j] * y.W;
            }
        }
        s.X += h / 6.0 * (k[0].X + 2 * k[1].X + 2 * k[2].X + k[3].X);
        s.V += h / 6.0 * (k[0].V + 2 * k[1].V + 2 * k[2].V + k[3].V);
        if (variational) {
            s.M += h / 6.0 * (k[0].M + 2 * k[1].M + 2 * k[2].M + k[3].M);
            s.W += h / 6.0 * (k[0].W + 2 * k[1].W + 2 * k[2].W + k[3].W);
        }
    }

    FlowState initial(const Vec3& X0) const { return {X0, V0, Mat3::Identity(), Mat3::Zero()}; }

    // Integrates from (t_from, s) to t_to in `n` equal steps (default: enough
    // for max_step across the padded window). A step count independent of t_to
    // keeps the discrete flow map smooth in time.
    void integrate(FlowState& s, double t_from, double t_to, bool variational, double* min_jacobian = nullptr,
                   int n = 0) const {
        if (t_to == t_from) return;
        if (n <= 0) n = flow_steps;
        const double h = (t_to - t_from) / n;
        for (int i = 0; i < n; ++i) {
            advance(s, t_from + i * h, h, variational);
            if (min_jacobian) *min_jacobian = std::min(*min_jacobian, s.M.determinant());
        }
    }

    FlowState flow(const Vec3& X0, double t, bool variational) const {
        FlowState s = initial(X0);
        integrate(s, t0, t, variational);
        return s;
    }

    // Central flow line on slice t; one cached slice per thread.
    const FlowState& central(double t) const {
        struct Cache {
            std::uint64_t body = 0;
            double t = 0.0;
            FlowState state;
        };
        thread_local Cache cache;
        if (cache.body != id || cache.t != t) {
            cache.state = flow(c0, t, true);
            cache.body = id;
            cache.t = t;
        }
        return cache.state;
    }

    void check_time(double t) const {
        if (t < t0 - opt.window_padding - 1e-12 || t > t1 + opt.window_padding + 1e-12) {
            throw DomainError("dust body evaluated outside its time window");
        }
    }

    DustSample finish(const Vec3& X0, const Vec3& V, const Mat3& M) const {
        const double d = (X0 - c0).norm();
        if (d >= profile.epsilon) return {};
        const double J = M.determinant();
        if (J < opt.caustic_threshold) {
            throw CausticError("flow Jacobian below threshold; use a smaller radius or a shorter window");
        }
        return {profile(d) / J, V};
    }

    bool clipped(const Vec3& x) const {
        if (opt.clip_radius <= 0.0) return false;
        const Vec3 cc(opt.clip_center[0], opt.clip_center[1], opt.clip_center[2]);
        return (x - cc).norm() > opt.clip_radius;
    }

    DustSample sample(const Event& e) const {
        check_time(e.t());
        const Vec3 x = spatial(e);
        if (clipped(x)) return {};
        const double eps = profile.epsilon;
        const double t = e.t();
        if (flat) return finish(x - V0 * (t - t0), V0, Mat3::Identity());
        const FlowState& c = central(t);
        Vec3 X0 = c0 + c.M.partialPivLu().solve(x - c.X);
        if ((X0 - c0).norm() > 1.5 * eps) return {};
        // Newton converges quadratically, so once a correction is below tol
        // the corrected label is exact to rounding. The flow state is carried
        // to it to first order instead of re-integrating.
        const double tol = 1e-9 * eps;
        FlowState f;
        for (int it = 0; it < 30; ++it) {
            try {
                f = flow(X0, t, true);
            } catch (const DomainError&) {
                // Flow lines from labels off the body may reach singular
                // regions of the source; only labels inside the body matter.
                if ((X0 - c0).norm() > eps) return {};
                throw;
            }
            const Vec3 dx = f.M.partialPivLu().solve(f.X - x);
            X0 -= dx;
            f.V -= f.W * dx;
            if ((X0 - c0).norm() > 3.0 * eps) return {};
            if (dx.cwiseAbs().maxCoeff() <= tol) return finish(X0, f.V, f.M);
        }
        throw PreconditionError("flow map inversion did not converge");
    }
};

namespace {

// Tensor-product Chebyshev interpolant of the time-t flow map (position and
// velocity) over the labels c0 + [-w, w]^3. The map is analytic and nearly
// affine on a small body, so a modest degree reaches rounding level.
std::uint64_t next_map_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter++;
}

struct LineSeed {
    std::uint64_t map = 0;
    Vec3 x = Vec3::Zero();
    Vec3 X0 = Vec3::Zero();
    Eigen::PartialPivLU<Mat3> lu;
};

class SliceMap {
public:
    static constexpr int kMaxNodes = 24;
    static constexpr double kProbeTolerance = 1e-12;
    static constexpr double kNewtonTolerance = 1e-10;  // relative to epsilon

    SliceMap(const DustBody& b, double t, int nodes) : b_(b), t_(t), half_(1.1 * b.profile.epsilon) {
        // Raise the degree until the interpolant reproduces re-integrated flow
        // lines at probe labels near the edge of the body.
        const double eps = b.profile.epsilon;
        std::vector<FlowState> probes;
        std::vector<Vec3> labels;
        for (int k = 0; k < 8; ++k) {
            const Vec3 dir((k & 1) ? 1.0 : -1.0, (k & 2) ? 1.0 : -1.0, (k & 4) ? 1.0 : -1.0);
            labels.push_back(b.c0 + 0.55 * eps * dir);
            probes.push_back(b.flow(labels.back(), t, false));
        }
        for (n_ = std::clamp(nodes, 4, kMaxNodes);; n_ = std::min(n_ + 4, kMaxNodes)) {
            fit();
            double err = 0.0;
            Vec3 X, V;
            Mat3 M, W;
            for (std::size_t k = 0; k < labels.size(); ++k) {
                eval(labels[k], X, V, M, W);
                err = std::max({err, (X - probes[k].X).cwiseAbs().maxCoeff(), (V - probes[k].V).cwiseAbs().maxCoeff()});
            }
            if (err <= kProbeTolerance || n_ == kMaxNodes) break;
        }
        Vec3 V;
        Mat3 M, W;
        eval(b.c0, center_X_, V, M, W);
        center_lu_.compute(M);
    }

    void fit() {
        const DustBody& b = b_;
        const double t = t_;
        const int n = n_;
        std::vector<double> u(static_cast<std::size_t>(n));
        for (int m = 0; m < n; ++m) u[static_cast<std::size_t>(m)] = std::cos(std::numbers::pi * (m + 0.5) / n);
        std::vector<double> values(static_cast<std::size_t>(6 * n * n * n));
        parallel_for(static_cast<std::size_t>(n * n * n), [&](std::size_t idx) {
            const int i = static_cast<int>(idx) / (n * n), j = (static_cast<int>(idx) / n) % n, k = static_cast<int>(idx) % n;
            const Vec3 X0 = b.c0 + half_ * Vec3(u[static_cast<std::size_t>(i)], u[static_cast<std::size_t>(j)],
                                                u[static_cast<std::size_t>(k)]);
            const FlowState f = b.flow(X0, t, false);
            for (int c = 0; c < 3; ++c) {
                values[static_cast<std::size_t>(c * n * n * n) + idx] = f.X(c);
                values[static_cast<std::size_t>((c + 3) * n * n * n) + idx] = f.V(c);
            }
        });
        // Discrete Chebyshev transform along each axis in turn.
        std::vector<std::vector<double>> T(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
        for (int j = 0; j < n; ++j)
            for (int m = 0; m < n; ++m)
                T[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] =
                    (j == 0 ? 1.0 : 2.0) / n * std::cos(std::numbers::pi * j * (m + 0.5) / n);
        coef_ = values;
        for (int axis = 0; axis < 3; ++axis) {
            std::vector<double> next(coef_.size(), 0.0);
            const int stride = axis == 0 ? n * n : (axis == 1 ? n : 1);
            for (int c = 0; c < 6; ++c)
                for (int idx = 0; idx < n * n * n; ++idx) {
                    const int along = (idx / stride) % n;
                    const int base = idx - along * stride;
                    double s = 0.0;
                    for (int m = 0; m < n; ++m) {
                        s += T[static_cast<std::size_t>(along)][static_cast<std::size_t>(m)] *
                             coef_[static_cast<std::size_t>(c * n * n * n + base + m * stride)];
                    }
                    next[static_cast<std::size_t>(c * n * n * n + idx)] = s;
                }
            coef_.swap(next);
        }
    }

    double time() const { return t_; }

    // Position, velocity and their label Jacobians M = dX/dX0, W = dV/dX0.
    void eval(const Vec3& X0, Vec3& X, Vec3& V, Mat3& M, Mat3& W) const {
        const int n = n_;
        const Vec3 u = (X0 - b_.c0) / half_;
        double T[3][kMaxNodes], D[3][kMaxNodes];
        for (int a = 0; a < 3; ++a) {
            T[a][0] = 1.0, T[a][1] = u(a);
            D[a][0] = 0.0, D[a][1] = 1.0;
            for (int j = 1; j + 1 < n; ++j) {
                T[a][j + 1] = 2.0 * u(a) * T[a][j] - T[a][j - 1];
                D[a][j + 1] = 2.0 * T[a][j] + 2.0 * u(a) * D[a][j] - D[a][j - 1];
            }
        }
        for (int c = 0; c < 6; ++c) {
            const double* cc = coef_.data() + c * n * n * n;
            double v = 0.0, d0 = 0.0, d1 = 0.0, d2 = 0.0;
            // Total-degree truncation: analytic maps have coefficients decaying
            // in i + j + k, and the probes above vouch for the result.
            for (int i = 0; i < n; ++i) {
                double vi = 0.0, d1i = 0.0, d2i = 0.0;
                for (int j = 0; j < n - i; ++j) {
                    const double* row = cc + (i * n + j) * n;
                    double vk = 0.0, dk = 0.0;
                    for (int k = 0; k < n - i - j; ++k) {
                        vk += row[k] * T[2][k];
                        dk += row[k] * D[2][k];
                    }
                    vi += T[1][j] * vk;
                    d1i += D[1][j] * vk;
                    d2i += T[1][j] * dk;
                }
                v += T[0][i] * vi;
                d0 += D[0][i] * vi;
                d1 += T[0][i] * d1i;
                d2 += T[0][i] * d2i;
            }
            Mat3& J = c < 3 ? M : W;
            (c < 3 ? X : V)(c % 3) = v;
            J(c % 3, 0) = d0 / half_;
            J(c % 3, 1) = d1 / half_;
            J(c % 3, 2) = d2 / half_;
        }
    }

    // Quadrature walks z-lines in order, so the previous solution on the same
    // line seeds Newton. The seed depends only on the line, never on threads.
    DustSample sample(const Vec3& x) const {
        if (b_.clipped(x)) return {};
        const double eps = b_.profile.epsilon;
        thread_local LineSeed seed;
        Vec3 X0;
        if (seed.map == id_ && seed.x(0) == x(0) && seed.x(1) == x(1) && std::abs(seed.x(2) - x(2)) <= 0.1 * eps) {
            X0 = seed.X0 + seed.lu.solve(x - seed.x);
        } else {
            X0 = b_.c0 + center_lu_.solve(x - center_X_);
        }
        if ((X0 - b_.c0).norm() > 1.5 * eps) return {};
        Vec3 X, V;
        Mat3 M, W;
        for (int it = 0; it < 30; ++it) {
            eval(X0, X, V, M, W);
            const Eigen::PartialPivLU<Mat3> lu(M);
            const Vec3 dx = lu.solve(X - x);
            X0 -= dx;
            // One Newton step already leaves an error far below 5% of eps.
            if ((X0 - b_.c0).norm() > 1.05 * eps) return {};
            if (dx.cwiseAbs().maxCoeff() <= kNewtonTolerance * eps) {
                // The next step would be O(dx^2); carry V to first order, M is O(dx) off.
                V -= W * dx;
                seed = {id_, x, X0, lu};
                return b_.finish(X0, V, M);
            }
        }
        throw PreconditionError("flow map inversion did not converge");
    }

private:
    const DustBody& b_;
    double t_;
    double half_;
    int n_;
    std::uint64_t id_ = next_map_id();
    std::vector<double> coef_;
    Vec3 center_X_;
    Eigen::PartialPivLU<Mat3> center_lu_;  // [component][i][j][k]
};

}  // namespace

MassMomentumField::MassMomentumField(std::shared_ptr<const DustBody> body, double scale, const Box& region)
    : body_(std::move(body)), scale_(scale), T_(TensorField::zero({Slot::Up, Slot::Up}, region)) {
    auto b = body_;
    const double k = scale_;
    Box box = region;
    box.lo[0] = std::max(box.lo[0], b->t0 - b->opt.window_padding);
    box.hi[0] = std::min(box.hi[0], b->t1 + b->opt.window_padding);
    T_ = TensorField(
        {Slot::Up, Slot::Up}, box,
        [b, k](const Event& e, double* out) {
            const DustSample s = b->sample(e);
            const double u[4] = {1.0, s.velocity(0), s.velocity(1), s.velocity(2)};
            for (int a = 0; a < 4; ++a)
                for (int c = a; c < 4; ++c) {
                    const double v = k * s.rho * u[a] * u[c];
                    out[a * 4 + c] = v;
                    out[c * 4 + a] = v;
                }
        },
        Backend::Grid);
}

const Tube& MassMomentumField::support() const { return body_->tube; }
double MassMomentumField::lattice_spacing() const { return body_->spacing; }
double MassMomentumField::peak_density() const { return std::abs(scale_) * body_->profile(0.0); }
double MassMomentumField::epsilon() const { return body_->profile.epsilon; }
double MassMomentumField::scale() const { return scale_; }

DustSample MassMomentumField::sample(const Event& e) const {
    DustSample s = body_->sample(e);
    s.rho *= scale_;
    return s;
}

TensorField::Evaluator MassMomentumField::slice_evaluator(double t) const {
    body_->check_time(t);
    auto b = body_;
    const double k = scale_;
    auto write = [k](const DustSample& s, double* out) {
        const double u[4] = {1.0, s.velocity(0), s.velocity(1), s.velocity(2)};
        for (int a = 0; a < 4; ++a)
            for (int c = 0; c < 4; ++c) out[a * 4 + c] = k * s.rho * u[a] * u[c];
    };
    if (b->flat) {
        return [b, write](const Event& e, double* out) { write(b->sample(e), out); };
    }
    std::shared_ptr<const SliceMap> map;
    try {
        map = std::make_shared<const SliceMap>(*b, t, b->opt.slice_nodes);
    } catch (const DomainError&) {
        // Interpolation nodes reach a singular region: evaluate directly.
        return [b, write](const Event& e, double* out) { write(b->sample(e), out); };
    }
    return [b, map, write](const Event& e, double* out) {
        if (e.t() != map->time()) throw PreconditionError("slice evaluator used off its slice");
        write(map->sample(spatial(e)), out);
    };
}

Vec3 MassMomentumField::center(double t) const {
    body_->check_time(t);
    return body_->flow(body_->c0, t, false).X;
}

Vec3 MassMomentumField::support_half_width(double t) const {
    body_->check_time(t);
    const auto& lt = body_->level_times;
    std::size_t k = 0;
    while (k + 2 < lt.size() && lt[k + 1] <= t) ++k;
    Vec3 w = body_->level_half_width[k].cwiseMax(body_->level_half_width[k + 1]);
    return w + Vec3::Constant(2.0 * body_->spacing);
}

const std::vector<double>& MassMomentumField::level_times() const { return body_->level_times; }
const std::vector<LatticeNode>& MassMomentumField::nodes() const { return body_->nodes; }

MassMomentumField MassMomentumField::scaled(double s) const {
    Box region = T_.box();
    return MassMomentumField(body_, scale_ * s, region);
}

MassMomentumField build_dust_body(const ClassicalSpacetime& st, const WorldLine& gamma, double epsilon,
                                  const BumpProfile& profile, const DustOptions& opt) {
    if (!(epsilon > 0.0)) throw PreconditionError("body radius must be positive");
    if (opt.lattice < 4) throw PreconditionError("lattice needs at least 4 nodes across");
    if (opt.stored_levels < 2) throw PreconditionError("need at least two stored levels");
    if (gamma.size() >= 5) {
        const GeodesicResidual gr = geodesic_residual(st.op, gamma);
        if (!(gr.reparam <= 1e-6)) throw PreconditionError("central curve is not a geodesic of the operator");
    }
    auto body = std::make_shared<DustBody>(st.op);
    body->flat = st.op.is_coordinate();
    body->opt = opt;
    body->profile = profile;
    body->profile.epsilon = epsilon;
    body->t0 = gamma.samples().front().x[0];
    body->t1 = gamma.samples().back().x[0];
    body->c0 = spatial(gamma.at_time(body->t0));
    const Vec4 v = gamma.velocity_at_time(body->t0);
    body->V0 = Vec3(v[1], v[2], v[3]);

    const int n = opt.lattice;
    const double h = 2.0 * epsilon / (n - 1);
    body->spacing = h;
    const double tlo = body->t0 - opt.window_padding;
    const double thi = body->t1 + opt.window_padding;
    for (int k = 0; k < opt.stored_levels; ++k) {
        body->level_times.push_back(tlo + (thi - tlo) * k / (opt.stored_levels - 1));
    }
    body->flow_steps = std::max(1, static_cast<int>(std::ceil((thi - tlo) / opt.max_step - 1e-9)));
    const int level_steps =
        std::max(1, static_cast<int>(std::ceil((thi - tlo) / (opt.stored_levels - 1) / opt.max_step - 1e-9)));
    std::size_t k0 = 0;  // first level at or after t0
    while (k0 < body->level_times.size() && body->level_times[k0] < body->t0) ++k0;

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const Vec3 off(-epsilon + i * h, -epsilon + j * h, -epsilon + k * h);
                if (off.norm() > epsilon * (1.0 + 1e-12)) continue;
                LatticeNode node;
                node.label = body->c0 + off;
                node.rho0 = body->profile(off.norm());
                body->nodes.push_back(std::move(node));
            }

    const std::size_t L = body->level_times.size();
    std::vector<double> min_jac(body->nodes.size(), 1.0);
    const DustBody& B = *body;
    parallel_for(body->nodes.size(), [&](std::size_t idx) {
        LatticeNode& node = body->nodes[idx];
        node.position.assign(L, Vec3::Zero());
        node.jacobian.assign(L, 1.0);
        double mj = 1.0;
        for (int dir : {+1, -1}) {
            FlowState s = B.initial(node.label);
            double t = B.t0;
            if (dir > 0) {
                for (std::size_t k = k0; k < L; ++k) {
                    B.integrate(s, t, B.level_times[k], true, &mj, level_steps);
                    t = B.level_times[k];
                    node.position[k] = s.X;
                    node.jacobian[k] = s.M.determinant();
                }
            } else {
                for (std::size_t k = k0; k-- > 0;) {
                    B.integrate(s, t, B.level_times[k], true, &mj, level_steps);
                    t = B.level_times[k];
                    node.position[k] = s.X;
                    node.jacobian[k] = s.M.determinant();
                }
            }
        }
        min_jac[idx] = mj;
    });
    for (double mj : min_jac) {
        if (mj < opt.caustic_threshold) {
            throw CausticError("congruence develops a caustic inside the window; use a smaller radius or window");
        }
    }

    std::vector<Vec3> centers(L);
    for (std::size_t k = 0; k < L; ++k) centers[k] = body->flow(body->c0, body->level_times[k], false).X;
    body->level_half_width.assign(L, Vec3::Zero());
    double radius = 0.0;
    for (const auto& node : body->nodes) {
        for (std::size_t k = 0; k < L; ++k) {
            const Vec3 d = node.position[k] - centers[k];
            body->level_half_width[k] = body->level_half_width[k].cwiseMax(d.cwiseAbs());
            radius = std::max(radius, d.norm());
        }
    }
    body->tube = Tube{gamma, radius + 2.0 * h, body->t0, body->t1};
    return MassMomentumField(body, 1.0, st.region);
}

double mass_density(const MassMomentumField& m, const Event& e) {
    const Box& b = m.T().box();
    if (!b.contains(e)) return 0.0;
    std::array<double, 16> T;
    m.T().evaluate(e, T.data());
    return T[0];  // t_a t_b T^ab with t = (1,0,0,0)
}

namespace {

// Spatial bounding box of the tube over the window, with the padded time range.
Box tube_box(const MassMomentumField& m) {
    const Tube& tube = m.support();
    Box b;
    b.lo = {tube.t0, 1e300, 1e300, 1e300};
    b.hi = {tube.t1, -1e300, -1e300, -1e300};
    const auto& lt = m.level_times();
    for (double t : lt) {
        if (t < tube.t0 || t > tube.t1) continue;
        const Vec3 c = m.center(t);
        for (int i = 0; i < 3; ++i) {
            b.lo[static_cast<std::size_t>(i + 1)] = std::min(b.lo[static_cast<std::size_t>(i + 1)], c(i) - tube.radius);
            b.hi[static_cast<std::size_t>(i + 1)] = std::max(b.hi[static_cast<std::size_t>(i + 1)], c(i) + tube.radius);
        }
    }
    for (double t : {tube.t0, tube.t1}) {
        const Vec3 c = m.center(t);
        for (int i = 0; i < 3; ++i) {
            b.lo[static_cast<std::size_t>(i + 1)] = std::min(b.lo[static_cast<std::size_t>(i + 1)], c(i) - tube.radius);
            b.hi[static_cast<std::size_t>(i + 1)] = std::max(b.hi[static_cast<std::size_t>(i + 1)], c(i) + tube.radius);
        }
    }
    return b;
}

}  // namespace

ConditionReport check_conditions(const ClassicalSpacetime& st, const MassMomentumField& m,
                                 const ConditionOptions& opt) {
    ConditionReport rep;
    const Box box = tube_box(m);
    const double step = opt.step > 0.0 ? opt.step : kConservationStepFactor * m.lattice_spacing();
    const double norm = m.peak_density() / m.epsilon();
    const Tube& tube = m.support();
    const TensorField& T = m.T();

    auto distance = [&](const Event& e) { return (spatial(e) - m.center(e.t())).norm(); };

    std::vector<Event> interior;
    std::vector<Event> shell;
    for (const Event& e : sobol_events(box, 8 * (opt.interior_samples + opt.shell_samples))) {
        const double d = distance(e);
        if (d < tube.radius) {
            if (interior.size() < opt.interior_samples) interior.push_back(e);
        } else if (shell.size() < opt.shell_samples) {
            shell.push_back(e);
        }
    }
    interior.insert(interior.end(), opt.extra_events.begin(), opt.extra_events.end());

    std::vector<ConditionReport> per(interior.size());
    parallel_for(interior.size(), [&](std::size_t i) {
        const Event& e = interior[i];
        ConditionReport& r = per[i];
        std::array<double, 16> Tv;
        T.evaluate(e, Tv.data());
        bool nonzero = false;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                nonzero = nonzero || Tv[static_cast<std::size_t>(a * 4 + b)] != 0.0;
                r.symmetry = std::max(r.symmetry, std::abs(Tv[static_cast<std::size_t>(a * 4 + b)] -
                                                           Tv[static_cast<std::size_t>(b * 4 + a)]));
            }
        if (nonzero) {
            r.support_points = 1;
            if (!(Tv[0] > 0.0)) r.mass_violations = 1;
        }
        // nabla_a T^ab = d_a T^ab - C^a_an T^nb - C^b_an T^an
        std::array<double, 64> dT;
        partial_derivative_into(T, e, step, dT.data());
        Connection C;
        st.op.connection(e, C.data());
        for (int b = 0; b < 4; ++b) {
            double div = 0.0;
            for (int a = 0; a < 4; ++a) {
                div += dT[static_cast<std::size_t>(a * 16 + a * 4 + b)];
                for (int n = 0; n < 4; ++n) {
                    div -= C[ci(a, a, n)] * Tv[static_cast<std::size_t>(n * 4 + b)];
                    div -= C[ci(b, a, n)] * Tv[static_cast<std::size_t>(a * 4 + n)];
                }
            }
            r.conservation = std::max(r.conservation, std::abs(div) / norm);
        }
    });
    for (const auto& r : per) {
        rep.support_points += r.support_points;
        rep.mass_violations += r.mass_violations;
        rep.conservation = std::max(rep.conservation, r.conservation);
        rep.symmetry = std::max(rep.symmetry, r.symmetry);
    }
    for (const Event& e : shell) {
        if (!T.box().contains(e)) continue;
        std::array<double, 16> Tv;
        T.evaluate(e, Tv.data());
        for (double v : Tv) rep.support = std::max(rep.support, std::abs(v));
    }
    return rep;
}

}  // namespace nclab
