#include "nclab/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nclab/errors.hpp"
#include "nclab/format.hpp"

namespace nclab {

namespace {

struct Hermite {
    double h00, h10, h01, h11;
};

Hermite hermite(double u) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    return {2 * u3 - 3 * u2 + 1, u3 - 2 * u2 + u, -2 * u3 + 3 * u2, u3 - u2};
}

Hermite hermite_d(double u) {
    const double u2 = u * u;
    return {6 * u2 - 6 * u, 3 * u2 - 4 * u + 1, -6 * u2 + 6 * u, 3 * u2 - 2 * u};
}

using State = std::array<double, 8>;  // x^a then xi^a

State rhs(const AccelerationLaw& law, const State& y) {
    State d{};
    Vec4 xi{y[4], y[5], y[6], y[7]};
    Event e;
    for (int a = 0; a < 4; ++a) {
        d[static_cast<std::size_t>(a)] = xi[static_cast<std::size_t>(a)];
        e[a] = y[static_cast<std::size_t>(a)];
    }
    law(e, xi, d.data() + 4);
    return d;
}

State rk4_step(const AccelerationLaw& law, const State& y, double h) {
    auto axpy = [](const State& a, double s, const State& b) {
        State r;
        for (std::size_t i = 0; i < 8; ++i) r[i] = a[i] + s * b[i];
        return r;
    };
    const State k1 = rhs(law, y);
    const State k2 = rhs(law, axpy(y, 0.5 * h, k1));
    const State k3 = rhs(law, axpy(y, 0.5 * h, k2));
    const State k4 = rhs(law, axpy(y, h, k3));
    State out;
    for (std::size_t i = 0; i < 8; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return out;
}

void check_inside(const State& y, const Box& region) {
    const Event e(y[0], y[1], y[2], y[3]);
    if (!region.contains(e)) throw RegionError("trajectory left the working region");
}

// Fixed-step run; returns all samples when `record`, else only the endpoint.
std::vector<CurveSample> run(const AccelerationLaw& law, const State& y0, double s_max, int steps,
                             const Box& region, bool record) {
    std::vector<CurveSample> out;
    const double h = s_max / steps;
    State y = y0;
    auto emit = [&](int i) {
        out.push_back({i * h, Event(y[0], y[1], y[2], y[3]), Vec4{y[4], y[5], y[6], y[7]}});
    };
    check_inside(y, region);
    if (record) emit(0);
    for (int i = 1; i <= steps; ++i) {
        y = rk4_step(law, y, h);
        check_inside(y, region);
        if (record) emit(i);
    }
    if (!record) emit(steps);
    if (record) out.back().s = s_max;
    return out;
}

double state_diff(const CurveSample& a, const CurveSample& b) {
    double m = 0.0;
    for (int i = 0; i < 4; ++i) {
        m = std::max(m, std::abs(a.x[i] - b.x[i]));
        m = std::max(m, std::abs(a.xi[static_cast<std::size_t>(i)] - b.xi[static_cast<std::size_t>(i)]));
    }
    return m;
}

// Weights of the derivative at x0 of the interpolating polynomial on nodes.
std::array<double, 5> derivative_weights(const std::array<double, 5>& nodes, double x0) {
    std::array<double, 5> w{};
    for (std::size_t k = 0; k < 5; ++k) {
        double sum = 0.0;
        for (std::size_t m = 0; m < 5; ++m) {
            if (m == k) continue;
            double prod = 1.0 / (nodes[k] - nodes[m]);
            for (std::size_t l = 0; l < 5; ++l) {
                if (l == k || l == m) continue;
                prod *= (x0 - nodes[l]) / (nodes[k] - nodes[l]);
            }
            sum += prod;
        }
        w[k] = sum;
    }
    return w;
}

}  // namespace

WorldLine::WorldLine(std::vector<CurveSample> samples, Parametrization tag) : samples_(std::move(samples)), tag_(tag) {
    if (samples_.empty()) throw PreconditionError("world line needs at least one sample");
    for (std::size_t i = 1; i < samples_.size(); ++i) {
        if (!(samples_[i].s > samples_[i - 1].s)) throw PreconditionError("world line parameter must increase");
    }
    time_increasing_ = true;
    for (std::size_t i = 1; i < samples_.size(); ++i) {
        if (!(samples_[i].x[0] > samples_[i - 1].x[0])) time_increasing_ = false;
    }
}

double WorldLine::s_begin() const { return samples_.front().s; }
double WorldLine::s_end() const { return samples_.back().s; }

std::size_t WorldLine::segment(double s) const {
    if (samples_.size() < 2) throw PreconditionError("interpolation needs two samples");
    const double slack = 1e-12 * std::max(1.0, std::abs(s_end() - s_begin()));
    if (s < s_begin() - slack || s > s_end() + slack) throw DomainError("parameter outside the world line");
    auto it = std::upper_bound(samples_.begin(), samples_.end(), s,
                               [](double v, const CurveSample& c) { return v < c.s; });
    std::size_t i = it == samples_.begin() ? 0 : static_cast<std::size_t>(it - samples_.begin()) - 1;
    return std::min(i, samples_.size() - 2);
}

Event WorldLine::position(double s) const {
    if (samples_.size() == 1) return samples_.front().x;
    const std::size_t i = segment(s);
    const auto& a = samples_[i];
    const auto& b = samples_[i + 1];
    const double h = b.s - a.s;
    const Hermite w = hermite((s - a.s) / h);
    Event e;
    for (int k = 0; k < 4; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        e[k] = w.h00 * a.x[k] + w.h10 * h * a.xi[uk] + w.h01 * b.x[k] + w.h11 * h * b.xi[uk];
    }
    return e;
}

Vec4 WorldLine::tangent(double s) const {
    if (samples_.size() == 1) return samples_.front().xi;
    const std::size_t i = segment(s);
    const auto& a = samples_[i];
    const auto& b = samples_[i + 1];
    const double h = b.s - a.s;
    const Hermite w = hermite_d((s - a.s) / h);
    Vec4 v{};
    for (std::size_t k = 0; k < 4; ++k) {
        const int ik = static_cast<int>(k);
        v[k] = (w.h00 * a.x[ik] + w.h01 * b.x[ik]) / h + w.h10 * a.xi[k] + w.h11 * b.xi[k];
    }
    return v;
}

double WorldLine::parameter_at_time(double t) const {
    if (!time_increasing_) throw PreconditionError("curve meets a constant-time slice more than once");
    const double t0 = samples_.front().x[0];
    const double t1 = samples_.back().x[0];
    const double slack = 1e-12 * std::max(1.0, std::abs(t1 - t0));
    if (t < t0 - slack || t > t1 + slack) throw DomainError("time outside the world line");
    if (samples_.size() == 1) return samples_.front().s;
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double v, const CurveSample& c) { return v < c.x[0]; });
    std::size_t i = it == samples_.begin() ? 0 : static_cast<std::size_t>(it - samples_.begin()) - 1;
    i = std::min(i, samples_.size() - 2);
    const auto& a = samples_[i];
    const auto& b = samples_[i + 1];
    double s = a.s + (b.s - a.s) * (t - a.x[0]) / (b.x[0] - a.x[0]);
    for (int it_n = 0; it_n < 50; ++it_n) {
        const double f = position(s)[0] - t;
        const double df = tangent(s)[0];
        const double ds = f / df;
        s = std::clamp(s - ds, a.s, b.s);
        if (std::abs(ds) <= 1e-15 * std::max(1.0, std::abs(s))) break;
    }
    return s;
}

Event WorldLine::at_time(double t) const { return position(parameter_at_time(t)); }

Vec4 WorldLine::velocity_at_time(double t) const {
    Vec4 v = tangent(parameter_at_time(t));
    const double v0 = v[0];
    for (double& c : v) c /= v0;
    return v;
}

void WorldLine::write_csv(std::ostream& os) const {
    os << "s,t,x,y,z,xi0,xi1,xi2,xi3\n";
    for (const auto& c : samples_) {
        os << fmt_num(c.s) << ',' << fmt_num(c.x[0]) << ',' << fmt_num(c.x[1]) << ',' << fmt_num(c.x[2]) << ','
           << fmt_num(c.x[3]);
        for (double v : c.xi) os << ',' << fmt_num(v);
        os << '\n';
    }
}

WorldLine reparametrize_by_time(const WorldLine& w) {
    std::vector<CurveSample> out;
    out.reserve(w.size());
    for (const auto& c : w.samples()) {
        if (std::abs(c.xi[0]) <= kTimelikeThreshold) throw PreconditionError("curve is not timelike");
        CurveSample n = c;
        n.s = c.x[0];
        for (double& v : n.xi) v /= c.xi[0];
        n.xi[0] = 1.0;
        out.push_back(n);
    }
    if (out.size() > 1 && out.front().s > out.back().s) std::reverse(out.begin(), out.end());
    return WorldLine(std::move(out), Parametrization::TimeNormalized);
}

WorldLine integrate_law(const AccelerationLaw& law, const Event& e0, const Vec4& v0, double s_max, double tol,
                        const IntegratorOptions& opt) {
    if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
    if (!(s_max > 0.0)) throw PreconditionError("parameter span must be positive");
    const State y0{e0[0], e0[1], e0[2], e0[3], v0[0], v0[1], v0[2], v0[3]};
    int steps = 16;
    if (opt.fixed_step > 0.0) {
        steps = std::max(1, static_cast<int>(std::ceil(s_max / opt.fixed_step - 1e-9)));
    } else {
        CurveSample coarse = run(law, y0, s_max, steps, opt.region, false).back();
        for (int k = 0;; ++k) {
            CurveSample fine = run(law, y0, s_max, 2 * steps, opt.region, false).back();
            if (state_diff(coarse, fine) < tol) break;
            if (k >= opt.max_halvings) throw PreconditionError("step selection did not reach the tolerance");
            steps *= 2;
            coarse = fine;
        }
    }
    return WorldLine(run(law, y0, s_max, steps, opt.region, true), Parametrization::Affine);
}

WorldLine integrate_geodesic(const DerivativeOperator& op, const Event& e0, const Vec4& v0, double s_max, double tol,
                             const IntegratorOptions& opt) {
    AccelerationLaw law = [op](const Event& e, const Vec4& xi, double* acc) {
        Connection C;
        op.connection(e, C.data());
        for (int a = 0; a < 4; ++a) {
            double v = 0.0;
            for (int n = 0; n < 4; ++n)
                for (int m = 0; m < 4; ++m)
                    v += C[ci(a, n, m)] * xi[static_cast<std::size_t>(n)] * xi[static_cast<std::size_t>(m)];
            acc[a] = v;
        }
    };
    return integrate_law(law, e0, v0, s_max, tol, opt);
}

WorldLine integrate_forced(const DerivativeOperator& flat, const TensorField& potential, const Event& e0,
                           const Vec4& v0, double s_max, double tol, const IntegratorOptions& opt) {
    if (!potential.valence().empty()) throw SlotError("potential must be a scalar field");
    const TensorField grad = derivative_field(potential);
    AccelerationLaw law = [flat, grad](const Event& e, const Vec4& xi, double* acc) {
        Connection C;
        flat.connection(e, C.data());
        std::array<double, 4> g;
        grad.evaluate(e, g.data());
        const double tx = xi[0];
        for (int a = 0; a < 4; ++a) {
            double v = 0.0;
            for (int n = 0; n < 4; ++n)
                for (int m = 0; m < 4; ++m)
                    v += C[ci(a, n, m)] * xi[static_cast<std::size_t>(n)] * xi[static_cast<std::size_t>(m)];
            // grad^a phi = h^ab d_b phi with h = diag(0,1,1,1)
            acc[a] = v - (a == 0 ? 0.0 : tx * tx * g[static_cast<std::size_t>(a)]);
        }
    };
    return integrate_law(law, e0, v0, s_max, tol, opt);
}

GeodesicResidual geodesic_residual(const DerivativeOperator& op, const WorldLine& w) {
    const auto& S = w.samples();
    if (S.size() < 5) throw PreconditionError("geodesic residual needs at least 5 samples");
    GeodesicResidual r;
    for (std::size_t i = 0; i < S.size(); ++i) {
        const std::size_t lo = std::min(i >= 2 ? i - 2 : 0, S.size() - 5);
        std::array<double, 5> nodes;
        for (std::size_t k = 0; k < 5; ++k) nodes[k] = S[lo + k].s;
        const auto wts = derivative_weights(nodes, S[i].s);
        Vec4 dxi{};
        for (std::size_t k = 0; k < 5; ++k)
            for (std::size_t a = 0; a < 4; ++a) dxi[a] += wts[k] * S[lo + k].xi[a];
        Connection C;
        op.connection(S[i].x, C.data());
        Vec4 acc{};
        for (int a = 0; a < 4; ++a) {
            double v = 0.0;
            for (int n = 0; n < 4; ++n)
                for (int m = 0; m < 4; ++m)
                    v += C[ci(a, n, m)] * S[i].xi[static_cast<std::size_t>(n)] * S[i].xi[static_cast<std::size_t>(m)];
            acc[static_cast<std::size_t>(a)] = dxi[static_cast<std::size_t>(a)] - v;
        }
        const double tx = S[i].xi[0];
        if (std::abs(tx) <= kTimelikeThreshold) throw PreconditionError("reparametrization test needs a timelike curve");
        const double ratio = acc[0] / tx;
        for (std::size_t a = 0; a < 4; ++a) {
            r.affine = std::max(r.affine, std::abs(acc[a]));
            r.reparam = std::max(r.reparam, std::abs(acc[a] - ratio * S[i].xi[a]));
        }
    }
    return r;
}

double sup_distance(const WorldLine& a, const WorldLine& b) {
    double m = 0.0;
    for (const auto& c : a.samples()) {
        const Event q = b.position(c.s);
        double d2 = 0.0;
        for (int k = 0; k < 4; ++k) d2 += (c.x[k] - q[k]) * (c.x[k] - q[k]);
        m = std::max(m, std::sqrt(d2));
    }
    return m;
}

}  // namespace nclab
