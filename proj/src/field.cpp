#include "nclab/field.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "nclab/errors.hpp"

namespace nclab {

struct TensorField::State {
    Valence valence;
    std::size_t ncomp = 1;
    Box box;
    Evaluator eval;
    Backend backend = Backend::Analytic;
    double spacing = 0.0;
    std::optional<TensorField> derivative;
};

double Lattice::spacing(int axis) const {
    const auto a = static_cast<std::size_t>(axis);
    return (box.hi[a] - box.lo[a]) / (n[a] - 1);
}

std::size_t Lattice::node_count() const {
    std::size_t c = 1;
    for (int k : n) c *= static_cast<std::size_t>(k);
    return c;
}

TensorField::TensorField(std::shared_ptr<const State> s) : s_(std::move(s)) {}

TensorField::TensorField(Valence valence, Box box, Evaluator eval, Backend backend) {
    auto s = std::make_shared<State>();
    s->ncomp = component_count(valence.size());
    s->valence = std::move(valence);
    s->box = box;
    s->eval = std::move(eval);
    s->backend = backend;
    s_ = std::move(s);
}

TensorField TensorField::constant(const Tensor& value, const Box& box) {
    std::vector<double> c(value.components().begin(), value.components().end());
    TensorField f(value.slots(), box, [c](const Event&, double* out) {
        std::copy(c.begin(), c.end(), out);
    });
    Valence dv = value.slots();
    dv.insert(dv.begin(), Slot::Down);
    return f.with_derivative(zero(dv, box));
}

TensorField TensorField::zero(Valence valence, const Box& box) {
    const std::size_t n = component_count(valence.size());
    auto s = std::make_shared<State>();
    s->ncomp = n;
    s->valence = valence;
    s->box = box;
    s->eval = [n](const Event&, double* out) { std::fill(out, out + n, 0.0); };
    if (valence.size() < kMaxRank) {
        Valence dv = valence;
        dv.insert(dv.begin(), Slot::Down);
        s->derivative = zero(dv, box);
    }
    return TensorField(std::shared_ptr<const State>(std::move(s)));
}

namespace {

struct Stencil1D {
    int base = 0;  // index of the first of four nodes
    std::array<double, 4> w{};
    std::array<double, 4> dw{};
};

Stencil1D catmull_rom(double x, double lo, double h, int n) {
    const double s = (x - lo) / h;
    int i = static_cast<int>(std::floor(s));
    if (i < 1) i = 1;
    if (i > n - 3) i = n - 3;
    const double u = s - i;
    const double u2 = u * u;
    const double u3 = u2 * u;
    Stencil1D st;
    st.base = i - 1;
    st.w = {0.5 * (-u3 + 2 * u2 - u), 0.5 * (3 * u3 - 5 * u2 + 2), 0.5 * (-3 * u3 + 4 * u2 + u),
            0.5 * (u3 - u2)};
    st.dw = {0.5 * (-3 * u2 + 4 * u - 1) / h, 0.5 * (9 * u2 - 10 * u) / h, 0.5 * (-9 * u2 + 8 * u + 1) / h,
             0.5 * (3 * u2 - 2 * u) / h};
    return st;
}

}  // namespace

TensorField TensorField::sampled(const TensorField& source, const Lattice& lattice) {
    for (int k : lattice.n) {
        if (k < 4) throw PreconditionError("grid backend needs at least 4 nodes per axis");
    }
    const std::size_t nc = source.components();
    auto samples = std::make_shared<std::vector<double>>(lattice.node_count() * nc);
    std::array<double, 4> h{};
    for (int a = 0; a < 4; ++a) h[static_cast<std::size_t>(a)] = lattice.spacing(a);
    const auto& n = lattice.n;
    std::size_t node = 0;
    for (int i0 = 0; i0 < n[0]; ++i0)
        for (int i1 = 0; i1 < n[1]; ++i1)
            for (int i2 = 0; i2 < n[2]; ++i2)
                for (int i3 = 0; i3 < n[3]; ++i3, ++node) {
                    const Event e(lattice.box.lo[0] + i0 * h[0], lattice.box.lo[1] + i1 * h[1],
                                  lattice.box.lo[2] + i2 * h[2], lattice.box.lo[3] + i3 * h[3]);
                    source.evaluate(e, samples->data() + node * nc);
                }

    // Shared kernel: derivative_axis < 0 gives values, otherwise d/dx^axis.
    auto kernel = [samples, lattice, h, nc](const Event& e, int derivative_axis, double* out) {
        std::array<Stencil1D, 4> st;
        for (int a = 0; a < 4; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            st[ua] = catmull_rom(e[a], lattice.box.lo[ua], h[ua], lattice.n[ua]);
        }
        std::fill(out, out + nc, 0.0);
        const auto& n = lattice.n;
        for (int a0 = 0; a0 < 4; ++a0) {
            const double w0 = derivative_axis == 0 ? st[0].dw[a0] : st[0].w[a0];
            for (int a1 = 0; a1 < 4; ++a1) {
                const double w1 = w0 * (derivative_axis == 1 ? st[1].dw[a1] : st[1].w[a1]);
                for (int a2 = 0; a2 < 4; ++a2) {
                    const double w2 = w1 * (derivative_axis == 2 ? st[2].dw[a2] : st[2].w[a2]);
                    for (int a3 = 0; a3 < 4; ++a3) {
                        const double w = w2 * (derivative_axis == 3 ? st[3].dw[a3] : st[3].w[a3]);
                        const std::size_t idx =
                            ((static_cast<std::size_t>(st[0].base + a0) * n[1] + (st[1].base + a1)) * n[2] +
                             (st[2].base + a2)) *
                                n[3] +
                            (st[3].base + a3);
                        const double* src = samples->data() + idx * nc;
                        for (std::size_t c = 0; c < nc; ++c) out[c] += w * src[c];
                    }
                }
            }
        }
    };

    double hmax = 0.0;
    for (double v : h) hmax = std::max(hmax, v);
    Box valid = lattice.box;
    for (std::size_t a = 0; a < 4; ++a) {
        valid.lo[a] += h[a];
        valid.hi[a] -= h[a];
    }

    auto s = std::make_shared<State>();
    s->valence = source.valence();
    s->ncomp = nc;
    s->box = valid;
    s->backend = Backend::Grid;
    s->spacing = hmax;
    s->eval = [kernel](const Event& e, double* out) { kernel(e, -1, out); };
    if (source.valence().size() < kMaxRank) {
        Valence dv = source.valence();
        dv.insert(dv.begin(), Slot::Down);
        auto d = std::make_shared<State>();
        d->valence = dv;
        d->ncomp = 4 * nc;
        d->box = valid;
        d->backend = Backend::Grid;
        d->spacing = hmax;
        d->eval = [kernel, nc](const Event& e, double* out) {
            for (int a = 0; a < 4; ++a) kernel(e, a, out + static_cast<std::size_t>(a) * nc);
        };
        s->derivative = TensorField(std::shared_ptr<const State>(std::move(d)));
    }
    return TensorField(std::shared_ptr<const State>(std::move(s)));
}

TensorField TensorField::with_derivative(TensorField derivative) const {
    Valence expect = s_->valence;
    expect.insert(expect.begin(), Slot::Down);
    if (derivative.valence() != expect) throw SlotError("attached derivative has the wrong valence");
    auto s = std::make_shared<State>(*s_);
    s->derivative = std::move(derivative);
    return TensorField(std::shared_ptr<const State>(std::move(s)));
}

const Valence& TensorField::valence() const { return s_->valence; }
std::size_t TensorField::components() const { return s_->ncomp; }
const Box& TensorField::box() const { return s_->box; }
Backend TensorField::backend() const { return s_->backend; }
double TensorField::spacing() const { return s_->spacing; }

Tensor TensorField::operator()(const Event& e) const {
    if (!s_->box.contains(e)) throw DomainError("field evaluated outside its bounding box");
    Tensor t(s_->valence);
    s_->eval(e, t.data());
    return t;
}

void TensorField::evaluate(const Event& e, double* out) const { s_->eval(e, out); }

bool TensorField::has_exact_derivative() const { return s_->derivative.has_value(); }

const TensorField& TensorField::exact_derivative() const {
    if (!s_->derivative) throw PreconditionError("field has no exact derivative attached");
    return *s_->derivative;
}

TensorField TensorField::scaled(double k) const {
    auto base = s_;
    const std::size_t n = s_->ncomp;
    auto s = std::make_shared<State>(*s_);
    s->eval = [base, n, k](const Event& e, double* out) {
        base->eval(e, out);
        for (std::size_t i = 0; i < n; ++i) out[i] *= k;
    };
    if (s_->derivative) s->derivative = s_->derivative->scaled(k);
    return TensorField(std::shared_ptr<const State>(std::move(s)));
}

TensorField TensorField::plus(const TensorField& other) const {
    if (other.valence() != valence()) throw SlotError("valence mismatch in field sum");
    auto a = s_;
    auto b = other.s_;
    const std::size_t n = s_->ncomp;
    auto s = std::make_shared<State>();
    s->valence = s_->valence;
    s->ncomp = n;
    for (std::size_t i = 0; i < 4; ++i) {
        s->box.lo[i] = std::max(a->box.lo[i], b->box.lo[i]);
        s->box.hi[i] = std::min(a->box.hi[i], b->box.hi[i]);
    }
    s->backend = (a->backend == Backend::Grid || b->backend == Backend::Grid) ? Backend::Grid : Backend::Analytic;
    s->spacing = std::max(a->spacing, b->spacing);
    s->eval = [a, b, n](const Event& e, double* out) {
        a->eval(e, out);
        std::vector<double> tmp(n);
        b->eval(e, tmp.data());
        for (std::size_t i = 0; i < n; ++i) out[i] += tmp[i];
    };
    if (a->derivative && b->derivative) s->derivative = a->derivative->plus(*b->derivative);
    return TensorField(std::shared_ptr<const State>(std::move(s)));
}

double default_step(const TensorField& f) { return 1e-3 * f.box().extent(); }

void partial_derivative_into(const TensorField& f, const Event& e, double step, double* out) {
    if (!(step > 0.0)) throw DomainError("finite-difference step must be positive");
    if (!f.box().contains(e, 2.0 * step)) throw DomainError("finite-difference stencil exits the bounding box");
    const std::size_t n = f.components();
    std::vector<double> buf(4 * n);
    double* fm2 = buf.data();
    double* fm1 = fm2 + n;
    double* fp1 = fm1 + n;
    double* fp2 = fp1 + n;
    for (int a = 0; a < 4; ++a) {
        Event q = e;
        q[a] = e[a] - 2 * step;
        f.evaluate(q, fm2);
        q[a] = e[a] - step;
        f.evaluate(q, fm1);
        q[a] = e[a] + step;
        f.evaluate(q, fp1);
        q[a] = e[a] + 2 * step;
        f.evaluate(q, fp2);
        double* o = out + static_cast<std::size_t>(a) * n;
        for (std::size_t c = 0; c < n; ++c) {
            o[c] = (fm2[c] - 8.0 * fm1[c] + 8.0 * fp1[c] - fp2[c]) / (12.0 * step);
        }
    }
}

Tensor partial_derivative(const TensorField& f, const Event& e, std::optional<double> step) {
    if (f.valence().size() >= kMaxRank) throw SlotError("derivative would exceed rank 6");
    if (!step && f.has_exact_derivative()) {
        if (!f.box().contains(e)) throw DomainError("derivative evaluated outside the bounding box");
        Tensor t(f.exact_derivative().valence());
        f.exact_derivative().evaluate(e, t.data());
        return t;
    }
    Valence dv = f.valence();
    dv.insert(dv.begin(), Slot::Down);
    Tensor t(dv);
    partial_derivative_into(f, e, step.value_or(default_step(f)), t.data());
    return t;
}

TensorField derivative_field(const TensorField& f, std::optional<double> step) {
    if (!step && f.has_exact_derivative()) return f.exact_derivative();
    if (f.valence().size() >= kMaxRank) throw SlotError("derivative would exceed rank 6");
    const double h = step.value_or(default_step(f));
    Valence dv = f.valence();
    dv.insert(dv.begin(), Slot::Down);
    return TensorField(dv, f.box().shrunk(2.0 * h),
                       [f, h](const Event& e, double* out) { partial_derivative_into(f, e, h, out); },
                       f.backend());
}

}  // namespace nclab
