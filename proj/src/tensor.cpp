#include "nclab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nclab/errors.hpp"

namespace nclab {

namespace {

std::size_t pow4(std::size_t k) { return std::size_t{1} << (2 * k); }

void check_rank(std::size_t r) {
    if (r > kMaxRank) throw SlotError("tensor rank " + std::to_string(r) + " exceeds 6");
}

// Digit j (slot j) of a flat index of a rank-r tensor.
int digit(std::size_t flat, std::size_t r, std::size_t j) {
    return static_cast<int>((flat >> (2 * (r - 1 - j))) & 3u);
}

int permutation_sign(std::vector<std::size_t> p) {
    int sign = 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (p[i] != i) {
            std::swap(p[i], p[p[i]]);
            sign = -sign;
        }
    }
    return sign;
}

void require_same_kind(const Tensor& t, const std::vector<std::size_t>& slots, const char* what) {
    if (slots.empty()) return;
    for (std::size_t s : slots) {
        if (s >= t.rank()) throw SlotError(std::string(what) + ": slot out of range");
    }
    const Slot k = t.slot(slots.front());
    for (std::size_t s : slots) {
        if (t.slot(s) != k) throw SlotError(std::string(what) + ": mixed slot kinds");
    }
    std::vector<std::size_t> sorted = slots;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw SlotError(std::string(what) + ": repeated slot");
    }
}

// Shared body of symmetrize/antisymmetrize.
Tensor alternate(const Tensor& t, const std::vector<std::size_t>& slots, bool signed_sum) {
    const std::size_t k = slots.size();
    if (k < 2) return t;
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<std::size_t>> perms;
    std::vector<int> signs;
    do {
        perms.push_back(perm);
        signs.push_back(signed_sum ? permutation_sign(perm) : 1);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double norm = 1.0 / static_cast<double>(perms.size());

    Tensor out(t.slots());
    const std::size_t r = t.rank();
    std::vector<int> idx(r);
    for (std::size_t f = 0; f < t.size(); ++f) {
        for (std::size_t j = 0; j < r; ++j) idx[j] = digit(f, r, j);
        double acc = 0.0;
        for (std::size_t p = 0; p < perms.size(); ++p) {
            std::vector<int> src = idx;
            for (std::size_t j = 0; j < k; ++j) src[slots[j]] = idx[slots[perms[p][j]]];
            std::size_t g = 0;
            for (std::size_t j = 0; j < r; ++j) g = 4 * g + static_cast<std::size_t>(src[j]);
            acc += signs[p] * t[g];
        }
        out[f] = norm * acc;
    }
    return out;
}

}  // namespace

Event::Event(double t, double x1, double x2, double x3) : Event(std::array<double, 4>{t, x1, x2, x3}) {}

Event::Event(const std::array<double, 4>& c) : x(c) {
    for (double v : x) {
        if (!std::isfinite(v)) throw DomainError("event coordinate is not finite");
    }
}

bool Box::contains(const Event& e, double margin) const {
    for (int i = 0; i < 4; ++i) {
        if (e[i] < lo[i] + margin || e[i] > hi[i] - margin) return false;
    }
    return true;
}

double Box::extent() const {
    double m = 0.0;
    for (int i = 0; i < 4; ++i) m = std::max(m, hi[i] - lo[i]);
    return m;
}

Box Box::shrunk(double margin) const {
    Box b = *this;
    for (int i = 0; i < 4; ++i) {
        b.lo[i] += margin;
        b.hi[i] -= margin;
    }
    return b;
}

Tensor::Tensor() : c_(1, 0.0) {}

Tensor::Tensor(Valence slots) : slots_(std::move(slots)) {
    check_rank(slots_.size());
    c_.assign(pow4(slots_.size()), 0.0);
}

Tensor::Tensor(Valence slots, std::vector<double> components)
    : slots_(std::move(slots)), c_(std::move(components)) {
    check_rank(slots_.size());
    if (c_.size() != pow4(slots_.size())) throw SlotError("component count does not match valence");
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.c_[0] = v;
    return t;
}

Tensor Tensor::vector(const std::array<double, 4>& v) {
    return Tensor({Slot::Up}, std::vector<double>(v.begin(), v.end()));
}

Tensor Tensor::covector(const std::array<double, 4>& v) {
    return Tensor({Slot::Down}, std::vector<double>(v.begin(), v.end()));
}

Tensor Tensor::identity() {
    Tensor t({Slot::Up, Slot::Down});
    for (int i = 0; i < 4; ++i) t[static_cast<std::size_t>(5 * i)] = 1.0;
    return t;
}

Slot Tensor::slot(std::size_t i) const {
    if (i >= slots_.size()) throw SlotError("slot out of range");
    return slots_[i];
}

int Tensor::up_count() const {
    return static_cast<int>(std::count(slots_.begin(), slots_.end(), Slot::Up));
}

int Tensor::down_count() const { return static_cast<int>(rank()) - up_count(); }

std::size_t Tensor::flat_index(std::initializer_list<int> idx) const {
    if (idx.size() != rank()) throw SlotError("index arity does not match rank");
    std::size_t f = 0;
    for (int i : idx) {
        if (i < 0 || i > 3) throw SlotError("index value out of range");
        f = 4 * f + static_cast<std::size_t>(i);
    }
    return f;
}

double& Tensor::at(std::initializer_list<int> idx) { return c_[flat_index(idx)]; }
double Tensor::at(std::initializer_list<int> idx) const { return c_[flat_index(idx)]; }

double Tensor::value() const {
    if (rank() != 0) throw SlotError("value() on a non-scalar tensor");
    return c_[0];
}

Tensor& Tensor::operator+=(const Tensor& o) {
    if (o.slots_ != slots_) throw SlotError("valence mismatch in addition");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& o) {
    if (o.slots_ != slots_) throw SlotError("valence mismatch in subtraction");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Tensor& Tensor::operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(double s, Tensor a) { return a *= s; }

std::size_t component_count(std::size_t rank) { return pow4(rank); }

double max_abs_diff(const Tensor& a, const Tensor& b) { return (a - b).max_abs(); }

Tensor outer(const Tensor& a, const Tensor& b) {
    Valence s = a.slots();
    s.insert(s.end(), b.slots().begin(), b.slots().end());
    Tensor out(std::move(s));
    const std::size_t nb = b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < nb; ++j) out[i * nb + j] = a[i] * b[j];
    }
    return out;
}

Tensor contract(const Tensor& t, std::size_t up_slot, std::size_t down_slot) {
    const std::size_t r = t.rank();
    if (up_slot >= r || down_slot >= r) throw SlotError("contract: slot out of range");
    if (up_slot == down_slot) throw SlotError("contract: identical slots");
    if (t.slot(up_slot) != Slot::Up || t.slot(down_slot) != Slot::Down) {
        throw SlotError("contract: slot kind mismatch");
    }
    Valence s;
    for (std::size_t j = 0; j < r; ++j) {
        if (j != up_slot && j != down_slot) s.push_back(t.slot(j));
    }
    Tensor out(s);
    const std::size_t ro = s.size();
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < r; ++j) {
        if (j != up_slot && j != down_slot) keep.push_back(j);
    }
    for (std::size_t f = 0; f < out.size(); ++f) {
        std::size_t base = 0;
        // place the kept digits into their absolute positions
        for (std::size_t j = 0; j < ro; ++j) {
            base += static_cast<std::size_t>(digit(f, ro, j)) << (2 * (r - 1 - keep[j]));
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            acc += t[base + (i << (2 * (r - 1 - up_slot))) + (i << (2 * (r - 1 - down_slot)))];
        }
        out[f] = acc;
    }
    return out;
}

Tensor antisymmetrize(const Tensor& t, const std::vector<std::size_t>& slots) {
    require_same_kind(t, slots, "antisymmetrize");
    return alternate(t, slots, true);
}

Tensor symmetrize(const Tensor& t, const std::vector<std::size_t>& slots) {
    require_same_kind(t, slots, "symmetrize");
    return alternate(t, slots, false);
}

Tensor permute(const Tensor& t, const std::vector<std::size_t>& perm) {
    const std::size_t r = t.rank();
    if (perm.size() != r) throw SlotError("permute: arity mismatch");
    std::vector<std::size_t> check = perm;
    std::sort(check.begin(), check.end());
    for (std::size_t j = 0; j < r; ++j) {
        if (check[j] != j) throw SlotError("permute: not a permutation");
    }
    Valence s(r);
    for (std::size_t j = 0; j < r; ++j) s[j] = t.slot(perm[j]);
    Tensor out(s);
    for (std::size_t f = 0; f < out.size(); ++f) {
        std::size_t g = 0;
        for (std::size_t j = 0; j < r; ++j) {
            g += static_cast<std::size_t>(digit(f, r, j)) << (2 * (r - 1 - perm[j]));
        }
        out[f] = t[g];
    }
    return out;
}

Tensor levi_civita() {
    Tensor e({Slot::Down, Slot::Down, Slot::Down, Slot::Down});
    std::vector<std::size_t> p = {0, 1, 2, 3};
    do {
        const std::size_t f = ((p[0] * 4 + p[1]) * 4 + p[2]) * 4 + p[3];
        e[f] = permutation_sign(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return e;
}

}  // namespace nclab
