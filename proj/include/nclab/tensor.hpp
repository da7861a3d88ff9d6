#pragma once

// Dense tensors on a 4-dimensional chart.
//
// Slot convention (the single place it is defined):
//   * A tensor carries an ordered list of slots, each Up (contravariant) or
//     Down (covariant). Slot order is the order indices are written, e.g.
//     R^a_bcd has slots {Up, Down, Down, Down}.
//   * Components are stored row-major in slot order: index (i0,...,ik-1) maps
//     to sum_j i_j * 4^(k-1-j).
//   * Coordinate 0 is time, 1..3 are spatial.
//   * Derivatives prepend their covariant slot: d_n C^a_bc has slots
//     {Down, Up, Down, Down} with n first.
//   * Slot positions passed to contract/antisymmetrize are absolute positions
//     in this list.

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace nclab {

inline constexpr int kDim = 4;
inline constexpr std::size_t kMaxRank = 6;

enum class Slot : unsigned char { Up, Down };
using Valence = std::vector<Slot>;

struct Event {
    std::array<double, 4> x{};

    Event() = default;
    Event(double t, double x1, double x2, double x3);
    explicit Event(const std::array<double, 4>& c);

    double& operator[](int i) { return x[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return x[static_cast<std::size_t>(i)]; }
    double t() const { return x[0]; }
};

// Axis-aligned box in the chart; time is axis 0.
struct Box {
    std::array<double, 4> lo{};
    std::array<double, 4> hi{};

    bool contains(const Event& e, double margin = 0.0) const;
    // Largest side length.
    double extent() const;
    Box shrunk(double margin) const;
};

class Tensor {
public:
    Tensor();  // scalar zero
    explicit Tensor(Valence slots);
    Tensor(Valence slots, std::vector<double> components);

    static Tensor scalar(double v);
    static Tensor vector(const std::array<double, 4>& v);
    static Tensor covector(const std::array<double, 4>& v);
    static Tensor identity();  // delta^a_b

    std::size_t rank() const { return slots_.size(); }
    const Valence& slots() const { return slots_; }
    Slot slot(std::size_t i) const;
    int up_count() const;
    int down_count() const;
    std::size_t size() const { return c_.size(); }

    double& operator[](std::size_t flat) { return c_[flat]; }
    double operator[](std::size_t flat) const { return c_[flat]; }
    double& at(std::initializer_list<int> idx);
    double at(std::initializer_list<int> idx) const;
    double value() const;  // rank-0 read

    double* data() { return c_.data(); }
    const double* data() const { return c_.data(); }
    std::span<const double> components() const { return c_; }

    Tensor& operator+=(const Tensor& o);
    Tensor& operator-=(const Tensor& o);
    Tensor& operator*=(double s);

    double max_abs() const;

private:
    std::size_t flat_index(std::initializer_list<int> idx) const;

    Valence slots_;
    std::vector<double> c_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(double s, Tensor a);

std::size_t component_count(std::size_t rank);
double max_abs_diff(const Tensor& a, const Tensor& b);

Tensor outer(const Tensor& a, const Tensor& b);

// Sum over a paired Up slot and Down slot; the two slots are removed.
Tensor contract(const Tensor& t, std::size_t up_slot, std::size_t down_slot);

// Alternation with 1/k! over the listed slots, all of the same kind.
Tensor antisymmetrize(const Tensor& t, const std::vector<std::size_t>& slots);
Tensor symmetrize(const Tensor& t, const std::vector<std::size_t>& slots);

// Result slot j is input slot perm[j].
Tensor permute(const Tensor& t, const std::vector<std::size_t>& perm);

// Alternating symbol with eps_0123 = +1, all slots Down.
Tensor levi_civita();

}  // namespace nclab
