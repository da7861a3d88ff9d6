#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>

#include "nclab/tensor.hpp"

namespace nclab {

enum class Backend { Analytic, Grid };

// Uniform lattice over a box: n[i] nodes along axis i, endpoints included.
struct Lattice {
    Box box;
    std::array<int, 4> n{};

    double spacing(int axis) const;
    std::size_t node_count() const;
};

// Smooth tensor field on a box of the chart. Immutable; copies share state.
//
// An optional exact derivative may be attached. partial_derivative without an
// explicit step uses it; with an explicit step it always differences.
class TensorField {
public:
    using Evaluator = std::function<void(const Event&, double* out)>;

    TensorField(Valence valence, Box box, Evaluator eval, Backend backend = Backend::Analytic);

    static TensorField constant(const Tensor& value, const Box& box);
    static TensorField zero(Valence valence, const Box& box);

    // Samples `source` on the lattice and interpolates with tensor-product
    // Catmull-Rom cubics. Valid on the lattice box shrunk by one spacing; the
    // interpolant's own derivative is attached.
    static TensorField sampled(const TensorField& source, const Lattice& lattice);

    TensorField with_derivative(TensorField derivative) const;

    const Valence& valence() const;
    std::size_t components() const;
    const Box& box() const;
    Backend backend() const;
    // Lattice spacing for grid fields, 0 for analytic ones.
    double spacing() const;

    Tensor operator()(const Event& e) const;
    void evaluate(const Event& e, double* out) const;  // unchecked box
    bool has_exact_derivative() const;
    const TensorField& exact_derivative() const;

    TensorField scaled(double s) const;
    TensorField plus(const TensorField& other) const;  // derivatives combine when both exist

private:
    struct State;
    explicit TensorField(std::shared_ptr<const State> s);
    std::shared_ptr<const State> s_;
};

double default_step(const TensorField& f);

// 4th-order central differences per coordinate, new Down slot first.
// Without `step`, an attached exact derivative is used when present.
Tensor partial_derivative(const TensorField& f, const Event& e, std::optional<double> step = std::nullopt);
void partial_derivative_into(const TensorField& f, const Event& e, double step, double* out);

// The derivative as a field: the attached exact derivative, or a
// finite-difference wrapper whose box is shrunk by the stencil reach.
TensorField derivative_field(const TensorField& f, std::optional<double> step = std::nullopt);

}  // namespace nclab
