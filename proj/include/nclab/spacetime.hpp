#pragma once

#include <array>
#include <optional>
#include <span>

#include "nclab/field.hpp"

namespace nclab {

// Flat component arrays used on hot paths.
//   C[a][b][c]      -> a*16 + b*4 + c         (C^a_bc)
//   dC[n][a][b][c]  -> n*64 + a*16 + b*4 + c  (d_n C^a_bc)
//   R[a][b][c][d]   -> a*64 + b*16 + c*4 + d  (R^a_bcd)
using Connection = std::array<double, 64>;
using ConnectionDerivative = std::array<double, 256>;
using Curvature = std::array<double, 256>;

constexpr std::size_t ci(int a, int b, int c) { return static_cast<std::size_t>(a * 16 + b * 4 + c); }
constexpr std::size_t ri(int a, int b, int c, int d) { return static_cast<std::size_t>(a * 64 + b * 16 + c * 4 + d); }

// A derivative operator stored as its difference field C^a_bc from the
// coordinate operator d. Action:
//   nabla_a xi^b    = d_a xi^b    - C^b_an xi^n
//   nabla_a sigma_b = d_a sigma_b + C^n_ab sigma_n
// so the geodesic equation reads  xi^n nabla_n xi^a = xi'^a - C^a_nm xi^n xi^m.
class DerivativeOperator {
public:
    explicit DerivativeOperator(TensorField difference_field);
    static DerivativeOperator coordinate(const Box& box);

    const TensorField& difference_field() const { return c_; }
    const Box& box() const { return c_.box(); }
    bool is_coordinate() const { return coordinate_; }

    void connection(const Event& e, double* C) const;
    // Exact when the field carries a derivative, otherwise default-step differences.
    void connection_derivative(const Event& e, double* dC) const;

private:
    TensorField c_;
    bool coordinate_ = false;
};

// Sum of difference fields. The extra field must be symmetric in its lower
// slots; this is checked on quasi-random events of its box.
DerivativeOperator compose_operators(const DerivativeOperator& op, const TensorField& extra);

struct ClassicalSpacetime {
    TensorField temporal_metric;  // t_a
    TensorField spatial_metric;   // h^ab
    DerivativeOperator op;
    Box region;
};

// t_a = (1,0,0,0), h^ab = diag(0,1,1,1) on the region.
ClassicalSpacetime adapted_spacetime(const DerivativeOperator& op, const Box& region);

TensorField covariant_derivative(const DerivativeOperator& op, const TensorField& f);

struct StructureReport {
    double orthogonality = 0.0;     // |h^ab t_b|
    double signature = 0.0;         // smallest |eigenvalue| of h
    double min_spatial_eigen = 0.0; // must stay positive
    double compat_temporal = 0.0;   // |nabla_a t_b|
    double compat_spatial = 0.0;    // |nabla_a h^bc|
    bool signature_ok = true;

    double worst() const;
};

StructureReport check_structure(const ClassicalSpacetime& st, std::span<const Event> events);

void riemann_components(const double* C, const double* dC, double* R);

struct CurvatureReport {
    TensorField riemann;         // R^a_bcd
    TensorField ricci;           // R_ab = R^n_abn
    TensorField ricci_raised;    // R^ab
    TensorField riemann_raised;  // R^abcd
    TensorField mixed;           // R^ab_cd
    double flat_residual = 0.0;          // sup |R^a_bcd|
    double spatial_flat_residual = 0.0;  // sup |R^abcd|
    double newtonian_residual = 0.0;     // sup |R^ab_cd|
    double ricci_raised_residual = 0.0;  // sup |R^ab|
    double bianchi_residual = 0.0;       // sup |R^a_[bcd]|
    double pair_symmetry_residual = 0.0; // sup |R^a_b^c_d - R^c_d^a_b|
};

CurvatureReport riemann(const ClassicalSpacetime& st, std::span<const Event> samples);

enum class VectorKind { Timelike, Spacelike };

struct VectorClass {
    VectorKind kind;
    double temporal_length;
    std::optional<double> spatial_length;
};

inline constexpr double kTimelikeThreshold = 1e-10;

// Spacelike vectors are lifted to sigma_b with h^ab sigma_b = v^a by an SVD
// least-squares solve (singular values below 1e-10 dropped).
VectorClass classify_vector(const ClassicalSpacetime& st, const Event& e, const Tensor& v, double tol = 1e-8);

}  // namespace nclab
