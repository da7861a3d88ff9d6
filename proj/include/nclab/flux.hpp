#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "nclab/geodesics.hpp"
#include "nclab/hull.hpp"
#include "nclab/matter.hpp"
#include "nclab/spacetime.hpp"

namespace nclab {

using Vec4d = Eigen::Vector4d;
using Mat4d = Eigen::Matrix4d;

enum class Orientation { Future, Past };

// Constant-time slice t = time restricted to a spatial box.
struct Hypersurface {
    double time = 0.0;
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
    Orientation orientation = Orientation::Future;

    // Slice of the region's spatial box.
    static Hypersurface slice(const Box& region, double t, Orientation o = Orientation::Future);
    double diameter() const { return (hi - lo).norm(); }
    // Unit normal covector: +t_a for future, -t_a for past.
    Tensor normal() const;
};

// Volume element eps_abcd with eps_0123 = +1 (future orientation) in the
// adapted chart, and the 3-form omega_bcd = 4 v^a eps_abcd (v^a n_a = 1)
// factoring it as eps_abcd = n_[a omega_bcd].
struct VolumeElement {
    Tensor epsilon;

    static VolumeElement standard(Orientation o = Orientation::Future);
    // |eps_abcd eps_efgh h^bf h^cg h^dh - 6 t_a t_e| at e.
    double normalization_residual(const ClassicalSpacetime& st, const Event& e) const;
    Tensor slice_form(const Hypersurface& s) const;
    // |eps_abcd - n_[a omega_bcd]|
    double factorization_residual(const Hypersurface& s) const;
};

// Affine coordinates y^mu of a flat operator: dy^mu = sigma^mu_b dx^b with
// sigma parallel and equal to the identity at the anchor. The time leg along
// the anchor's spatial point is tabulated once; each event adds a straight
// spatial leg integrated with RK4.
class AffineChart {
public:
    AffineChart(const DerivativeOperator& flat, const Event& anchor, double time_step = 1e-3);

    const Event& anchor() const;
    const DerivativeOperator& op() const;

    // Coordinates y and cobasis rows sigma^mu_b at x.
    void evaluate(const Event& x, Vec4d& y, Mat4d& sigma) const;
    Vec4d coordinates(const Event& x) const;
    Mat4d cobasis(const Event& x) const;
    // Event on slice t with spatial coordinates y[1..3].
    Event locate(double t, const Vec4d& y) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

// chi_p^a = position of x relative to p in the chart, as a coordinate vector.
class PositionField {
public:
    PositionField(AffineChart chart, const Event& base);
    Vec4d operator()(const Event& x) const;
    const Event& base() const { return base_; }
    // As a (1,0) field over the operator's box.
    TensorField field() const;

private:
    AffineChart chart_;
    Event base_;
    Vec4d base_y_;
};

// sigma^i_b = mix^i_mu sigma^mu_b: constant covector fields of the chart.
struct ConstantCobasis {
    AffineChart chart;
    Mat4d mix = Mat4d::Identity();

    Mat4d at(const Event& x) const { return mix * chart.cobasis(x); }
    TensorField covector(int i) const;
    // Coordinate-basis matrix E^a_i dual to the cobasis at the anchor.
    Mat4d dual_at_anchor() const;
};

// Uniform Simpson mesh on a slice: node (i,j,k) at lo + spacing (i,j,k).
struct SliceMesh {
    Vec3 lo = Vec3::Zero();
    double spacing = 0.0;
    std::array<int, 3> intervals{};  // each even
};

// Integrals over one slice, in cobasis components, with positions measured
// from `origin` (which must lie on the slice).
struct SliceMoments {
    double time = 0.0;
    Event origin;
    Vec4d origin_y = Vec4d::Zero();
    double mass = 0.0;           // int T^ab t_a t_b
    Vec4d momentum = Vec4d::Zero();  // P^i = int sigma^i_a T^ab t_b
    Vec4d first = Vec4d::Zero();     // int dy^i T^ab t_a t_b
    Mat4d K = Mat4d::Zero();         // int dy^i sigma^j_a T^ab t_b
    std::vector<Vec3> support;   // row-extreme mesh nodes with T != 0

    // J^ij about the origin and about another point of the chart.
    Mat4d angular_momentum() const;
    Mat4d angular_momentum_about(const Vec4d& y) const;
};

// Composite Simpson over `mesh` of the slice. Throws SlicingError when the
// mesh leaves the hypersurface or T is nonzero on the mesh boundary.
SliceMoments integrate_slice(const TensorField& T, const Hypersurface& s, const ConstantCobasis& basis,
                             const Event& origin, const SliceMesh& mesh, bool collect_support = false);
// Same with a raw evaluator valid on the slice.
SliceMoments integrate_slice(const TensorField::Evaluator& T, const Hypersurface& s, const ConstantCobasis& basis,
                             const Event& origin, const SliceMesh& mesh, bool collect_support = false);

struct QuadratureOptions {
    int intervals = 80;              // across the support diameter
    double spacing = 0.0;            // > 0 overrides intervals
    std::optional<Vec3> mesh_origin;  // nodes at origin + spacing * k when set
};

// Mesh covering the body's support on the slice, padded by two nodes.
SliceMesh body_mesh(const MassMomentumField& m, const Hypersurface& s, const QuadratureOptions& q = {});

// Anchor used when only an operator is given: the center of its box.
Event default_anchor(const DerivativeOperator& flat);
ConstantCobasis standard_cobasis(const DerivativeOperator& flat);

// Momentum flux P^a as a coordinate vector at the cobasis anchor.
Tensor momentum_flux(const MassMomentumField& m, const Hypersurface& s, const ConstantCobasis& basis,
                     const QuadratureOptions& q = {});
Tensor momentum_flux(const MassMomentumField& m, const Hypersurface& s, const DerivativeOperator& flat,
                     const QuadratureOptions& q = {});

// J^ab(s, p), antisymmetric, as coordinate components at the anchor.
Tensor angular_momentum_flux(const MassMomentumField& m, const Hypersurface& s, const Event& p,
                             const ConstantCobasis& basis, const QuadratureOptions& q = {});
Tensor angular_momentum_flux(const MassMomentumField& m, const Hypersurface& s, const Event& p,
                             const DerivativeOperator& flat, const QuadratureOptions& q = {});

double total_mass(const MassMomentumField& m, const Hypersurface& s, const DerivativeOperator& flat,
                  const QuadratureOptions& q = {});

struct CenterOfMass {
    Event point;
    double j_residual = 0.0;     // sup_i |J^i0(s, point)|
    double hull_distance = 0.0;  // signed distance to the support hull, <= 0 inside
    SliceMoments moments;
};

// q = o + R with R^i = int dy^i T^ab t_a t_b / mass. `origin` defaults to the
// mesh center; q does not depend on it.
CenterOfMass center_of_mass_report(const MassMomentumField& m, const Hypersurface& s, const ConstantCobasis& basis,
                                   const QuadratureOptions& q = {}, std::optional<Event> origin = std::nullopt);
Event center_of_mass(const MassMomentumField& m, const Hypersurface& s, const DerivativeOperator& flat,
                     const QuadratureOptions& q = {});

inline double com_tolerance(const Hypersurface& s) { return 1e-5 * s.diameter(); }

// COM events on the given slice times, time-parametrized, with tangents from
// finite differences of neighbouring points.
WorldLine com_worldline(const MassMomentumField& m, const std::vector<double>& times, const Box& region,
                        const ConstantCobasis& basis, const QuadratureOptions& q = {});

struct JDerivativeReport {
    double j_residual = 0.0;  // sup |d_a J^bc + delta_a^[b P^c]|
    double p_residual = 0.0;  // sup |d_t P^a|
};

struct JDerivativeOptions {
    double time_step = 0.0;  // 0: 1e-3 times the body window
    double spacing = 0.0;    // 0: from the quadrature options at the first event
    QuadratureOptions quadrature;
};

// J^bc(x) = J(slice through x, x) differentiated by 4th-order differences
// on meshes of fixed spacing that ride with the body, so the quadrature error
// is smooth in time.
JDerivativeReport check_J_derivative(const MassMomentumField& m, const Box& region, const ConstantCobasis& basis,
                                     const std::vector<Event>& events, const JDerivativeOptions& opt = {});

struct StokesReport {
    Vec4d difference = Vec4d::Zero();      // P(s2) - P(s1) from slice quadrature
    Vec4d boundary_form = Vec4d::Zero();   // volume integral of the divergence minus lateral fluxes
    double consistency = 0.0;              // |difference - boundary_form|
};

struct StokesOptions {
    int spatial_intervals = 24;
    int time_intervals = 8;  // per slab, even
    double step = 0.0;       // divergence stencil; 0: lattice-tied default
};

// Boundary-integral form of momentum conservation between two slices for a
// body in flat spacetime with the coordinate cobasis.
StokesReport stokes_check(const MassMomentumField& m, const Box& region, double t1, double t2,
                          const StokesOptions& opt = {});

// Both sides of int beta^a eps_abcd = 1/4 int (beta^a n_a) omega_bcd on a
// slice mesh, for a vector field beta.
struct FactorizationReport {
    double lhs = 0.0;
    double rhs = 0.0;
};
FactorizationReport flux_factorization(const TensorField& beta, const Hypersurface& s, const SliceMesh& mesh);

// Flat compatible operator of a frame rotating with angular velocity omega
// and accelerating with a(t): C^i_0j = C^i_j0 = -(omega x)_ij,
// C^i_00 = -(omega x (omega x x))^i + a^i(t).
DerivativeOperator frame_operator(const Box& region, const Vec3& omega, std::function<Vec3(double)> acceleration);

}  // namespace nclab
