#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "nclab/geodesics.hpp"
#include "nclab/spacetime.hpp"

namespace nclab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// rho0(r) = A exp(1 / ((r/eps)^2 - 1)) inside r < eps, zero outside.
struct BumpProfile {
    double epsilon = 1.0;
    double amplitude = 1.0;

    // Amplitude chosen so the profile integrates to `mass` over space.
    static BumpProfile with_mass(double epsilon, double mass = 1.0);
    double operator()(double r) const;
};

struct Tube {
    WorldLine central;
    double radius = 0.0;  // largest distance of the support from the central curve
    double t0 = 0.0;
    double t1 = 0.0;
};

struct DustOptions {
    int lattice = 24;              // flow-line nodes across the diameter
    double max_step = 0.01;        // time step bound for flow-line integration
    double caustic_threshold = 1e-6;
    double window_padding = 0.05;  // evaluation allowed this far outside the window
    int stored_levels = 11;        // lattice snapshots across the padded window
    int slice_nodes = 12;          // starting Chebyshev nodes per axis for slice evaluators
    // Deliberate defect: zero the field outside this Eulerian ball (0 disables).
    double clip_radius = 0.0;
    std::array<double, 3> clip_center{};
};

struct DustSample {
    double rho = 0.0;
    Vec3 velocity = Vec3::Zero();  // u = (1, velocity)
};

struct LatticeNode {
    Vec3 label;                      // initial position
    double rho0 = 0.0;
    std::vector<Vec3> position;      // one per stored level
    std::vector<double> jacobian;    // flow Jacobian per stored level
};

class DustBody;

// Dust T^ab = rho u^a u^b carried by a geodesic congruence. Samples are held
// on a Lagrangian lattice of flow lines; off-lattice values come from
// inverting the flow map by Newton iteration on re-integrated flow lines.
class MassMomentumField {
public:
    const TensorField& T() const { return T_; }
    const Tube& support() const;
    Backend backend() const { return Backend::Grid; }
    double lattice_spacing() const;
    double peak_density() const;
    double epsilon() const;
    double scale() const;

    DustSample sample(const Event& e) const;
    // Fast T^ab evaluator valid only on slice t: the flow map on that slice
    // is replaced by a Chebyshev interpolant before inversion.
    TensorField::Evaluator slice_evaluator(double t) const;

    // Support geometry from the lattice: center and half-widths on slice t.
    Vec3 center(double t) const;
    Vec3 support_half_width(double t) const;

    const std::vector<double>& level_times() const;
    const std::vector<LatticeNode>& nodes() const;

    MassMomentumField scaled(double s) const;

private:
    friend MassMomentumField build_dust_body(const ClassicalSpacetime&, const WorldLine&, double,
                                             const BumpProfile&, const DustOptions&);
    MassMomentumField(std::shared_ptr<const DustBody> body, double scale, const Box& region);

    std::shared_ptr<const DustBody> body_;
    double scale_ = 1.0;
    TensorField T_;
};

// Body over the window [gamma.t_begin, gamma.t_end], launched on the first
// slice with gamma's velocity as constant spatial components.
MassMomentumField build_dust_body(const ClassicalSpacetime& st, const WorldLine& gamma, double epsilon,
                                  const BumpProfile& profile, const DustOptions& opt = {});

double mass_density(const MassMomentumField& m, const Event& e);

struct ConditionReport {
    std::size_t support_points = 0;   // sampled events with T != 0
    std::size_t mass_violations = 0;  // of those, events with T^ab t_a t_b <= 0
    double conservation = 0.0;        // sup |nabla_a T^ab| / (peak density / epsilon)
    double symmetry = 0.0;            // sup |T^ab - T^ba|
    double support = 0.0;             // sup |T^ab| beyond the declared tube
};

// Finite-difference step for the conservation residual, relative to the
// lattice spacing, so that refining the lattice refines the stencil too.
inline constexpr double kConservationStepFactor = 0.05;

struct ConditionOptions {
    std::size_t interior_samples = 256;
    std::size_t shell_samples = 128;
    double step = 0.0;  // 0: kConservationStepFactor times the lattice spacing
    std::vector<Event> extra_events;  // appended to the interior samples
};

ConditionReport check_conditions(const ClassicalSpacetime& st, const MassMomentumField& m,
                                 const ConditionOptions& opt = {});

}  // namespace nclab
