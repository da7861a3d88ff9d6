#pragma once

#include <array>
#include <functional>
#include <ostream>
#include <vector>

#include "nclab/spacetime.hpp"

namespace nclab {

using Vec4 = std::array<double, 4>;

struct CurveSample {
    double s;
    Event x;
    Vec4 xi;  // tangent dx/ds
};

enum class Parametrization { Affine, TimeNormalized };

// Sampled curve; parameters strictly increase. Between samples the curve is
// the cubic Hermite interpolant of positions and tangents.
class WorldLine {
public:
    WorldLine() = default;
    WorldLine(std::vector<CurveSample> samples, Parametrization tag);

    const std::vector<CurveSample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    Parametrization parametrization() const { return tag_; }
    double s_begin() const;
    double s_end() const;

    Event position(double s) const;
    Vec4 tangent(double s) const;

    // Requires the time coordinate to increase strictly along the curve.
    double parameter_at_time(double t) const;
    Event at_time(double t) const;
    // dx/dt at coordinate time t.
    Vec4 velocity_at_time(double t) const;

    void write_csv(std::ostream& os) const;

private:
    std::size_t segment(double s) const;

    std::vector<CurveSample> samples_;
    Parametrization tag_ = Parametrization::Affine;
    bool time_increasing_ = false;
};

// Rescale so that xi^a t_a = 1 at every sample (the parameter becomes time).
WorldLine reparametrize_by_time(const WorldLine& w);

struct IntegratorOptions {
    Box region;                 // trajectory must stay inside
    double fixed_step = 0.0;    // > 0 skips the dry-run step selection
    int max_halvings = 20;
};

// Acceleration law: returns d xi^a / ds given position and tangent.
using AccelerationLaw = std::function<void(const Event&, const Vec4& xi, double* acc)>;

// Classic RK4 with a fixed step. The step starts at s_max/16 and is halved
// until the step-doubling estimate of the end-point error is below tol.
WorldLine integrate_law(const AccelerationLaw& law, const Event& e0, const Vec4& v0, double s_max, double tol,
                        const IntegratorOptions& opt);

WorldLine integrate_geodesic(const DerivativeOperator& op, const Event& e0, const Vec4& v0, double s_max, double tol,
                             const IntegratorOptions& opt);

// Motion under d relative to `flat` with force -grad(phi), scaled by
// (t.xi)^2 so that time-normalized tangents see exactly -grad(phi).
// `potential` must be a scalar field; its exact derivative is used if attached.
WorldLine integrate_forced(const DerivativeOperator& flat, const TensorField& potential, const Event& e0,
                           const Vec4& v0, double s_max, double tol, const IntegratorOptions& opt);

struct GeodesicResidual {
    double affine = 0.0;   // sup |xi^n nabla_n xi^a|
    double reparam = 0.0;  // same, minus its component along xi
};

// Tangent derivatives by 5-point finite differences over neighbouring samples.
GeodesicResidual geodesic_residual(const DerivativeOperator& op, const WorldLine& w);

// Sup over common sample parameters of the coordinate distance between two
// curves; both must share their parameter grid.
double sup_distance(const WorldLine& a, const WorldLine& b);

}  // namespace nclab
