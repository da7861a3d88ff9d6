#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nclab/tensor.hpp"

namespace nclab {

// Thresholds for every PASS/FAIL decision. All must be positive when loaded
// from a file; `scaled` may drive them to zero for sanity runs.
struct Tolerances {
    double compatibility = 1e-6;
    double curvature = 1e-6;
    double ode = 1e-8;
    double recovery_phi = 1e-6;
    double recovery_operator = 1e-8;
    double conservation = 1e-4;
    double mass_invariance = 1e-3;
    double agreeing_operator = 1e-6;
    double com_relative = 1e-5;  // times the slice diameter
    double first_law_residual = 1e-4;
    double first_law_angle = 1e-4;
    double quadrature = 1e-6;
    double dust = 1e-4;

    Tolerances scaled(double factor) const;
};

enum class PotentialKind { Zero, Harmonic, PointMass, Uniform };

struct SpacetimeSpec {
    PotentialKind potential = PotentialKind::Zero;
    double strength = 1.0;          // k, M or g
    double singular_radius = 0.05;  // point mass only
};

struct BodySpec {
    std::array<double, 3> center{};
    std::array<double, 3> velocity{};
    std::vector<double> epsilon{0.1};  // strictly decreasing
    std::array<double, 2> window{0.0, 1.0};
    int lattice = 24;
    double clip_radius = 0.0;  // > 0 clips the body: a deliberate defect
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    Box region;
    SpacetimeSpec spacetime;
    BodySpec body;
    int slice_count = 5;
    int quadrature_intervals = 80;
    std::size_t sample_events = 1000;
    int initial_conditions = 20;
    Tolerances tolerances;
    std::string output_dir = "out";

    // Throws ConfigError on unknown keys, wrong types or invalid values.
    static ExperimentConfig load(const std::string& path);
    static ExperimentConfig parse(const std::string& text);
    // Full configuration in the file format; parse(to_yaml()) reproduces it.
    std::string to_yaml() const;

    std::vector<double> slice_times() const;  // evenly spaced over the window
};

std::string to_string(PotentialKind k);

}  // namespace nclab
