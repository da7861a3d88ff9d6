#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "nclab/config.hpp"
#include "nclab/flux.hpp"
#include "nclab/trautman.hpp"

namespace nclab {

// One PASS/FAIL line. The threshold always comes from the configuration;
// pass means residual < threshold, so a zero threshold rejects everything.
struct CheckRow {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = false;

    static CheckRow make(std::string name, double residual, double threshold);
};

bool all_pass(const std::vector<CheckRow>& rows);

// Spacetime and potential described by a configuration.
struct Setup {
    Box region;
    DerivativeOperator flat;
    Potential potential;
    NewtonianModel newtonian;
    GeometrizedModel geometrized;
    std::vector<Event> events;  // working events, outside the singular radius
};

Setup make_setup(const ExperimentConfig& cfg);

// Geodesic of `op` through the configured body center with the configured
// velocity, spanning the body window.
WorldLine central_curve(const ExperimentConfig& cfg, const DerivativeOperator& op);

DustOptions dust_options(const ExperimentConfig& cfg);

// One row of the flux table.
struct SliceRecord {
    double t = 0.0;
    Vec4d P = Vec4d::Zero();  // cobasis components
    double mass = 0.0;
    Vec3 com = Vec3::Zero();
    double j_residual = 0.0;
    double hull_distance = 0.0;
};

std::vector<SliceRecord> track_slices(const MassMomentumField& m, const std::vector<double>& times, const Box& region,
                                      const ConstantCobasis& basis, const QuadratureOptions& q);

std::vector<CheckRow> check_spacetime(const ExperimentConfig& cfg);

// Curvature conditions and Poisson residual of the geometrized model, plus the
// equivalence of its geodesics with forced flat trajectories.
std::vector<CheckRow> run_geometrize(const ExperimentConfig& cfg);
std::vector<CheckRow> equivalence_rows(const ExperimentConfig& cfg, const Setup& s);

// Recovers a flat operator and potential on a simply connected sub-box and
// compares them with the originals.
std::vector<CheckRow> run_recovery(const ExperimentConfig& cfg);
std::vector<CheckRow> recovery_rows(const ExperimentConfig& cfg, const Setup& s);

struct FirstLawRecord {
    double epsilon = 0.0;
    std::vector<SliceRecord> slices;
    Vec3 intercept = Vec3::Zero();  // x(t) = intercept + slope t
    Vec3 slope = Vec3::Zero();
    double residual = 0.0;  // largest perpendicular distance from the fitted line
    double angle = 0.0;     // between the fitted direction and V = P / P^0
};

struct FirstLawReport {
    std::vector<FirstLawRecord> records;  // configured epsilon order
    std::vector<CheckRow> rows;
};

// Needs the zero potential.
FirstLawReport run_first_law(const ExperimentConfig& cfg);

struct ConvergenceRecord {
    double epsilon = 0.0;
    double deviation = 0.0;     // sup over slices of |COM - reference geodesic|
    double conservation = 0.0;  // dust conservation residual
    double mass_drift = 0.0;    // relative spread of the slice masses
    double mass_error = 0.0;    // largest |mass - 1| over the slices
    std::vector<SliceRecord> slices;
    WorldLine reference;
};

struct ConvergenceReport {
    std::vector<ConvergenceRecord> records;  // decreasing epsilon
    double fitted_order = 0.0;               // slope of log deviation vs log epsilon; informational
    std::vector<CheckRow> rows;
};

// Needs the curvature conditions at the curvature tolerance.
ConvergenceReport run_theorem_w_sweep(const ExperimentConfig& cfg);

// Flat-regime rows use the configured body in flat spacetime; the others use
// the configured potential.
std::vector<CheckRow> run_proposition_suite(const ExperimentConfig& cfg);
std::vector<CheckRow> agreeing_operator_rows(const ExperimentConfig& cfg, const Setup& s);
std::vector<CheckRow> mass_invariance_rows(const ExperimentConfig& cfg, const Setup& s);

void write_rows_csv(std::ostream& os, const std::vector<CheckRow>& rows);
void write_flux_csv(std::ostream& os, const std::vector<SliceRecord>& slices);

// Writers for a whole run into `dir`; they create it when missing.
void write_rows(const std::filesystem::path& dir, const std::vector<CheckRow>& rows);
void write_first_law(const std::filesystem::path& dir, const FirstLawReport& r);
void write_convergence(const std::filesystem::path& dir, const ConvergenceReport& r);

// Human-readable PASS/FAIL lines.
void print_rows(std::ostream& os, const std::vector<CheckRow>& rows);

}  // namespace nclab
