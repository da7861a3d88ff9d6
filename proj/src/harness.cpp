#include "nclab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

#include "nclab/errors.hpp"
#include "nclab/format.hpp"
#include "nclab/parallel.hpp"
#include "nclab/svg.hpp"

namespace nclab {

namespace {

// Accuracy of every trajectory the harness builds. Thresholds stay in the
// configuration; this only controls how the curves are produced.
constexpr double kIntegrationTolerance = 1e-10;
constexpr double kInf = std::numeric_limits<double>::infinity();

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string palette(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof kPalette[0])]; }

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string tagged(const std::string& name, double eps) { return name + "[eps=" + short_num(eps) + "]"; }

Vec3 spatial(const Event& e) { return {e[1], e[2], e[3]}; }

Potential potential_for(const ExperimentConfig& cfg) {
    const SpacetimeSpec& s = cfg.spacetime;
    switch (s.potential) {
        case PotentialKind::Zero: return zero_potential(cfg.region);
        case PotentialKind::Harmonic: return harmonic_potential(s.strength, cfg.region);
        case PotentialKind::PointMass: return point_mass_potential(s.strength, cfg.region, s.singular_radius);
        case PotentialKind::Uniform: return uniform_potential(s.strength, cfg.region);
    }
    throw ConfigError("unknown potential");
}

Event body_start(const ExperimentConfig& cfg) {
    const auto& c = cfg.body.center;
    return Event(cfg.body.window[0], c[0], c[1], c[2]);
}

// Row group that degrades to failing rows when its computation throws.
template <class Fn>
std::vector<CheckRow> guarded(const std::vector<std::pair<std::string, double>>& names, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception&) {
        std::vector<CheckRow> rows;
        for (const auto& [name, threshold] : names) rows.push_back(CheckRow::make(name, kInf, threshold));
        return rows;
    }
}

std::vector<CenterOfMass> slice_reports(const MassMomentumField& m, const std::vector<double>& times,
                                        const Box& region, const ConstantCobasis& basis,
                                        const QuadratureOptions& q) {
    std::vector<CenterOfMass> out;
    for (double t : times) out.push_back(center_of_mass_report(m, Hypersurface::slice(region, t), basis, q));
    return out;
}

SliceRecord record_of(const CenterOfMass& c, const ConstantCobasis& basis) {
    SliceRecord r;
    r.t = c.moments.time;
    r.P = c.moments.momentum;
    r.mass = (basis.mix.inverse().row(0) * r.P)(0);
    r.com = spatial(c.point);
    r.j_residual = c.j_residual;
    r.hull_distance = c.hull_distance;
    return r;
}

QuadratureOptions quadrature(const ExperimentConfig& cfg) {
    QuadratureOptions q;
    q.intervals = cfg.quadrature_intervals;
    return q;
}

double relative_spread(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    return (*hi - *lo) / std::abs(mean);
}

}  // namespace

CheckRow CheckRow::make(std::string name, double residual, double threshold) {
    CheckRow r;
    r.name = std::move(name);
    r.residual = std::isnan(residual) ? kInf : std::max(0.0, residual);
    r.threshold = threshold;
    r.pass = r.residual < threshold;
    return r;
}

bool all_pass(const std::vector<CheckRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

Setup make_setup(const ExperimentConfig& cfg) {
    const DerivativeOperator flat = DerivativeOperator::coordinate(cfg.region);
    Potential p = potential_for(cfg);
    std::vector<Event> events = working_events(cfg.region, p.singular_radius, cfg.sample_events);
    NewtonianModel nm = newtonian_model(p, flat, cfg.region);
    // The Poisson residual is reported as a row, so geometrization never refuses here.
    GeometrizedModel gm = geometrize(nm, events, kInf);
    return Setup{cfg.region, flat, std::move(p), std::move(nm), std::move(gm), std::move(events)};
}

WorldLine central_curve(const ExperimentConfig& cfg, const DerivativeOperator& op) {
    const auto& v = cfg.body.velocity;
    return integrate_geodesic(op, body_start(cfg), {1.0, v[0], v[1], v[2]}, cfg.body.window[1] - cfg.body.window[0],
                              kIntegrationTolerance, IntegratorOptions{cfg.region});
}

DustOptions dust_options(const ExperimentConfig& cfg) {
    DustOptions o;
    o.lattice = cfg.body.lattice;
    o.clip_radius = cfg.body.clip_radius;
    o.clip_center = cfg.body.center;
    return o;
}

std::vector<SliceRecord> track_slices(const MassMomentumField& m, const std::vector<double>& times, const Box& region,
                                      const ConstantCobasis& basis, const QuadratureOptions& q) {
    std::vector<SliceRecord> out;
    for (const CenterOfMass& c : slice_reports(m, times, region, basis, q)) out.push_back(record_of(c, basis));
    return out;
}

// ---------------------------------------------------------------- spacetime checks

std::vector<CheckRow> check_spacetime(const ExperimentConfig& cfg) {
    const Setup s = make_setup(cfg);
    const Tolerances& tol = cfg.tolerances;
    const StructureReport st = check_structure(s.geometrized.spacetime, s.events);
    const CurvatureReport cr = riemann(s.geometrized.spacetime, s.events);
    std::vector<CheckRow> rows{
        CheckRow::make("Structure.orthogonality", st.orthogonality, tol.compatibility),
        CheckRow::make("Structure.signature", st.signature_ok ? st.signature : kInf, tol.compatibility),
        CheckRow::make("Structure.compat_temporal", st.compat_temporal, tol.compatibility),
        CheckRow::make("Structure.compat_spatial", st.compat_spatial, tol.compatibility),
        CheckRow::make("Curvature.bianchi", cr.bianchi_residual, tol.curvature),
        CheckRow::make("Curvature.pair_symmetry", cr.pair_symmetry_residual, tol.curvature),
        CheckRow::make("Curvature.spatially_flat", cr.spatial_flat_residual, tol.curvature),
        CheckRow::make("Curvature.newtonian", cr.newtonian_residual, tol.curvature),
    };
    if (cfg.spacetime.potential == PotentialKind::Zero) {
        rows.push_back(CheckRow::make("Curvature.flat", cr.flat_residual, tol.curvature));
    }
    return rows;
}

std::vector<CheckRow> run_geometrize(const ExperimentConfig& cfg) {
    const Setup s = make_setup(cfg);
    const Tolerances& tol = cfg.tolerances;
    const TrautmanReport tr = check_trautman(s.geometrized, s.events);
    std::vector<CheckRow> rows{
        CheckRow::make("Geometrized.poisson", poisson_residual(s.newtonian, s.events), tol.curvature),
        CheckRow::make("Geometrized.ricci_source", tr.ricci_source, tol.curvature),
        CheckRow::make("Geometrized.pair_symmetry", tr.pair_symmetry, tol.curvature),
        CheckRow::make("Geometrized.newtonian", tr.newtonian, tol.curvature),
    };
    for (CheckRow& r : equivalence_rows(cfg, s)) rows.push_back(std::move(r));
    return rows;
}

std::vector<CheckRow> equivalence_rows(const ExperimentConfig& cfg, const Setup& s) {
    const double threshold = 10.0 * cfg.tolerances.ode;
    return guarded({{"GeodesicEquivalence", threshold}}, [&] {
        const Box& R = cfg.region;
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        const double t0 = R.lo[0] + 0.05 * (R.hi[0] - R.lo[0]);
        // Unit parameter time must fit in the region's time range.
        const double xi0 = std::min(1.0, 0.9 * (R.hi[0] - t0));
        const double keep_out = 10.0 * s.potential.singular_radius;
        const IntegratorOptions io{R};

        double worst = 0.0;
        int accepted = 0;
        for (int attempt = 0; accepted < cfg.initial_conditions; ++attempt) {
            if (attempt >= 50 * cfg.initial_conditions) {
                throw PreconditionError("could not draw enough initial conditions inside the region");
            }
            Event e0;
            Vec4 v0{xi0, 0.0, 0.0, 0.0};
            e0[0] = t0;
            for (int i = 1; i < 4; ++i) {
                const double c = 0.5 * (R.lo[static_cast<std::size_t>(i)] + R.hi[static_cast<std::size_t>(i)]);
                const double w = R.hi[static_cast<std::size_t>(i)] - R.lo[static_cast<std::size_t>(i)];
                e0[i] = c + 0.25 * w * unit(rng);
                v0[static_cast<std::size_t>(i)] = 0.1 * w * unit(rng);
            }
            try {
                if (spatial(e0).norm() < keep_out) continue;
                const WorldLine g = integrate_geodesic(s.geometrized.spacetime.op, e0, v0, 1.0,
                                                       kIntegrationTolerance, io);
                bool near = false;
                for (const auto& c : g.samples()) near = near || spatial(c.x).norm() < keep_out;
                if (near) continue;
                IntegratorOptions fixed = io;
                fixed.fixed_step = g.samples()[1].s - g.samples()[0].s;
                const WorldLine f = integrate_forced(s.flat, s.potential.phi, e0, v0, 1.0, kIntegrationTolerance, fixed);
                worst = std::max(worst, sup_distance(g, f));
                ++accepted;
            } catch (const RegionError&) {
            } catch (const DomainError&) {
            }
        }
        return std::vector<CheckRow>{CheckRow::make("GeodesicEquivalence", worst, threshold)};
    });
}

// ---------------------------------------------------------------- recovery

std::vector<CheckRow> recovery_rows(const ExperimentConfig& cfg, const Setup& s) {
    const Tolerances& tol = cfg.tolerances;
    return guarded({{"RecoveryRoundTrip.phi", tol.recovery_phi}, {"RecoveryRoundTrip.operator", tol.recovery_operator}},
                   [&] {
                       // Simply connected and clear of the singular point: the half of the
                       // region beyond half its positive x-extent.
                       Box box = cfg.region;
                       if (s.potential.singular_radius > 0.0) {
                           box.lo[1] = std::max(box.lo[1], 0.5 * box.hi[1]);
                           if (!(box.hi[1] > box.lo[1])) {
                               throw PreconditionError("region has no room for recovery beside the singular point");
                           }
                       }
                       const std::vector<Event> events = working_events(box, 0.0, cfg.sample_events);
                       Event anchor;
                       for (int a = 0; a < 4; ++a) {
                           const auto i = static_cast<std::size_t>(a);
                           anchor[a] = 0.5 * (box.lo[i] + box.hi[i]);
                       }
                       RecoveryOptions opt{box, events, kInf};
                       const NewtonianModel rec = recover(s.geometrized, anchor, opt);

                       double lo = kInf, hi = -kInf, op_diff = 0.0;
                       for (const Event& e : events) {
                           const double d = rec.phi(e).value() - s.potential.phi(e).value();
                           lo = std::min(lo, d);
                           hi = std::max(hi, d);
                           Connection a, b;
                           rec.spacetime.op.connection(e, a.data());
                           s.flat.connection(e, b.data());
                           for (std::size_t k = 0; k < a.size(); ++k) op_diff = std::max(op_diff, std::abs(a[k] - b[k]));
                       }
                       // The best constant offset leaves half the range.
                       return std::vector<CheckRow>{
                           CheckRow::make("RecoveryRoundTrip.phi", 0.5 * (hi - lo), tol.recovery_phi),
                           CheckRow::make("RecoveryRoundTrip.operator", op_diff, tol.recovery_operator),
                       };
                   });
}

std::vector<CheckRow> run_recovery(const ExperimentConfig& cfg) { return recovery_rows(cfg, make_setup(cfg)); }

// ---------------------------------------------------------------- first law

FirstLawReport run_first_law(const ExperimentConfig& cfg) {
    if (cfg.spacetime.potential != PotentialKind::Zero) {
        throw PreconditionError("the first-law experiment needs flat spacetime (potential: zero)");
    }
    const Box& R = cfg.region;
    const DerivativeOperator flat = DerivativeOperator::coordinate(R);
    const ClassicalSpacetime st = adapted_spacetime(flat, R);
    const WorldLine gamma = central_curve(cfg, flat);
    const ConstantCobasis basis = standard_cobasis(flat);
    const std::vector<double> times = cfg.slice_times();

    FirstLawReport rep;
    rep.records.resize(cfg.body.epsilon.size());
    parallel_for(rep.records.size(), [&](std::size_t k) {
        const double eps = cfg.body.epsilon[k];
        FirstLawRecord& r = rep.records[k];
        r.epsilon = eps;
        const MassMomentumField m = build_dust_body(st, gamma, eps, BumpProfile::with_mass(eps), dust_options(cfg));
        r.slices = track_slices(m, times, R, basis, quadrature(cfg));

        // Least-squares line x(t) = a + b t through the COM track.
        Eigen::MatrixXd A(static_cast<Eigen::Index>(times.size()), 2);
        Eigen::MatrixXd X(static_cast<Eigen::Index>(times.size()), 3);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            A(ii, 0) = 1.0;
            A(ii, 1) = times[i];
            X.row(ii) = r.slices[i].com.transpose();
        }
        const Eigen::MatrixXd coef = A.colPivHouseholderQr().solve(X);
        r.intercept = coef.row(0).transpose();
        r.slope = coef.row(1).transpose();

        const Vec4d dir = Vec4d(1.0, r.slope(0), r.slope(1), r.slope(2)).normalized();
        for (const SliceRecord& s : r.slices) {
            const Vec3 x0 = s.com - r.intercept;
            const Vec4d rel(s.t, x0(0), x0(1), x0(2));
            r.residual = std::max(r.residual, (rel - rel.dot(dir) * dir).norm());
        }
        const Vec4d V = (r.slices.front().P / r.slices.front().P(0)).normalized();
        r.angle = 2.0 * std::asin(std::min(1.0, 0.5 * (dir - V).norm()));
    });

    const Tolerances& tol = cfg.tolerances;
    double spread = 0.0;
    for (const FirstLawRecord& r : rep.records) {
        rep.rows.push_back(CheckRow::make(tagged("FirstLaw.residual", r.epsilon), r.residual, tol.first_law_residual));
        rep.rows.push_back(CheckRow::make(tagged("FirstLaw.angle", r.epsilon), r.angle, tol.first_law_angle));
        const FirstLawRecord& f = rep.records.front();
        spread = std::max({spread, (r.intercept - f.intercept).cwiseAbs().maxCoeff(),
                           (r.slope - f.slope).cwiseAbs().maxCoeff()});
    }
    if (rep.records.size() > 1) {
        rep.rows.push_back(CheckRow::make("FirstLaw.eps_independence", spread, tol.first_law_residual));
    }
    return rep;
}

// ---------------------------------------------------------------- convergence sweep

ConvergenceReport run_theorem_w_sweep(const ExperimentConfig& cfg) {
    const Setup s = make_setup(cfg);
    const Tolerances& tol = cfg.tolerances;
    const TrautmanReport tr = check_trautman(s.geometrized, s.events);
    if (!(tr.worst() < tol.curvature)) {
        throw PreconditionError("geometrized spacetime fails the curvature conditions; sweep refused");
    }
    const Box& R = cfg.region;
    const ClassicalSpacetime& st = s.geometrized.spacetime;
    const WorldLine gamma = central_curve(cfg, st.op);
    const DerivativeOperator lf = flat_operator_on_curve(st, gamma);
    const ConstantCobasis basis{AffineChart(lf, body_start(cfg)), Mat4d::Identity()};
    const std::vector<double> times = cfg.slice_times();
    const double span = cfg.body.window[1] - cfg.body.window[0];

    ConvergenceReport rep;
    rep.records.resize(cfg.body.epsilon.size());
    parallel_for(rep.records.size(), [&](std::size_t k) {
        const double eps = cfg.body.epsilon[k];
        ConvergenceRecord& r = rep.records[k];
        r.epsilon = eps;
        const MassMomentumField m = build_dust_body(st, gamma, eps, BumpProfile::with_mass(eps), dust_options(cfg));
        r.slices = track_slices(m, times, R, basis, quadrature(cfg));

        // Reference geodesic of the agreeing flat operator from the first COM
        // with the first slice's momentum direction.
        const SliceRecord& first = r.slices.front();
        const Vec4d V = first.P / first.P(0);
        r.reference = integrate_geodesic(lf, Event(first.t, first.com(0), first.com(1), first.com(2)),
                                         {1.0, V(1), V(2), V(3)}, span, kIntegrationTolerance, IntegratorOptions{R});
        std::vector<double> masses;
        for (const SliceRecord& sl : r.slices) {
            r.deviation = std::max(r.deviation, (sl.com - spatial(r.reference.at_time(sl.t))).norm());
            masses.push_back(sl.mass);
        }
        r.mass_drift = relative_spread(masses);
        for (double mk : masses) r.mass_error = std::max(r.mass_error, std::abs(mk - 1.0));
        ConditionOptions co;
        co.interior_samples = 128;
        co.shell_samples = 64;
        r.conservation = check_conditions(st, m, co).conservation;
    });

    // Least-squares slope of log deviation against log epsilon.
    std::vector<std::pair<double, double>> pts;
    for (const ConvergenceRecord& r : rep.records)
        if (r.deviation > 0.0) pts.emplace_back(std::log(r.epsilon), std::log(r.deviation));
    if (pts.size() >= 2) {
        double mx = 0, my = 0;
        for (auto [x, y] : pts) {
            mx += x;
            my += y;
        }
        mx /= static_cast<double>(pts.size());
        my /= static_cast<double>(pts.size());
        double sxy = 0, sxx = 0;
        for (auto [x, y] : pts) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
        }
        rep.fitted_order = sxy / sxx;
    }

    // Deviations may not grow as epsilon shrinks, beyond the quadrature noise floor.
    double growth = 0.0;
    for (std::size_t i = 1; i < rep.records.size(); ++i) {
        growth = std::max(growth, rep.records[i].deviation - rep.records[i - 1].deviation);
    }
    rep.rows.push_back(CheckRow::make("Convergence.monotone", growth, 2.0 * tol.quadrature));
    for (const ConvergenceRecord& r : rep.records) {
        rep.rows.push_back(CheckRow::make(tagged("Convergence.conservation", r.epsilon), r.conservation, tol.conservation));
        rep.rows.push_back(
            CheckRow::make(tagged("Convergence.mass_drift", r.epsilon), r.mass_drift, tol.mass_invariance));
        rep.rows.push_back(CheckRow::make(tagged("Convergence.unit_mass", r.epsilon), r.mass_error, tol.dust));
    }
    return rep;
}

// ---------------------------------------------------------------- check suite

std::vector<CheckRow> agreeing_operator_rows(const ExperimentConfig& cfg, const Setup& s) {
    const double tol = cfg.tolerances.agreeing_operator;
    return guarded({{"AgreeingFlatOperator.flat", tol}, {"AgreeingFlatOperator.compatible", tol}, {"AgreeingFlatOperator.agreement", tol}}, [&] {
        const ClassicalSpacetime& st = s.geometrized.spacetime;
        const WorldLine gamma = central_curve(cfg, st.op);
        const DerivativeOperator lf = flat_operator_on_curve(st, gamma);
        // The construction only covers the curve's time range.
        const ClassicalSpacetime flat_st = adapted_spacetime(lf, lf.box());
        const std::vector<Event> events =
            working_events(lf.box(), s.potential.singular_radius, std::min<std::size_t>(cfg.sample_events, 256));
        double agreement = 0.0;
        for (const CurveSample& c : gamma.samples()) {
            Connection a, b;
            lf.connection(c.x, a.data());
            st.op.connection(c.x, b.data());
            for (std::size_t k = 0; k < a.size(); ++k) agreement = std::max(agreement, std::abs(a[k] - b[k]));
        }
        return std::vector<CheckRow>{
            CheckRow::make("AgreeingFlatOperator.flat", riemann(flat_st, events).flat_residual, tol),
            CheckRow::make("AgreeingFlatOperator.compatible", check_structure(flat_st, events).worst(), tol),
            CheckRow::make("AgreeingFlatOperator.agreement", agreement, tol),
        };
    });
}

std::vector<CheckRow> mass_invariance_rows(const ExperimentConfig& cfg, const Setup& s) {
    const double tol = cfg.tolerances.mass_invariance;
    return guarded({{"MassInvariance", tol}}, [&] {
        const ClassicalSpacetime& st = s.geometrized.spacetime;
        const WorldLine gamma = central_curve(cfg, st.op);
        const double eps = cfg.body.epsilon.back();
        const MassMomentumField m = build_dust_body(st, gamma, eps, BumpProfile::with_mass(eps), dust_options(cfg));
        // Any compatible flat operator will do; a rotating, accelerating frame
        // shares nothing with the curved operator.
        const DerivativeOperator frame = frame_operator(cfg.region, Vec3(0.0, 0.0, 0.7),
                                                        [](double t) { return Vec3(0.3 * std::sin(t), 0.2, 0.0); });
        const ConstantCobasis basis = standard_cobasis(frame);
        std::vector<double> masses;
        for (const SliceRecord& r : track_slices(m, cfg.slice_times(), cfg.region, basis, quadrature(cfg))) {
            masses.push_back(r.mass);
        }
        return std::vector<CheckRow>{CheckRow::make("MassInvariance", relative_spread(masses), tol)};
    });
}

namespace {

std::vector<CheckRow> flat_regime_rows(const ExperimentConfig& cfg) {
    const Tolerances& tol = cfg.tolerances;
    const Box& R = cfg.region;
    const double com_tol = tol.com_relative * Hypersurface::slice(R, cfg.body.window[0]).diameter();
    return guarded({{"MomentumConservation", tol.conservation},
                    {"MomentumConstancy", tol.conservation},
                    {"AngularMomentumConservation", tol.conservation},
                    {"AngularMomentumGradient", tol.conservation},
                    {"CenterOfMass.balance", com_tol},
                    {"CenterOfMass.hull", com_tol},
                    {"StokesBoundary", tol.conservation}},
                   [&] {
                       const DerivativeOperator flat = DerivativeOperator::coordinate(R);
                       const ClassicalSpacetime st = adapted_spacetime(flat, R);
                       const WorldLine gamma = central_curve(cfg, flat);
                       const double eps = cfg.body.epsilon.back();
                       const MassMomentumField m =
                           build_dust_body(st, gamma, eps, BumpProfile::with_mass(eps), dust_options(cfg));
                       const ConstantCobasis basis = standard_cobasis(flat);
                       const std::vector<double> times = cfg.slice_times();
                       const std::vector<CenterOfMass> reps = slice_reports(m, times, R, basis, quadrature(cfg));

                       const Event p = reps.front().point;
                       const Vec4d yp = basis.chart.coordinates(p);
                       const double mass = reps.front().moments.mass;
                       double dP = 0.0, dJ = 0.0, jres = 0.0, hull = -kInf;
                       for (const CenterOfMass& a : reps) {
                           jres = std::max(jres, a.j_residual);
                           hull = std::max(hull, a.hull_distance);
                           for (const CenterOfMass& b : reps) {
                               dP = std::max(dP, (a.moments.momentum - b.moments.momentum).cwiseAbs().maxCoeff());
                               dJ = std::max(dJ, (a.moments.angular_momentum_about(yp) -
                                                  b.moments.angular_momentum_about(yp))
                                                     .cwiseAbs()
                                                     .maxCoeff());
                           }
                       }

                       const std::size_t mid = reps.size() / 2;
                       const Event q = reps[mid].point;
                       const Event off(q[0], q[1] + 0.3 * eps, q[2] - 0.2 * eps, q[3] + 0.1 * eps);
                       JDerivativeOptions jo;
                       jo.quadrature = quadrature(cfg);
                       const JDerivativeReport jd = check_J_derivative(m, R, basis, {q, off}, jo);

                       double stokes = 0.0;
                       for (std::size_t i = 0; i < times.size(); ++i)
                           for (std::size_t j = i + 1; j < times.size(); ++j) {
                               const StokesReport sr = stokes_check(m, R, times[i], times[j]);
                               stokes = std::max({stokes, sr.boundary_form.cwiseAbs().maxCoeff(), sr.consistency});
                           }

                       return std::vector<CheckRow>{
                           CheckRow::make("MomentumConservation", dP / mass, tol.conservation),
                           CheckRow::make("MomentumConstancy", jd.p_residual, tol.conservation),
                           CheckRow::make("AngularMomentumConservation", dJ, tol.conservation),
                           CheckRow::make("AngularMomentumGradient", jd.j_residual, tol.conservation),
                           CheckRow::make("CenterOfMass.balance", jres, com_tol),
                           CheckRow::make("CenterOfMass.hull", std::max(0.0, hull), com_tol),
                           CheckRow::make("StokesBoundary", stokes, tol.conservation),
                       };
                   });
}

}  // namespace

std::vector<CheckRow> run_proposition_suite(const ExperimentConfig& cfg) {
    std::vector<CheckRow> rows = flat_regime_rows(cfg);
    const Setup s = make_setup(cfg);
    for (auto group : {agreeing_operator_rows(cfg, s), mass_invariance_rows(cfg, s), recovery_rows(cfg, s), equivalence_rows(cfg, s)}) {
        for (CheckRow& r : group) rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------- output

void write_rows_csv(std::ostream& os, const std::vector<CheckRow>& rows) {
    os << "check,residual,threshold,pass\n";
    for (const CheckRow& r : rows) {
        os << r.name << ',' << fmt_num(r.residual) << ',' << fmt_num(r.threshold) << ',' << (r.pass ? "PASS" : "FAIL")
           << '\n';
    }
}

void write_flux_csv(std::ostream& os, const std::vector<SliceRecord>& slices) {
    os << "t,P0,P1,P2,P3,mass,com_x,com_y,com_z,j_residual\n";
    for (const SliceRecord& s : slices) {
        os << fmt_num(s.t);
        for (int i = 0; i < 4; ++i) os << ',' << fmt_num(s.P(i));
        os << ',' << fmt_num(s.mass);
        for (int i = 0; i < 3; ++i) os << ',' << fmt_num(s.com(i));
        os << ',' << fmt_num(s.j_residual) << '\n';
    }
}

namespace {

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / name);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    return os;
}

}  // namespace

void write_rows(const std::filesystem::path& dir, const std::vector<CheckRow>& rows) {
    auto os = open_out(dir, "summary.csv");
    write_rows_csv(os, rows);
}

void write_first_law(const std::filesystem::path& dir, const FirstLawReport& r) {
    write_rows(dir, r.rows);
    auto table = open_out(dir, "first_law.csv");
    table << "eps,a_x,a_y,a_z,b_x,b_y,b_z,residual,angle\n";
    std::vector<PlotSeries> series;
    for (std::size_t k = 0; k < r.records.size(); ++k) {
        const FirstLawRecord& f = r.records[k];
        table << fmt_num(f.epsilon);
        for (int i = 0; i < 3; ++i) table << ',' << fmt_num(f.intercept(i));
        for (int i = 0; i < 3; ++i) table << ',' << fmt_num(f.slope(i));
        table << ',' << fmt_num(f.residual) << ',' << fmt_num(f.angle) << '\n';
        auto flux = open_out(dir, "flux_" + std::to_string(k) + ".csv");
        write_flux_csv(flux, f.slices);

        PlotSeries com{"COM eps=" + short_num(f.epsilon), {}, palette(k), false, true};
        PlotSeries fit{"fit eps=" + short_num(f.epsilon), {}, palette(k), true, false};
        for (const SliceRecord& s : f.slices) {
            com.points.emplace_back(s.t, s.com(0));
            fit.points.emplace_back(s.t, f.intercept(0) + f.slope(0) * s.t);
        }
        series.push_back(std::move(com));
        series.push_back(std::move(fit));
    }
    auto svg = open_out(dir, "com_track.svg");
    svg << line_plot(series, {"Center of mass track and fitted line", "t", "x", false, false});
}

void write_convergence(const std::filesystem::path& dir, const ConvergenceReport& r) {
    write_rows(dir, r.rows);
    auto table = open_out(dir, "theorem_w.csv");
    table << "eps,deviation,conservation,mass_drift,mass_error\n";
    PlotSeries dev{"deviation", {}, palette(0), true, true};
    std::vector<PlotSeries> overlay;
    for (std::size_t k = 0; k < r.records.size(); ++k) {
        const ConvergenceRecord& c = r.records[k];
        table << fmt_num(c.epsilon) << ',' << fmt_num(c.deviation) << ',' << fmt_num(c.conservation) << ','
              << fmt_num(c.mass_drift) << ',' << fmt_num(c.mass_error) << '\n';
        dev.points.emplace_back(c.epsilon, c.deviation);
        auto flux = open_out(dir, "flux_" + std::to_string(k) + ".csv");
        write_flux_csv(flux, c.slices);
        auto ref = open_out(dir, "reference_" + std::to_string(k) + ".csv");
        c.reference.write_csv(ref);

        PlotSeries com{"COM eps=" + short_num(c.epsilon), {}, palette(k), false, true};
        PlotSeries geo{"geodesic eps=" + short_num(c.epsilon), {}, palette(k), true, false};
        for (const SliceRecord& s : c.slices) com.points.emplace_back(s.com(0), s.com(1));
        for (const CurveSample& s : c.reference.samples()) geo.points.emplace_back(s.x[1], s.x[2]);
        overlay.push_back(std::move(com));
        overlay.push_back(std::move(geo));
    }
    auto order = open_out(dir, "order.csv");
    order << "fitted_order\n" << fmt_num(r.fitted_order) << '\n';
    auto svg = open_out(dir, "deviation.svg");
    svg << line_plot({dev}, {"COM deviation from the reference geodesic", "epsilon", "deviation", true, true});
    auto track = open_out(dir, "com_track.svg");
    track << line_plot(overlay, {"COM track and reference geodesic (x-y)", "x", "y", false, false});
}

void print_rows(std::ostream& os, const std::vector<CheckRow>& rows) {
    for (const CheckRow& r : rows) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "  residual=%.3e threshold=%.3e", r.residual, r.threshold);
        os << (r.pass ? "PASS " : "FAIL ") << r.name << buf << '\n';
    }
}

}  // namespace nclab
