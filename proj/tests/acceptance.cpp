// Runs every acceptance criterion at its configured tolerance and prints one
// PASS/FAIL line per criterion. Exit status is 0 only when all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nclab/config.hpp"
#include "nclab/field.hpp"
#include "nclab/flux.hpp"
#include "nclab/geodesics.hpp"
#include "nclab/harness.hpp"
#include "nclab/parallel.hpp"
#include "nclab/trautman.hpp"

using namespace nclab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Worst row by residual/threshold, and whether every row passed.
Outcome from_rows(const std::vector<CheckRow>& rows) {
    if (rows.empty()) return {false, "no rows"};
    // A failing row outranks any passing one; then the largest ratio wins.
    auto rank = [](const CheckRow& r) {
        return std::make_pair(!r.pass, r.threshold > 0.0 ? r.residual / r.threshold : INFINITY);
    };
    const CheckRow* worst = &rows.front();
    for (const CheckRow& r : rows)
        if (rank(r) > rank(*worst)) worst = &r;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu rows, worst %s residual=%.3e threshold=%.3e", rows.size(), worst->name.c_str(),
                  worst->residual, worst->threshold);
    return {all_pass(rows), buf};
}

std::vector<CheckRow> with_prefix(const std::vector<CheckRow>& rows, const std::string& prefix) {
    std::vector<CheckRow> out;
    for (const CheckRow& r : rows)
        if (r.name.rfind(prefix, 0) == 0) out.push_back(r);
    return out;
}

std::vector<CheckRow> named(const std::vector<CheckRow>& rows, const std::vector<std::string>& names) {
    std::vector<CheckRow> out;
    for (const CheckRow& r : rows)
        for (const std::string& n : names)
            if (r.name == n) out.push_back(r);
    return out;
}

void append(std::vector<CheckRow>& to, const std::vector<CheckRow>& rows, const std::string& tag) {
    for (CheckRow r : rows) {
        r.name = tag + ":" + r.name;
        to.push_back(r);
    }
}

// Convergence ratios on step halving: err(h)/err(h/2) for successive steps.
Outcome order_check(const std::string& what, const std::function<double(double)>& error, std::vector<double> steps,
                    double required) {
    double prev = error(steps.front());
    double worst = INFINITY;
    for (std::size_t i = 1; i < steps.size(); ++i) {
        const double e = error(steps[i]);
        worst = std::min(worst, prev / e);
        prev = e;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s min ratio %.2f (need >= %.0f)", what.c_str(), worst, required);
    return {worst >= required, buf};
}

Outcome numerical_orders() {
    const Box box{{-1, -3, -3, -3}, {3, 3, 3, 3}};

    // Stencil: d/dx of sin(x) exp(y/2).
    const TensorField f({}, box, [](const Event& e, double* out) { out[0] = std::sin(e[1]) * std::exp(0.5 * e[2]); });
    const Event at(0, 0.4, 0.3, 0);
    const double exact = std::cos(0.4) * std::exp(0.15);
    const Outcome stencil = order_check(
        "stencil", [&](double h) { return std::abs(partial_derivative(f, at, h).at({1}) - exact); }, {0.2, 0.1, 0.05}, 12);

    // RK4: free fall in phi = |x|^2 from rest at x = 0.5, x(t) = 0.5 cos(sqrt2 t).
    const NewtonianModel nm = newtonian_model(harmonic_potential(1.0, box), DerivativeOperator::coordinate(box), box);
    const auto ev = working_events(box, 0.0, 200);
    const GeometrizedModel g = geometrize(nm, ev);
    const Outcome rk4 = order_check(
        "rk4",
        [&](double h) {
            IntegratorOptions opt;
            opt.region = box;
            opt.fixed_step = h;
            const WorldLine w = integrate_geodesic(g.spacetime.op, Event(0, 0.5, 0, 0), {1, 0, 0, 0}, 2.0, 1.0, opt);
            return std::abs(w.samples().back().x[1] - 0.5 * std::cos(std::sqrt(2.0) * 2.0));
        },
        {0.1, 0.05, 0.025}, 12);

    // Simpson: prod (1 - x_i^2)^4 over [-1,1]^3, exact (256/315)^3.
    const Box cube{{0, -1, -1, -1}, {1, 1, 1, 1}};
    const TensorField T({Slot::Up, Slot::Up}, cube, [](const Event& e, double* out) {
        for (int i = 0; i < 16; ++i) out[i] = 0.0;
        out[0] = std::pow((1 - e[1] * e[1]) * (1 - e[2] * e[2]) * (1 - e[3] * e[3]), 4);
    });
    const ConstantCobasis basis = standard_cobasis(DerivativeOperator::coordinate(cube));
    const Outcome simpson = order_check(
        "simpson",
        [&](double h) {
            const int n = static_cast<int>(std::lround(2.0 / h));
            const SliceMesh mesh{Vec3(-1, -1, -1), h, {n, n, n}};
            const double m = integrate_slice(T, Hypersurface::slice(cube, 0.5), basis, Event(0.5, 0, 0, 0), mesh).mass;
            return std::abs(m - std::pow(256.0 / 315.0, 3));
        },
        {0.5, 0.25, 0.125}, 8);

    return {stencil.pass && rk4.pass && simpson.pass, stencil.detail + "; " + rk4.detail + "; " + simpson.detail};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Every CSV of two output trees, compared byte for byte.
Outcome same_csvs(const fs::path& a, const fs::path& b) {
    std::size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (entry.path().extension() != ".csv") continue;
        const fs::path other = b / fs::relative(entry.path(), a);
        const std::string x = slurp(entry.path());
        if (x.empty() || x != slurp(other)) return {false, "differs: " + fs::relative(entry.path(), a).string()};
        ++files;
    }
    return {files > 0, std::to_string(files) + " CSV files identical"};
}

Outcome determinism(const ExperimentConfig& flat, const ExperimentConfig& boosted, const ExperimentConfig& harmonic) {
    const fs::path root = fs::temp_directory_path() / "nclab_acceptance";
    fs::remove_all(root);
    const unsigned saved = thread_count();
    for (unsigned threads : {1u, 4u}) {
        set_thread_count(threads);
        const fs::path dir = root / ("threads" + std::to_string(threads));
        write_rows(dir / "props", run_proposition_suite(flat));
        write_first_law(dir / "first_law", run_first_law(boosted));
        write_rows(dir / "geometrize", run_geometrize(harmonic));
    }
    set_thread_count(saved);
    const Outcome o = same_csvs(root / "threads1", root / "threads4");
    fs::remove_all(root);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path configs = argc > 1 ? fs::path(argv[1]) : fs::path("configs");
    auto load = [&](const char* name) { return ExperimentConfig::load((configs / name).string()); };
    const ExperimentConfig flat = load("flat.yaml");
    const ExperimentConfig harmonic = load("harmonic.yaml");
    const ExperimentConfig point_mass = load("point_mass.yaml");
    const ExperimentConfig still = load("static.yaml");
    const ExperimentConfig boosted = load("boosted.yaml");

    struct Criterion {
        std::string name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"metric compatibility",
         [&] {
             std::vector<CheckRow> rows;
             for (const auto* c : {&flat, &harmonic, &point_mass})
                 append(rows, with_prefix(check_spacetime(*c), "Structure."), to_string(c->spacetime.potential));
             return from_rows(rows);
         }},
        {"curvature conditions of geometrized models",
         [&] {
             std::vector<CheckRow> rows;
             for (const auto* c : {&flat, &harmonic, &point_mass})
                 append(rows, with_prefix(run_geometrize(*c), "Geometrized."), to_string(c->spacetime.potential));
             return from_rows(rows);
         }},
        {"geodesic equivalence with forced motion",
         [&] {
             std::vector<CheckRow> rows;
             for (const auto* c : {&flat, &harmonic, &point_mass}) {
                 const Setup s = make_setup(*c);
                 append(rows, equivalence_rows(*c, s), to_string(c->spacetime.potential));
             }
             return from_rows(rows);
         }},
        {"recovery round trip",
         [&] {
             std::vector<CheckRow> rows;
             for (const auto* c : {&harmonic, &point_mass})
                 append(rows, run_recovery(*c), to_string(c->spacetime.potential));
             return from_rows(rows);
         }},
        {"momentum and angular momentum conservation",
         [&] {
             return from_rows(named(run_proposition_suite(flat),
                                    {"MomentumConservation", "MomentumConstancy", "AngularMomentumConservation",
                                     "AngularMomentumGradient"}));
         }},
        {"mass invariance under an arbitrary flat operator",
         [&] { return from_rows(mass_invariance_rows(point_mass, make_setup(point_mass))); }},
        {"flat operator agreeing along a curve",
         [&] { return from_rows(agreeing_operator_rows(point_mass, make_setup(point_mass))); }},
        {"straight center-of-mass track in flat spacetime",
         [&] {
             std::vector<CheckRow> rows;
             append(rows, run_first_law(still).rows, "static");
             append(rows, run_first_law(boosted).rows, "boosted");
             return from_rows(rows);
         }},
        {"convergence of the center of mass to a geodesic",
         [&] {
             std::vector<CheckRow> rows;
             for (const auto* c : {&harmonic, &point_mass})
                 append(rows, run_theorem_w_sweep(*c).rows, to_string(c->spacetime.potential));
             return from_rows(rows);
         }},
        {"numerical orders", numerical_orders},
        {"determinism across thread counts", [&] { return determinism(flat, boosted, harmonic); }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s [%zu] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
