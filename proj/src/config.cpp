#include "nclab/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "nclab/errors.hpp"

namespace nclab {

namespace {

void reject_unknown(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
    if (!node.IsMap()) throw ConfigError(where + " must be a table");
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T read(const YAML::Node& node, const std::string& key, const std::string& where, T fallback) {
    if (!node[key]) return fallback;
    try {
        return node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("bad value for " + where + "." + key);
    }
}

template <std::size_t N>
std::array<double, N> read_array(const YAML::Node& node, const std::string& key, const std::string& where,
                                 std::array<double, N> fallback) {
    if (!node[key]) return fallback;
    const auto v = read<std::vector<double>>(node, key, where, {});
    if (v.size() != N) throw ConfigError(where + "." + key + " needs " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

void positive(double v, const std::string& name) {
    if (!(v > 0.0)) throw ConfigError(name + " must be positive");
}

}  // namespace

Tolerances Tolerances::scaled(double f) const {
    Tolerances t = *this;
    for (double* p : {&t.compatibility, &t.curvature, &t.ode, &t.recovery_phi, &t.recovery_operator, &t.conservation,
                      &t.mass_invariance, &t.agreeing_operator, &t.com_relative, &t.first_law_residual, &t.first_law_angle,
                      &t.quadrature, &t.dust}) {
        *p *= f;
    }
    return t;
}

std::string to_string(PotentialKind k) {
    switch (k) {
        case PotentialKind::Zero: return "zero";
        case PotentialKind::Harmonic: return "harmonic";
        case PotentialKind::PointMass: return "point_mass";
        case PotentialKind::Uniform: return "uniform";
    }
    return "zero";
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    ExperimentConfig c;
    if (root.IsNull()) throw ConfigError("config is empty");
    reject_unknown(root, "config",
                   {"seed", "region", "spacetime", "body", "slices", "quadrature", "samples", "tolerances", "output"});
    c.seed = read<std::uint64_t>(root, "seed", "config", c.seed);

    if (!root["region"]) throw ConfigError("config needs a region");
    const YAML::Node region = root["region"];
    reject_unknown(region, "region", {"lo", "hi"});
    c.region.lo = read_array<4>(region, "lo", "region", {});
    c.region.hi = read_array<4>(region, "hi", "region", {});
    for (int i = 0; i < 4; ++i) {
        if (!(c.region.hi[static_cast<std::size_t>(i)] > c.region.lo[static_cast<std::size_t>(i)])) {
            throw ConfigError("region.hi must exceed region.lo on every axis");
        }
    }

    if (const YAML::Node st = root["spacetime"]) {
        reject_unknown(st, "spacetime", {"potential", "strength", "singular_radius"});
        const std::string p = read<std::string>(st, "potential", "spacetime", "zero");
        if (p == "zero") c.spacetime.potential = PotentialKind::Zero;
        else if (p == "harmonic") c.spacetime.potential = PotentialKind::Harmonic;
        else if (p == "point_mass") c.spacetime.potential = PotentialKind::PointMass;
        else if (p == "uniform") c.spacetime.potential = PotentialKind::Uniform;
        else throw ConfigError("unknown potential '" + p + "'");
        c.spacetime.strength = read<double>(st, "strength", "spacetime", c.spacetime.strength);
        c.spacetime.singular_radius = read<double>(st, "singular_radius", "spacetime", c.spacetime.singular_radius);
        positive(c.spacetime.singular_radius, "spacetime.singular_radius");
    }

    if (const YAML::Node b = root["body"]) {
        reject_unknown(b, "body", {"center", "velocity", "epsilon", "window", "lattice", "clip_radius"});
        c.body.center = read_array<3>(b, "center", "body", c.body.center);
        c.body.velocity = read_array<3>(b, "velocity", "body", c.body.velocity);
        c.body.epsilon = read<std::vector<double>>(b, "epsilon", "body", c.body.epsilon);
        c.body.window = read_array<2>(b, "window", "body", c.body.window);
        c.body.lattice = read<int>(b, "lattice", "body", c.body.lattice);
        c.body.clip_radius = read<double>(b, "clip_radius", "body", c.body.clip_radius);
    }
    if (c.body.epsilon.empty()) throw ConfigError("body.epsilon needs at least one radius");
    for (std::size_t i = 0; i < c.body.epsilon.size(); ++i) {
        positive(c.body.epsilon[i], "body.epsilon");
        if (i > 0 && !(c.body.epsilon[i] < c.body.epsilon[i - 1])) {
            throw ConfigError("body.epsilon must be strictly decreasing");
        }
    }
    if (!(c.body.window[1] > c.body.window[0])) throw ConfigError("body.window must be increasing");
    if (c.body.window[0] < c.region.lo[0] || c.body.window[1] > c.region.hi[0]) {
        throw ConfigError("body.window must lie inside the region's time range");
    }
    if (c.body.lattice < 4) throw ConfigError("body.lattice must be at least 4");
    if (c.body.clip_radius < 0.0) throw ConfigError("body.clip_radius must not be negative");

    if (const YAML::Node s = root["slices"]) {
        reject_unknown(s, "slices", {"count"});
        c.slice_count = read<int>(s, "count", "slices", c.slice_count);
    }
    if (c.slice_count < 2) throw ConfigError("slices.count must be at least 2");
    if (const YAML::Node q = root["quadrature"]) {
        reject_unknown(q, "quadrature", {"intervals"});
        c.quadrature_intervals = read<int>(q, "intervals", "quadrature", c.quadrature_intervals);
    }
    if (c.quadrature_intervals < 4 || c.quadrature_intervals % 2) {
        throw ConfigError("quadrature.intervals must be even and at least 4");
    }
    if (const YAML::Node s = root["samples"]) {
        reject_unknown(s, "samples", {"events", "initial_conditions"});
        c.sample_events = read<std::size_t>(s, "events", "samples", c.sample_events);
        c.initial_conditions = read<int>(s, "initial_conditions", "samples", c.initial_conditions);
    }
    if (c.sample_events < 1 || c.initial_conditions < 1) throw ConfigError("sample counts must be positive");

    if (const YAML::Node t = root["tolerances"]) {
        reject_unknown(t, "tolerances",
                       {"compatibility", "curvature", "ode", "recovery_phi", "recovery_operator", "conservation",
                        "mass_invariance", "agreeing_operator", "com_relative", "first_law_residual", "first_law_angle",
                        "quadrature", "dust"});
        Tolerances& tol = c.tolerances;
        const std::pair<const char*, double*> fields[] = {
            {"compatibility", &tol.compatibility},
            {"curvature", &tol.curvature},
            {"ode", &tol.ode},
            {"recovery_phi", &tol.recovery_phi},
            {"recovery_operator", &tol.recovery_operator},
            {"conservation", &tol.conservation},
            {"mass_invariance", &tol.mass_invariance},
            {"agreeing_operator", &tol.agreeing_operator},
            {"com_relative", &tol.com_relative},
            {"first_law_residual", &tol.first_law_residual},
            {"first_law_angle", &tol.first_law_angle},
            {"quadrature", &tol.quadrature},
            {"dust", &tol.dust},
        };
        for (const auto& [name, ptr] : fields) {
            *ptr = read<double>(t, name, "tolerances", *ptr);
            positive(*ptr, std::string("tolerances.") + name);
        }
    }
    if (const YAML::Node o = root["output"]) {
        reject_unknown(o, "output", {"dir"});
        c.output_dir = read<std::string>(o, "dir", "output", c.output_dir);
    }
    return c;
}

std::string ExperimentConfig::to_yaml() const {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    auto seq = [&out](const auto& values) {
        out << YAML::Flow << YAML::BeginSeq;
        for (double v : values) out << v;
        out << YAML::EndSeq;
    };
    out << YAML::BeginMap;
    out << YAML::Key << "seed" << YAML::Value << seed;
    out << YAML::Key << "region" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "lo" << YAML::Value;
    seq(region.lo);
    out << YAML::Key << "hi" << YAML::Value;
    seq(region.hi);
    out << YAML::EndMap;
    out << YAML::Key << "spacetime" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "potential" << YAML::Value << to_string(spacetime.potential);
    out << YAML::Key << "strength" << YAML::Value << spacetime.strength;
    out << YAML::Key << "singular_radius" << YAML::Value << spacetime.singular_radius;
    out << YAML::EndMap;
    out << YAML::Key << "body" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "center" << YAML::Value;
    seq(body.center);
    out << YAML::Key << "velocity" << YAML::Value;
    seq(body.velocity);
    out << YAML::Key << "epsilon" << YAML::Value;
    seq(body.epsilon);
    out << YAML::Key << "window" << YAML::Value;
    seq(body.window);
    out << YAML::Key << "lattice" << YAML::Value << body.lattice;
    out << YAML::Key << "clip_radius" << YAML::Value << body.clip_radius;
    out << YAML::EndMap;
    out << YAML::Key << "slices" << YAML::Value << YAML::BeginMap << YAML::Key << "count" << YAML::Value
        << slice_count << YAML::EndMap;
    out << YAML::Key << "quadrature" << YAML::Value << YAML::BeginMap << YAML::Key << "intervals" << YAML::Value
        << quadrature_intervals << YAML::EndMap;
    out << YAML::Key << "samples" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "events" << YAML::Value << sample_events;
    out << YAML::Key << "initial_conditions" << YAML::Value << initial_conditions;
    out << YAML::EndMap;
    const Tolerances& t = tolerances;
    out << YAML::Key << "tolerances" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, v] : std::initializer_list<std::pair<const char*, double>>{
             {"compatibility", t.compatibility},
             {"curvature", t.curvature},
             {"ode", t.ode},
             {"recovery_phi", t.recovery_phi},
             {"recovery_operator", t.recovery_operator},
             {"conservation", t.conservation},
             {"mass_invariance", t.mass_invariance},
             {"agreeing_operator", t.agreeing_operator},
             {"com_relative", t.com_relative},
             {"first_law_residual", t.first_law_residual},
             {"first_law_angle", t.first_law_angle},
             {"quadrature", t.quadrature},
             {"dust", t.dust},
         }) {
        out << YAML::Key << name << YAML::Value << v;
    }
    out << YAML::EndMap;
    out << YAML::Key << "output" << YAML::Value << YAML::BeginMap << YAML::Key << "dir" << YAML::Value << output_dir
        << YAML::EndMap;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::vector<double> ExperimentConfig::slice_times() const {
    std::vector<double> t;
    for (int i = 0; i < slice_count; ++i) {
        t.push_back(body.window[0] + (body.window[1] - body.window[0]) * i / (slice_count - 1));
    }
    return t;
}

}  // namespace nclab
