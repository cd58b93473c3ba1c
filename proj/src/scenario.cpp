#include "formlab/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "formlab/linalg.hpp"
#include "formlab/rng.hpp"

namespace formlab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
    throw ValidationError(origin + ": " + what);
}

const json& require_field(const json& j, const std::string& key, const std::string& origin) {
    const auto it = j.find(key);
    if (it == j.end()) {
        fail(origin, "missing required field '" + key + "'");
    }
    return *it;
}

double as_number(const json& j, const std::string& key, const std::string& origin) {
    if (!j.is_number()) {
        fail(origin, "field '" + key + "' must be a number");
    }
    return j.get<double>();
}

int as_int(const json& j, const std::string& key, const std::string& origin) {
    if (!j.is_number_integer()) {
        fail(origin, "field '" + key + "' must be an integer");
    }
    return j.get<int>();
}

Eigen::VectorXd as_vector(const json& j, const std::string& key, const std::string& origin) {
    if (!j.is_array()) {
        fail(origin, "field '" + key + "' must be an array of numbers");
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = as_number(j[i], key, origin);
    }
    return out;
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& key, const std::string& origin) {
    if (!j.is_array() || j.empty()) {
        fail(origin, "field '" + key + "' must be an array of rows");
    }
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) {
        fail(origin, "field '" + key + "' must contain non-empty rows");
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) {
            fail(origin, "field '" + key + "': row " + std::to_string(r + 1) +
                             " has inconsistent length");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                as_number(j[r][c], key, origin);
        }
    }
    return out;
}

ControllerKind parse_controller(const std::string& name, const std::string& origin) {
    if (name == "nominal") return ControllerKind::Nominal;
    if (name == "maneuver") return ControllerKind::Maneuver;
    if (name == "faulty") return ControllerKind::Faulty;
    fail(origin, "unknown controller '" + name + "' (expected nominal|maneuver|faulty)");
}

std::string controller_name(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::Nominal: return "nominal";
        case ControllerKind::Maneuver: return "maneuver";
        case ControllerKind::Faulty: return "faulty";
    }
    return "nominal";
}

}  // namespace

Command parse_command(const std::string& name) {
    if (name == "check") return Command::Check;
    if (name == "design") return Command::Design;
    if (name == "predict") return Command::Predict;
    if (name == "simulate") return Command::Simulate;
    if (name == "full") return Command::Full;
    throw ValidationError("unknown command '" + name +
                          "' (expected check|design|predict|simulate|full)");
}

std::string command_name(Command c) {
    switch (c) {
        case Command::Check: return "check";
        case Command::Design: return "design";
        case Command::Predict: return "predict";
        case Command::Simulate: return "simulate";
        case Command::Full: return "full";
    }
    return "full";
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open scenario file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str(), path);
}

Scenario parse_scenario(const std::string& json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < json_text.size(); ++i) {
            if (json_text[i] == '\n') ++line;
        }
        throw ValidationError(origin + ": JSON parse error at line " +
                              std::to_string(line) + ": " + e.what());
    }
    if (!j.is_object()) {
        fail(origin, "scenario must be a JSON object");
    }

    Scenario sc;
    sc.name = require_field(j, "name", origin).get<std::string>();
    sc.dim = as_int(require_field(j, "dimension", origin), "dimension", origin);
    if (sc.dim < 1) {
        fail(origin, "dimension must be >= 1");
    }

    const json& nodes = require_field(j, "nodes", origin);
    sc.node_count = as_int(require_field(nodes, "count", origin), "nodes.count", origin);
    const Eigen::MatrixXd ref =
        as_matrix(require_field(nodes, "reference", origin), "nodes.reference", origin);
    if (ref.rows() != sc.node_count || ref.cols() != sc.dim) {
        fail(origin, "nodes.reference must be count x dimension (" +
                         std::to_string(sc.node_count) + " x " + std::to_string(sc.dim) +
                         ")");
    }
    sc.reference.resize(static_cast<Eigen::Index>(sc.node_count) * sc.dim);
    for (int i = 0; i < sc.node_count; ++i) {
        sc.reference.segment(i * sc.dim, sc.dim) = ref.row(i).transpose();
    }

    const json& edges = require_field(j, "edges", origin);
    if (!edges.is_array()) {
        fail(origin, "edges must be an array of [tail, head] or [tail, head, weight]");
    }
    bool any_weight = false;
    std::vector<double> weights(edges.size(), 1.0);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const json& e = edges[k];
        if (!e.is_array() || e.size() < 2 || e.size() > 3) {
            fail(origin, "edge " + std::to_string(k + 1) +
                             " must be [tail, head] or [tail, head, weight]");
        }
        sc.edges.emplace_back(as_int(e[0], "edges", origin), as_int(e[1], "edges", origin));
        if (e.size() == 3) {
            weights[k] = as_number(e[2], "edges", origin);
            any_weight = true;
        }
    }
    if (any_weight) {
        sc.weights = std::move(weights);
    }

    sc.controller = parse_controller(
        require_field(j, "controller", origin).get<std::string>(), origin);

    if (j.contains("maneuver")) {
        const json& man = j["maneuver"];
        Scenario::ManeuverSection section;
        section.v_star = as_vector(require_field(man, "v_star", origin), "maneuver.v_star",
                                   origin);
        if (section.v_star.size() != sc.dim) {
            fail(origin, "maneuver.v_star must have 'dimension' entries");
        }
        if (man.contains("mode")) {
            const std::string mode = man["mode"].get<std::string>();
            if (mode == "scalar") {
                section.mode = MotionMode::Scalar;
            } else if (mode == "matrix") {
                section.mode = MotionMode::Matrix;
            } else {
                fail(origin, "maneuver.mode must be scalar|matrix");
            }
        }
        const json& kappa = require_field(man, "kappa", origin);
        if (kappa.is_string()) {
            if (kappa.get<std::string>() != "half-bound") {
                fail(origin, "maneuver.kappa must be a number or \"half-bound\"");
            }
            section.half_bound_kappa = true;
        } else {
            section.kappa = as_number(kappa, "maneuver.kappa", origin);
        }
        if (man.contains("mu")) {
            for (const json& entry : man["mu"]) {
                ExplicitMu mu;
                mu.i = as_int(require_field(entry, "i", origin), "mu.i", origin);
                mu.j = as_int(require_field(entry, "j", origin), "mu.j", origin);
                if (entry.contains("value")) {
                    mu.value = as_number(entry["value"], "mu.value", origin);
                } else if (entry.contains("block")) {
                    mu.block = as_matrix(entry["block"], "mu.block", origin);
                } else {
                    fail(origin, "each mu entry needs 'value' (scalar mode) or 'block'");
                }
                section.mu.push_back(std::move(mu));
            }
        }
        sc.maneuver = std::move(section);
    }

    if (j.contains("sensors")) {
        const json& sen = j["sensors"];
        Scenario::SensorSection section;
        section.scales = as_vector(require_field(sen, "a", origin), "sensors.a", origin);
        if (section.scales.size() != sc.node_count) {
            fail(origin, "sensors.a must have one entry per agent");
        }
        if (sen.contains("theta")) {
            if (sc.dim != 2) {
                fail(origin, "sensors.theta is only valid in 2D; give explicit sensors.R");
            }
            section.angles = as_vector(sen["theta"], "sensors.theta", origin);
            if (section.angles->size() != sc.node_count) {
                fail(origin, "sensors.theta must have one entry per agent");
            }
        } else if (sen.contains("R")) {
            const json& rs = sen["R"];
            if (!rs.is_array() || rs.size() != static_cast<std::size_t>(sc.node_count)) {
                fail(origin, "sensors.R must list one rotation per agent");
            }
            for (const json& r : rs) {
                section.rotations.push_back(as_matrix(r, "sensors.R", origin));
            }
        } else {
            fail(origin, "sensors needs 'theta' (2D) or explicit 'R' matrices");
        }
        sc.sensors = std::move(section);
    }

    // Exactly one controller-specific section, matching the controller kind.
    switch (sc.controller) {
        case ControllerKind::Nominal:
            if (sc.maneuver || sc.sensors) {
                fail(origin, "nominal controller takes no maneuver/sensors section");
            }
            break;
        case ControllerKind::Maneuver:
            if (!sc.maneuver) fail(origin, "maneuver controller needs a 'maneuver' section");
            if (sc.sensors) fail(origin, "maneuver controller takes no 'sensors' section");
            break;
        case ControllerKind::Faulty:
            if (!sc.sensors) fail(origin, "faulty controller needs a 'sensors' section");
            if (sc.maneuver) fail(origin, "faulty controller takes no 'maneuver' section");
            break;
    }

    if (j.contains("initial")) {
        const json& init = j["initial"];
        if (init.contains("positions")) {
            const Eigen::MatrixXd p0 =
                as_matrix(init["positions"], "initial.positions", origin);
            if (p0.rows() != sc.node_count || p0.cols() != sc.dim) {
                fail(origin, "initial.positions must be count x dimension");
            }
            Eigen::VectorXd stacked(static_cast<Eigen::Index>(sc.node_count) * sc.dim);
            for (int i = 0; i < sc.node_count; ++i) {
                stacked.segment(i * sc.dim, sc.dim) = p0.row(i).transpose();
            }
            sc.initial.positions = std::move(stacked);
        } else if (init.contains("random")) {
            const json& rnd = init["random"];
            sc.initial.random = true;
            if (rnd.contains("seed")) {
                sc.initial.seed = rnd["seed"].get<std::uint64_t>();
            }
            if (rnd.contains("box")) {
                const Eigen::VectorXd box = as_vector(rnd["box"], "initial.random.box", origin);
                if (box.size() != 2 || !(box(0) < box(1))) {
                    fail(origin, "initial.random.box must be [lo, hi] with lo < hi");
                }
                sc.initial.box_lo = box(0);
                sc.initial.box_hi = box(1);
            }
        } else {
            fail(origin, "initial needs 'positions' or 'random'");
        }
    } else {
        sc.initial.random = true;
    }

    if (j.contains("integration")) {
        const json& integ = j["integration"];
        if (integ.contains("dt")) sc.dt = as_number(integ["dt"], "integration.dt", origin);
        if (integ.contains("T")) sc.t_final = as_number(integ["T"], "integration.T", origin);
        if (!(sc.dt > 0.0) || !(sc.t_final >= sc.dt)) {
            fail(origin, "integration needs dt > 0 and T >= dt");
        }
    }

    if (j.contains("output")) {
        const json& out = j["output"];
        if (out.contains("trajectory")) sc.output.trajectory = out["trajectory"];
        if (out.contains("metrics")) sc.output.metrics = out["metrics"];
        if (out.contains("report")) sc.output.report = out["report"];
    }
    return sc;
}

std::string format_g17(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

namespace {

std::string coord_name(int axis, int dim) {
    static const char* xyz = "xyz";
    if (dim <= 3) return std::string(1, xyz[axis]);
    return "c" + std::to_string(axis + 1);
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj, int dim) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open '" + path + "' for writing");
    }
    const int n = static_cast<int>(traj.states.front().size()) / dim;
    out << "t";
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < dim; ++a) {
            out << ",p" << i + 1 << coord_name(a, dim);
        }
    }
    out << "\n";
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        out << format_g17(traj.times[k]);
        for (Eigen::Index c = 0; c < traj.states[k].size(); ++c) {
            out << ',' << format_g17(traj.states[k](c));
        }
        out << "\n";
    }
}

void write_metrics_csv(const std::string& path, const Trajectory& traj,
                       const ConvergenceMetrics& metrics) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open '" + path + "' for writing");
    }
    out << "t,shape_error,velocity_error\n";
    for (std::size_t k = 0; k < metrics.shape_error.size(); ++k) {
        out << format_g17(traj.times[k]) << ',' << format_g17(metrics.shape_error[k]) << ','
            << format_g17(metrics.velocity_error[k]) << "\n";
    }
}

namespace {

json spectrum_to_json(const AnalysisReport::Spectrum& s) {
    json eig = json::array();
    for (const auto& [re, im] : s.eigenvalues) {
        eig.push_back(json::array({re, im}));
    }
    return json{{"eigenvalues", eig},
                {"zero_count", s.zero_count},
                {"min_nonzero_real", s.min_nonzero_real},
                {"stable", s.stable}};
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return out;
}

}  // namespace

std::string AnalysisReport::to_json() const {
    json j;
    j["scenario"] = {{"name", scenario_name}, {"dimension", dim},
                     {"nodes", node_count},   {"edges", edge_count},
                     {"controller", controller}};
    j["command"] = command;
    j["graph"] = {{"connected", connected}, {"tree", tree}};
    if (spectrum) {
        j["spectrum"] = spectrum_to_json(*spectrum);
    }
    if (design) {
        json d;
        d["mode"] = design->mode;
        d["kappa"] = design->kappa;
        if (design->kappa_bound) {
            d["kappa_bound"] = *design->kappa_bound;
        }
        d["v_star"] = vector_to_json(design->v_star);
        json mus = json::array();
        for (const ExplicitMu& mu : design->mu) {
            json entry{{"i", mu.i}, {"j", mu.j}};
            if (mu.block.size() > 0) {
                json rows = json::array();
                for (Eigen::Index r = 0; r < mu.block.rows(); ++r) {
                    json row = json::array();
                    for (Eigen::Index c = 0; c < mu.block.cols(); ++c) {
                        row.push_back(mu.block(r, c));
                    }
                    rows.push_back(row);
                }
                entry["block"] = rows;
            } else {
                entry["value"] = mu.value;
            }
            mus.push_back(entry);
        }
        d["mu"] = mus;
        j["design"] = d;
    }
    if (prediction) {
        json p;
        p["a"] = vector_to_json(prediction->scales);
        if (!prediction->angles.empty()) {
            p["r"] = prediction->angles;
        }
        json rows = json::array();
        for (const auto& [x, y] : prediction->z_tilde) {
            rows.push_back(json::array({x, y}));
        }
        p["z_tilde"] = rows;
        p["z_tilde_stacked"] = vector_to_json(prediction->z_tilde_stacked);
        p["v_tilde"] = vector_to_json(prediction->v_tilde);
        p["m_breve_max_abs"] = prediction->m_breve_max_abs;
        p["consistency_residual"] = prediction->consistency_residual;
        p["realizable"] = prediction->realizable;
        j["prediction"] = p;
    }
    if (simulation) {
        json s;
        s["seed"] = simulation->seed;
        s["seeded_random"] = simulation->seeded_random;
        s["dt"] = simulation->dt;
        s["T"] = simulation->t_final;
        s["steps"] = simulation->steps;
        s["final_shape_error"] = simulation->final_shape_error;
        s["final_velocity_error"] = simulation->final_velocity_error;
        s["threshold"] = simulation->threshold;
        s["settled"] = simulation->settled;
        if (std::isnan(simulation->settling_time)) {
            s["settling_time"] = nullptr;
        } else {
            s["settling_time"] = simulation->settling_time;
        }
        s["diverged"] = simulation->diverged;
        s["divergence_step"] = simulation->divergence_step;
        j["simulation"] = s;
    }
    j["files"] = files;
    return j.dump(2);
}

AnalysisReport AnalysisReport::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("report JSON parse error: ") + e.what());
    }
    AnalysisReport rep;
    const json& sc = j.at("scenario");
    rep.scenario_name = sc.at("name").get<std::string>();
    rep.dim = sc.at("dimension").get<int>();
    rep.node_count = sc.at("nodes").get<int>();
    rep.edge_count = sc.at("edges").get<int>();
    rep.controller = sc.at("controller").get<std::string>();
    rep.command = j.at("command").get<std::string>();
    rep.connected = j.at("graph").at("connected").get<bool>();
    rep.tree = j.at("graph").at("tree").get<bool>();
    if (j.contains("spectrum")) {
        Spectrum s;
        for (const json& e : j["spectrum"].at("eigenvalues")) {
            s.eigenvalues.emplace_back(e[0].get<double>(), e[1].get<double>());
        }
        s.zero_count = j["spectrum"].at("zero_count").get<int>();
        s.min_nonzero_real = j["spectrum"].at("min_nonzero_real").get<double>();
        s.stable = j["spectrum"].at("stable").get<bool>();
        rep.spectrum = std::move(s);
    }
    if (j.contains("design")) {
        Design d;
        d.mode = j["design"].at("mode").get<std::string>();
        d.kappa = j["design"].at("kappa").get<double>();
        if (j["design"].contains("kappa_bound")) {
            d.kappa_bound = j["design"]["kappa_bound"].get<double>();
        }
        d.v_star = vector_from_json(j["design"].at("v_star"));
        for (const json& entry : j["design"].at("mu")) {
            ExplicitMu mu;
            mu.i = entry.at("i").get<int>();
            mu.j = entry.at("j").get<int>();
            if (entry.contains("block")) {
                const json& rows = entry["block"];
                mu.block.resize(static_cast<Eigen::Index>(rows.size()),
                                static_cast<Eigen::Index>(rows[0].size()));
                for (std::size_t r = 0; r < rows.size(); ++r) {
                    for (std::size_t c = 0; c < rows[r].size(); ++c) {
                        mu.block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                            rows[r][c].get<double>();
                    }
                }
            } else {
                mu.value = entry.at("value").get<double>();
            }
            d.mu.push_back(std::move(mu));
        }
        rep.design = std::move(d);
    }
    if (j.contains("prediction")) {
        Prediction p;
        p.scales = vector_from_json(j["prediction"].at("a"));
        if (j["prediction"].contains("r")) {
            p.angles = j["prediction"]["r"].get<std::vector<double>>();
        }
        for (const json& row : j["prediction"].at("z_tilde")) {
            p.z_tilde.emplace_back(row[0].get<double>(), row[1].get<double>());
        }
        p.z_tilde_stacked = vector_from_json(j["prediction"].at("z_tilde_stacked"));
        p.v_tilde = vector_from_json(j["prediction"].at("v_tilde"));
        p.m_breve_max_abs = j["prediction"].at("m_breve_max_abs").get<double>();
        p.consistency_residual = j["prediction"].at("consistency_residual").get<double>();
        p.realizable = j["prediction"].at("realizable").get<bool>();
        rep.prediction = std::move(p);
    }
    if (j.contains("simulation")) {
        Simulation s;
        const json& js = j["simulation"];
        s.seed = js.at("seed").get<std::uint64_t>();
        s.seeded_random = js.at("seeded_random").get<bool>();
        s.dt = js.at("dt").get<double>();
        s.t_final = js.at("T").get<double>();
        s.steps = js.at("steps").get<long>();
        s.final_shape_error = js.at("final_shape_error").get<double>();
        s.final_velocity_error = js.at("final_velocity_error").get<double>();
        s.threshold = js.at("threshold").get<double>();
        s.settled = js.at("settled").get<bool>();
        s.settling_time = js.at("settling_time").is_null()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : js.at("settling_time").get<double>();
        s.diverged = js.at("diverged").get<bool>();
        s.divergence_step = js.at("divergence_step").get<long>();
        rep.simulation = std::move(s);
    }
    rep.files = j.at("files").get<std::vector<std::string>>();
    return rep;
}

void AnalysisReport::validate() const {
    if (scenario_name.empty()) throw ValidationError("report: empty scenario name");
    if (dim < 1) throw ValidationError("report: dimension must be >= 1");
    if (node_count < 2) throw ValidationError("report: node count must be >= 2");
    if (controller != "nominal" && controller != "maneuver" && controller != "faulty") {
        throw ValidationError("report: unknown controller '" + controller + "'");
    }
    parse_command(command);
    if (spectrum) {
        if (spectrum->eigenvalues.size() !=
            static_cast<std::size_t>(dim) * static_cast<std::size_t>(node_count)) {
            throw ValidationError("report: spectrum size does not match dim * nodes");
        }
        if (spectrum->zero_count < 0 ||
            spectrum->zero_count > static_cast<int>(spectrum->eigenvalues.size())) {
            throw ValidationError("report: zero_count out of range");
        }
    }
    if (design && design->v_star.size() != dim) {
        throw ValidationError("report: design v_star dimension mismatch");
    }
    if (prediction) {
        if (prediction->v_tilde.size() != dim) {
            throw ValidationError("report: prediction v_tilde dimension mismatch");
        }
        if (prediction->scales.size() != node_count) {
            throw ValidationError("report: prediction scale count mismatch");
        }
        if (prediction->z_tilde_stacked.size() != static_cast<Eigen::Index>(dim) * edge_count) {
            throw ValidationError("report: prediction z_tilde size mismatch");
        }
    }
    if (simulation) {
        // A run that diverges on the first step legitimately records 0 steps.
        if (!(simulation->dt > 0.0) || simulation->steps < 0) {
            throw ValidationError("report: simulation summary is inconsistent");
        }
    }
}

namespace {

struct PreparedManeuver {
    ManeuverDesign design;
    std::optional<double> bound;
};

PreparedManeuver prepare_maneuver(const Scenario& sc, const Graph& g,
                                  const ReferenceShape& shape) {
    const Scenario::ManeuverSection& section = *sc.maneuver;
    const double omega_star = sc.weights.empty() ? 1.0 : sc.weights.front();

    MotionParams params;
    if (!section.mu.empty()) {
        params.mode = section.mode;
        params.dim = sc.dim;
        for (const ExplicitMu& mu : section.mu) {
            if (section.mode == MotionMode::Scalar) {
                params.scalars[{mu.i - 1, mu.j - 1}] = mu.value;
            } else {
                params.blocks[{mu.i - 1, mu.j - 1}] = mu.block;
            }
        }
    } else {
        // With "half-bound", mu is designed for the reference velocity at
        // kappa = 1; the operative v* is then kappa * v_reference.
        const double design_kappa = section.half_bound_kappa ? 1.0 : section.kappa;
        params = design_motion_params(g, shape, section.v_star, section.mode, design_kappa);
    }

    PreparedManeuver out;
    double kappa = section.kappa;
    if (section.half_bound_kappa) {
        const ManeuverDesign probe = build_maneuver(params, g, shape, 1.0);
        kappa = 0.5 * kappa_bound(g, probe.M_hat, omega_star);
    }
    out.design = build_maneuver(params, g, shape, kappa);
    try {
        out.bound = kappa_bound(g, out.design.M_hat, omega_star);
    } catch (const ValidationError&) {
        out.bound = std::nullopt;  // cycles or non-uniform weights: no closed-form bound
    }
    return out;
}

std::vector<ExplicitMu> motion_to_entries(const MotionParams& params) {
    std::vector<ExplicitMu> out;
    for (const auto& [key, value] : params.scalars) {
        ExplicitMu mu;
        mu.i = key.first + 1;
        mu.j = key.second + 1;
        mu.value = value;
        out.push_back(std::move(mu));
    }
    for (const auto& [key, value] : params.blocks) {
        ExplicitMu mu;
        mu.i = key.first + 1;
        mu.j = key.second + 1;
        mu.block = value;
        out.push_back(std::move(mu));
    }
    return out;
}

AnalysisReport::Spectrum spectrum_summary(const SpectrumReport& report) {
    AnalysisReport::Spectrum out;
    for (Eigen::Index i = 0; i < report.eigenvalues.size(); ++i) {
        out.eigenvalues.emplace_back(report.eigenvalues(i).real(),
                                     report.eigenvalues(i).imag());
    }
    out.zero_count = report.zero_count;
    out.min_nonzero_real = report.min_nonzero_real;
    out.stable = report.stable;
    return out;
}

}  // namespace

AnalysisReport run_scenario(const Scenario& sc, Command command, const RunOptions& options) {
    const std::string context = "scenario '" + sc.name + "'";

    AnalysisReport rep;
    rep.scenario_name = sc.name;
    rep.command = command_name(command);
    rep.dim = sc.dim;
    rep.node_count = sc.node_count;
    rep.controller = controller_name(sc.controller);

    const Graph g = Graph::create(sc.node_count, sc.edges, sc.weights);
    rep.edge_count = g.edge_count();
    const GraphClass cls = classify_graph(g);
    rep.connected = cls.connected;
    rep.tree = cls.tree;
    if (!cls.connected) {
        throw ValidationError(context + ": graph not connected");
    }

    const Configuration p_star(sc.dim, sc.reference);
    const ReferenceShape shape = decompose_reference(p_star);
    const Eigen::MatrixXd l_bar = kron_identity(build_laplacian(g), sc.dim);

    if (command == Command::Design && sc.controller != ControllerKind::Maneuver) {
        throw ValidationError(context + ": 'design' needs a maneuver scenario");
    }
    if (command == Command::Predict && sc.controller != ControllerKind::Faulty) {
        throw ValidationError(context + ": 'predict' needs a faulty scenario");
    }

    std::optional<PreparedManeuver> maneuver;
    std::optional<SensorModel> sensors;
    Eigen::MatrixXd closed_loop = l_bar;

    if (sc.controller == ControllerKind::Maneuver) {
        maneuver = prepare_maneuver(sc, g, shape);
        closed_loop = l_bar - maneuver->design.kappa * maneuver->design.Lambda_hat;

        AnalysisReport::Design d;
        d.mode = sc.maneuver->mode == MotionMode::Scalar ? "scalar" : "matrix";
        d.kappa = maneuver->design.kappa;
        d.kappa_bound = maneuver->bound;
        d.v_star = maneuver->design.v_star;
        d.mu = motion_to_entries(maneuver->design.motion);
        rep.design = std::move(d);
    } else if (sc.controller == ControllerKind::Faulty) {
        const Scenario::SensorSection& section = *sc.sensors;
        sensors = section.angles
                      ? SensorModel::from_angles(section.scales, *section.angles)
                      : SensorModel::create(section.scales, section.rotations);
        closed_loop = build_sensor_matrix(*sensors) * l_bar;
    }

    rep.spectrum = spectrum_summary(spectrum_check(closed_loop, sc.dim));

    std::optional<RobustnessPrediction> prediction;
    const bool want_predict = command == Command::Predict || command == Command::Full ||
                              command == Command::Simulate;
    if (sensors && want_predict) {
        if (cls.tree) {
            prediction = predict_distortion(g, shape, *sensors);
        } else if (command == Command::Predict) {
            // Propagate the module's own topology error.
            predict_distortion(g, shape, *sensors);
        }
        if (prediction) {
            AnalysisReport::Prediction p;
            p.scales = sensors->scales();
            if (sc.sensors->angles) {
                p.angles.assign(sc.sensors->angles->data(),
                                sc.sensors->angles->data() + sc.sensors->angles->size());
            }
            if (sc.dim == 2) {
                for (int k = 0; k < prediction->z_tilde.edge_count(); ++k) {
                    const Eigen::VectorXd row = prediction->z_tilde.edge(k);
                    p.z_tilde.emplace_back(row(0), row(1));
                }
            }
            p.z_tilde_stacked = prediction->z_tilde.z;
            p.v_tilde = prediction->v_tilde;
            p.m_breve_max_abs = prediction->M_breve.lpNorm<Eigen::Infinity>();
            p.consistency_residual = prediction->consistency_residual;
            p.realizable = prediction->realizable;
            rep.prediction = std::move(p);
        }
    }

    const std::filesystem::path out_dir(options.out_dir);
    std::filesystem::create_directories(out_dir);

    if (command == Command::Simulate || command == Command::Full) {
        Eigen::VectorXd p0(static_cast<Eigen::Index>(sc.node_count) * sc.dim);
        const std::uint64_t seed = options.seed_override.value_or(sc.initial.seed);
        bool seeded = false;
        if (sc.initial.positions) {
            p0 = *sc.initial.positions;
        } else {
            seeded = true;
            Rng rng(seed);
            for (Eigen::Index i = 0; i < p0.size(); ++i) {
                p0(i) = rng.uniform(sc.initial.box_lo, sc.initial.box_hi);
            }
        }

        DynamicsSpec dynamics =
            sc.controller == ControllerKind::Nominal ? nominal_dynamics(g, shape)
            : sc.controller == ControllerKind::Maneuver
                ? maneuver_dynamics(g, shape, maneuver->design)
                : faulty_dynamics(g, shape, *sensors);

        const Trajectory traj = simulate(dynamics, Configuration(sc.dim, p0), sc.dt,
                                         sc.t_final);

        RelPosStack z_ref = relative_positions(g, shape.reference());
        Eigen::VectorXd v_ref = Eigen::VectorXd::Zero(sc.dim);
        if (sc.controller == ControllerKind::Maneuver) {
            v_ref = maneuver->design.v_star;
        } else if (sc.controller == ControllerKind::Faulty && prediction) {
            z_ref = prediction->z_tilde;
            v_ref = prediction->v_tilde;
        }
        const ConvergenceMetrics metrics = convergence_metrics(traj, g, z_ref, v_ref);

        const std::string traj_path = (out_dir / sc.output.trajectory).string();
        const std::string metrics_path = (out_dir / sc.output.metrics).string();
        write_trajectory_csv(traj_path, traj, sc.dim);
        write_metrics_csv(metrics_path, traj, metrics);
        rep.files.push_back(traj_path);
        rep.files.push_back(metrics_path);

        AnalysisReport::Simulation s;
        s.seed = seed;
        s.seeded_random = seeded;
        s.dt = sc.dt;
        s.t_final = sc.t_final;
        s.steps = static_cast<long>(traj.states.size()) - 1;
        s.final_shape_error = metrics.final_shape_error;
        s.final_velocity_error = metrics.final_velocity_error;
        s.threshold = metrics.threshold;
        s.settled = metrics.settled;
        s.settling_time = metrics.settling_time;
        s.diverged = traj.diverged;
        s.divergence_step = traj.divergence_step;
        rep.simulation = std::move(s);
    }

    const std::string report_path = (out_dir / sc.output.report).string();
    rep.files.push_back(report_path);
    std::ofstream report_file(report_path, std::ios::binary);
    if (!report_file) {
        throw ValidationError("cannot open '" + report_path + "' for writing");
    }
    report_file << rep.to_json() << "\n";
    return rep;
}

}  // namespace formlab
