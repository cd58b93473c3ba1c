#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "formlab/maneuver.hpp"
#include "formlab/simulate.hpp"

namespace formlab {

enum class Command { Check, Design, Predict, Simulate, Full };

Command parse_command(const std::string& name);
std::string command_name(Command c);

// One explicit motion parameter in a scenario file (1-based agent indices).
struct ExplicitMu {
    int i = 0;
    int j = 0;
    double value = 0.0;          // scalar mode
    Eigen::MatrixXd block;       // matrix mode (empty in scalar mode)
};

// Parsed scenario file. Exactly one controller-specific section may be
// present and it must match the controller kind.
struct Scenario {
    std::string name;
    int dim = 2;
    int node_count = 0;
    Eigen::VectorXd reference;                       // stacked p*
    std::vector<std::pair<int, int>> edges;          // 1-based (tail, head)
    std::vector<double> weights;                     // empty = all ones

    ControllerKind controller = ControllerKind::Nominal;

    struct ManeuverSection {
        Eigen::VectorXd v_star;
        MotionMode mode = MotionMode::Scalar;
        double kappa = 1.0;
        bool half_bound_kappa = false;   // kappa = "half-bound"
        std::vector<ExplicitMu> mu;      // when given, used instead of a design
    };
    std::optional<ManeuverSection> maneuver;

    struct SensorSection {
        Eigen::VectorXd scales;
        std::optional<Eigen::VectorXd> angles;        // 2D misalignment angles, radians
        std::vector<Eigen::MatrixXd> rotations;       // explicit R_i otherwise
    };
    std::optional<SensorSection> sensors;

    struct InitialCondition {
        std::optional<Eigen::VectorXd> positions;  // explicit stacked p0
        bool random = false;
        std::uint64_t seed = 0;
        double box_lo = -20.0;
        double box_hi = 20.0;
    };
    InitialCondition initial;

    double dt = 0.01;
    double t_final = 100.0;

    struct OutputPaths {
        std::string trajectory = "trajectory.csv";
        std::string metrics = "metrics.csv";
        std::string report = "report.json";
    };
    OutputPaths output;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text, const std::string& origin);

struct RunOptions {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;
};

// Everything a run produced, serializable to JSON and back.
struct AnalysisReport {
    std::string scenario_name;
    std::string command;
    int dim = 0;
    int node_count = 0;
    int edge_count = 0;
    std::string controller;
    bool connected = false;
    bool tree = false;

    struct Spectrum {
        std::vector<std::pair<double, double>> eigenvalues;  // (re, im)
        int zero_count = 0;
        double min_nonzero_real = 0.0;
        bool stable = false;
    };
    std::optional<Spectrum> spectrum;

    struct Design {
        std::string mode;
        double kappa = 0.0;
        std::optional<double> kappa_bound;  // absent for non-tree graphs
        Eigen::VectorXd v_star;
        std::vector<ExplicitMu> mu;         // 1-based, as in scenario files
    };
    std::optional<Design> design;

    struct Prediction {
        Eigen::VectorXd scales;
        std::vector<double> angles;                     // empty when R given explicitly
        std::vector<std::pair<double, double>> z_tilde; // edge-major rows (2D layout)
        Eigen::VectorXd z_tilde_stacked;
        Eigen::VectorXd v_tilde;
        double m_breve_max_abs = 0.0;
        double consistency_residual = 0.0;
        bool realizable = false;
    };
    std::optional<Prediction> prediction;

    struct Simulation {
        std::uint64_t seed = 0;
        bool seeded_random = false;
        double dt = 0.0;
        double t_final = 0.0;
        long steps = 0;
        double final_shape_error = 0.0;
        double final_velocity_error = 0.0;
        double threshold = 0.0;
        bool settled = false;
        double settling_time = 0.0;  // NaN serialized as null
        bool diverged = false;
        long divergence_step = -1;
    };
    std::optional<Simulation> simulation;

    std::vector<std::string> files;  // manifest of side-effect files

    std::string to_json() const;
    static AnalysisReport from_json(const std::string& text);
    void validate() const;  // internal consistency of the parsed report
};

// Executes the requested stage(s) of a scenario, writing CSV/JSON outputs
// under options.out_dir. Throws ValidationError / NumericError on failure.
AnalysisReport run_scenario(const Scenario& scenario, Command command,
                            const RunOptions& options);

// Full-precision float formatting shared by the CSV writers (17 significant
// digits, round-trip exact).
std::string format_g17(double value);

void write_trajectory_csv(const std::string& path, const Trajectory& traj, int dim);
void write_metrics_csv(const std::string& path, const Trajectory& traj,
                       const ConvergenceMetrics& metrics);

}  // namespace formlab
