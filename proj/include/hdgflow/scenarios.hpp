#pragma once

#include "hdgflow/time_stepping.hpp"

#include <string>
#include <vector>

namespace hdgflow {

/// Everything a scenario run needs; serialized into the run manifest so a
/// run can be reproduced from it.
struct ScenarioConfig {
    std::string scenario = "kovasznay"; // kovasznay|lattice|cylinder|infsup|reconstruct-check|manufactured
    int k_min = 2;
    int k_max = 2;
    std::string mesh = ""; // square:N | square-periodic:N | channel:H | file:PATH | "" = scenario default
    double nu = -1.0;      // < 0 = scenario default
    double lambda = 4.0;
    std::vector<std::string> variants = {"B"}; // B, PR
    std::string space = "relaxed";             // relaxed | conforming
    std::string semidisc = "d";
    std::string scheme = "IMEX1";
    double dt = 1e-4;
    double t_end = 0.1;
    int post_reconstruct = -1; // -1 = default per semidisc, 0/1 explicit
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int samples = 200;
    std::string dump_system = "";
    bool full_benchmark = false;
    int refinements = 4; // manufactured h-sweep length
};

std::string config_to_json(const ScenarioConfig& config);
ScenarioConfig config_from_json_file(const std::string& path);

/// Runs one scenario, writing errors.csv / diag.csv / manifest.json under
/// config.out_dir. Returns the process exit code contract: 0 success,
/// 1 violated property check, 2 config error, 3 solver failure.
int run_scenario(const ScenarioConfig& config);

/// Kovasznay reference fields on [-1/2,1] x [-1/2,3/2].
struct KovasznayFlow {
    double nu = 1.0 / 40.0;
    double lambda_kov = 0.0;
    double p_mean_shift = 0.0;

    explicit KovasznayFlow(double viscosity);
    Eigen::Vector2d velocity(const Eigen::Vector2d& x) const;
    Eigen::Matrix2d velocity_gradient(const Eigen::Vector2d& x) const;
    double pressure(const Eigen::Vector2d& x) const;
    Eigen::Vector2d forcing(const Eigen::Vector2d& x) const; // -(u.grad)u
};

/// Mesh factory for the `--mesh` syntax; `fallback` is used for "".
Mesh make_mesh(const std::string& spec, const std::string& fallback);

struct ReconstructReport {
    int k = 0;
    double max_normal_jump = 0.0;
    double max_facet_moment_err = 0.0;
    double max_interior_moment_err = 0.0;
    double max_stability_ratio = 0.0;
    int samples = 0;
};

/// Randomized verification of the reconstruction axioms; the stability
/// ratio uses the composite triple norm.
ReconstructReport check_reconstruction(const Mesh& mesh, int k, int samples,
                                       std::uint64_t seed);

} // namespace hdgflow
