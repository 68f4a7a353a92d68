#include "hdgflow/scenarios.hpp"

#include "CLI11.hpp"

#include <cstdio>

namespace {

// "a..b" or a single value.
bool parse_range(const std::string& text, int& lo, int& hi) {
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            lo = hi = std::stoi(text);
        } else {
            lo = std::stoi(text.substr(0, dots));
            hi = std::stoi(text.substr(dots + 2));
        }
    } catch (const std::exception&) {
        return false;
    }
    return lo >= 1 && hi >= lo;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        if (comma == std::string::npos) {
            parts.push_back(text.substr(pos));
            break;
        }
        parts.push_back(text.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return parts;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hdgflow: relaxed H(div)-conforming HDG solver for Stokes and "
                 "incompressible Navier-Stokes flow"};
    app.footer("Scenarios: kovasznay | manufactured | lattice | cylinder | infsup | "
               "reconstruct-check.\n"
               "The first positional argument may name the scenario, e.g.\n"
               "  hdgflow kovasznay --k 2..8 --nt 20 --variant B,PR --out out/kov");

    hdgflow::ScenarioConfig config;
    std::string scenario_pos;
    std::string k_text = "2";
    std::string variant_text = "B";
    std::string config_path;
    int nt = -1;

    app.add_option("scenario-name", scenario_pos, "scenario name (positional)");
    app.add_option("--scenario", config.scenario, "scenario name");
    app.add_option("--config", config_path, "load a config (or manifest) JSON and run it");
    app.add_option("--k", k_text, "polynomial order, value or range a..b");
    app.add_option("--mesh", config.mesh,
                   "mesh spec: square:N | square-periodic:N | channel:H | file:PATH");
    app.add_option("--nt", nt, "kovasznay: target element count of the built-in mesh");
    app.add_option("--n", nt, "lattice: subdivisions of the periodic square");
    app.add_option("--nu", config.nu, "kinematic viscosity (scenario default if omitted)");
    app.add_option("--lambda", config.lambda, "stabilization parameter (default 4)");
    app.add_option("--variant", variant_text, "Stokes right-hand side variant(s): B,PR");
    app.add_option("--space", config.space, "velocity pair: relaxed | conforming");
    app.add_option("--semidisc", config.semidisc, "convection semi-discretization a|b|c|d");
    app.add_option("--scheme", config.scheme, "time scheme IMEX1 | SBDF2");
    app.add_option("--dt", config.dt, "time step");
    app.add_option("--tend", config.t_end, "final time");
    app.add_option("--post-reconstruct", config.post_reconstruct,
                   "0/1 force post-step reconstruction (default: on for semidisc d)");
    app.add_option("--out", config.out_dir, "output directory");
    app.add_option("--seed", config.seed, "seed for randomized property drivers");
    app.add_option("--samples", config.samples, "samples for reconstruct-check");
    app.add_option("--refinements", config.refinements, "manufactured: h-sweep length");
    app.add_option("--dump-system", config.dump_system,
                   "write the assembled saddle matrix (MatrixMarket)");
    app.add_flag("--full-benchmark", config.full_benchmark,
                 "cylinder: full t=8 horizon at dt=5e-4 (slow)");

    CLI11_PARSE(app, argc, argv);

    if (!config_path.empty()) {
        try {
            hdgflow::ScenarioConfig loaded = hdgflow::config_from_json_file(config_path);
            return hdgflow::run_scenario(loaded);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "config error: %s\n", e.what());
            return 2;
        }
    }

    if (!scenario_pos.empty()) config.scenario = scenario_pos;
    if (!parse_range(k_text, config.k_min, config.k_max)) {
        std::fprintf(stderr, "config error: bad --k value '%s'\n", k_text.c_str());
        return 2;
    }
    config.variants = split_list(variant_text);
    if (nt > 0 && config.mesh.empty()) {
        if (config.scenario == "kovasznay")
            config.mesh = "nt:" + std::to_string(nt);
        else if (config.scenario == "lattice")
            config.mesh = "square-periodic:" + std::to_string(nt);
        else
            config.mesh = "square:" + std::to_string(nt);
    }
    return hdgflow::run_scenario(config);
}
