#include "hdgflow/scenarios.hpp"

#include "hdgflow/analysis.hpp"
#include "hdgflow/common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace hdgflow {

using nlohmann::json;

namespace {

json config_json(const ScenarioConfig& c) {
    json j;
    j["scenario"] = c.scenario;
    j["k_min"] = c.k_min;
    j["k_max"] = c.k_max;
    j["mesh"] = c.mesh;
    j["nu"] = c.nu;
    j["lambda"] = c.lambda;
    j["variants"] = c.variants;
    j["space"] = c.space;
    j["semidisc"] = c.semidisc;
    j["scheme"] = c.scheme;
    j["dt"] = c.dt;
    j["t_end"] = c.t_end;
    j["post_reconstruct"] = c.post_reconstruct;
    j["out_dir"] = c.out_dir;
    j["seed"] = c.seed;
    j["samples"] = c.samples;
    j["dump_system"] = c.dump_system;
    j["full_benchmark"] = c.full_benchmark;
    j["refinements"] = c.refinements;
    return j;
}

ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig c;
    c.scenario = j.value("scenario", c.scenario);
    c.k_min = j.value("k_min", c.k_min);
    c.k_max = j.value("k_max", c.k_max);
    c.mesh = j.value("mesh", c.mesh);
    c.nu = j.value("nu", c.nu);
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("variants")) c.variants = j["variants"].get<std::vector<std::string>>();
    c.space = j.value("space", c.space);
    c.semidisc = j.value("semidisc", c.semidisc);
    c.scheme = j.value("scheme", c.scheme);
    c.dt = j.value("dt", c.dt);
    c.t_end = j.value("t_end", c.t_end);
    c.post_reconstruct = j.value("post_reconstruct", c.post_reconstruct);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.seed = j.value("seed", c.seed);
    c.samples = j.value("samples", c.samples);
    c.dump_system = j.value("dump_system", c.dump_system);
    c.full_benchmark = j.value("full_benchmark", c.full_benchmark);
    c.refinements = j.value("refinements", c.refinements);
    return c;
}

void write_manifest(const ScenarioConfig& config, const json& extras, double seconds) {
    json j;
    j["config"] = config_json(config);
    j["versions"] = {
        {"hdgflow", "1.0.0"},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                      std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
    };
    j["timing_seconds"] = seconds;
    j["results"] = extras;
    std::ofstream out(std::filesystem::path(config.out_dir) / "manifest.json");
    out << j.dump(2) << "\n";
}

struct ErrorRow {
    int k = 0;
    double h = 0.0;
    int ndof = 0;
    double l2u = 0.0, h1u = 0.0, triple = 0.0, l2p = 0.0;
    double rate = 0.0;
    std::string variant = "B";
    double h1u_rec = 0.0;
};

void write_errors_csv(const std::string& dir, const std::vector<ErrorRow>& rows) {
    std::ofstream out(std::filesystem::path(dir) / "errors.csv");
    out << "k,h,ndof,err_l2_u,err_h1_u,err_triple,err_l2_p,rate,variant,err_h1_u_rec\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.12e,%d,%.12e,%.12e,%.12e,%.12e,%.12e,%s,%.12e\n",
                      r.k, r.h, r.ndof, r.l2u, r.h1u, r.triple, r.l2p, r.rate,
                      r.variant.c_str(), r.h1u_rec);
        out << buf;
    }
}

class DiagWriter {
public:
    DiagWriter(const std::string& dir, bool with_body) : with_body_(with_body) {
        out_.open(std::filesystem::path(dir) / "diag.csv");
        out_ << (with_body ? "t,energy,l2norm,div_max,normal_jump_max,cd,cl\n"
                           : "t,energy,l2norm,div_max,normal_jump_max\n");
    }
    void row(const DiagRow& r) {
        char buf[256];
        if (with_body_)
            std::snprintf(buf, sizeof buf, "%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n", r.t,
                          r.energy, r.l2_norm, r.div_max, r.normal_jump_max, r.cd, r.cl);
        else
            std::snprintf(buf, sizeof buf, "%.12e,%.12e,%.12e,%.12e,%.12e\n", r.t, r.energy,
                          r.l2_norm, r.div_max, r.normal_jump_max);
        out_ << buf;
    }

private:
    std::ofstream out_;
    bool with_body_;
};

SpaceKind space_from_config(const ScenarioConfig& c) {
    if (c.space == "relaxed") return SpaceKind::WRelaxed;
    if (c.space == "conforming") return SpaceKind::WConf;
    throw ParseError("unknown space '" + c.space + "' (expected relaxed|conforming)");
}

StokesVariant variant_from_string(const std::string& v) {
    if (v == "B") return StokesVariant::B;
    if (v == "PR") return StokesVariant::PR;
    throw ParseError("unknown variant '" + v + "' (expected B|PR)");
}

bool default_post_reconstruct(const ScenarioConfig& c) {
    if (c.post_reconstruct >= 0) return c.post_reconstruct > 0;
    return c.semidisc == "d";
}

// ----------------------------------------------------------------------
// Scenario implementations
// ----------------------------------------------------------------------

int scenario_kovasznay(const ScenarioConfig& config, json& extras) {
    const double nu = config.nu > 0 ? config.nu : 1.0 / 40.0;
    const KovasznayFlow flow(nu);

    Mesh mesh;
    if (config.mesh.empty() || config.mesh.rfind("nt:", 0) == 0) {
        int nt = 20;
        if (!config.mesh.empty()) nt = std::stoi(config.mesh.substr(3));
        // Unit-aspect cells on the 1.5 x 2 Kovasznay domain.
        const int nx = std::max(1, static_cast<int>(std::lround(std::sqrt(nt * 3.0 / 8.0))));
        const int ny = std::max(1, static_cast<int>(std::lround(nx * 4.0 / 3.0)));
        mesh = generate_rectangle(nx, ny, -0.5, 1.0, -0.5, 1.5);
    } else {
        mesh = make_mesh(config.mesh, "");
    }

    const VectorField u_ex = [&flow](const Eigen::Vector2d& x) { return flow.velocity(x); };
    const MatrixField gu_ex = [&flow](const Eigen::Vector2d& x) {
        return flow.velocity_gradient(x);
    };
    const ScalarField p_ex = [&flow](const Eigen::Vector2d& x) { return flow.pressure(x); };
    const VectorField f = [&flow](const Eigen::Vector2d& x) { return flow.forcing(x); };

    std::vector<ErrorRow> rows;
    std::map<std::string, double> prev_h1;
    bool dumped = false;
    for (int k = config.k_min; k <= config.k_max; ++k) {
        for (const auto& vname : config.variants) {
            StokesProblem prob;
            prob.mesh = &mesh;
            prob.k = k;
            prob.nu = nu;
            prob.lambda = config.lambda;
            prob.velocity_kind = space_from_config(config);
            prob.variant = variant_from_string(vname);
            prob.forcing = f;
            prob.dirichlet = u_ex;
            StokesSolution sol = solve_stokes(prob);
            if (!config.dump_system.empty() && !dumped) {
                const VelocityBlocks vel = velocity_blocks(*sol.wmap, *sol.fmap);
                SparseSystem sys =
                    build_sparse_system(mesh, vel, *sol.pmap, nu, config.lambda);
                sys.dump_matrix_market(config.dump_system);
                dumped = true;
            }
            const ErrorReport rep =
                compute_errors(u_ex, gu_ex, p_ex, sol.velocity, sol.facet, &sol.pressure, 6);

            ErrorRow row;
            row.k = k;
            row.h = rep.h;
            row.ndof = rep.ndofs;
            row.l2u = rep.l2_u;
            row.h1u = rep.h1_u;
            row.triple = rep.triple_u;
            row.l2p = rep.l2_p;
            row.variant = vname;
            // Post-reconstruction gradient error (columns 2/4 of the study).
            if (prob.velocity_kind == SpaceKind::WRelaxed) {
                const DofMap conf = build_dofmap(mesh, SpaceKind::WConf, k);
                const ReconstructionOp rec(*sol.wmap, conf);
                const FeFunction ru = rec.apply(sol.velocity);
                const ErrorReport rrep =
                    compute_errors(u_ex, gu_ex, p_ex, ru, sol.facet, nullptr, 6);
                row.h1u_rec = rrep.h1_u;
            } else {
                row.h1u_rec = rep.h1_u;
            }
            auto it = prev_h1.find(vname);
            row.rate = it == prev_h1.end() ? 0.0 : rep.h1_u / it->second;
            prev_h1[vname] = rep.h1_u;
            rows.push_back(row);
        }
    }
    write_errors_csv(config.out_dir, rows);
    extras["lambda_kov"] = flow.lambda_kov;
    extras["pressure_mean_shift"] = flow.p_mean_shift;
    extras["elements"] = mesh.num_elements();
    extras["rows"] = rows.size();
    return 0;
}

int scenario_manufactured(const ScenarioConfig& config, json& extras) {
    const double nu = config.nu > 0 ? config.nu : 1.0;
    const double pi = M_PI;
    const VectorField u_ex = [pi](const Eigen::Vector2d& p) {
        const double sx = std::sin(pi * p.x()), sy2 = std::sin(2 * pi * p.y());
        const double sy = std::sin(pi * p.y()), sx2 = std::sin(2 * pi * p.x());
        return Eigen::Vector2d(sx * sx * sy2, -sx2 * sy * sy);
    };
    const MatrixField gu_ex = [pi](const Eigen::Vector2d& p) {
        const double x = p.x(), y = p.y();
        Eigen::Matrix2d g;
        g(0, 0) = pi * std::sin(2 * pi * x) * std::sin(2 * pi * y);
        g(0, 1) = 2 * pi * std::sin(pi * x) * std::sin(pi * x) * std::cos(2 * pi * y);
        g(1, 0) = -2 * pi * std::cos(2 * pi * x) * std::sin(pi * y) * std::sin(pi * y);
        g(1, 1) = -pi * std::sin(2 * pi * x) * std::sin(2 * pi * y);
        return g;
    };
    const ScalarField p_ex = [pi](const Eigen::Vector2d& p) {
        return std::sin(2 * pi * p.x()) * std::cos(2 * pi * p.y());
    };
    const VectorField f = [pi, nu](const Eigen::Vector2d& p) {
        const double x = p.x(), y = p.y();
        const double lap1 = 2 * pi * pi *
                            (std::cos(2 * pi * x) - 2 * std::sin(pi * x) * std::sin(pi * x)) *
                            std::sin(2 * pi * y);
        const double lap2 = -2 * pi * pi *
                            (std::cos(2 * pi * y) - 2 * std::sin(pi * y) * std::sin(pi * y)) *
                            std::sin(2 * pi * x);
        const double px = 2 * pi * std::cos(2 * pi * x) * std::cos(2 * pi * y);
        const double py = -2 * pi * std::sin(2 * pi * x) * std::sin(2 * pi * y);
        return Eigen::Vector2d(-nu * lap1 + px, -nu * lap2 + py);
    };

    std::vector<ErrorRow> rows;
    json& fitted = extras;
    for (int k = config.k_min; k <= config.k_max; ++k) {
        std::vector<double> log_h, log_h1, log_p;
        double prev = 0.0;
        for (int r = 0; r < config.refinements; ++r) {
            const int n = 4 << r;
            Mesh mesh = generate_unit_square(n, false);
            StokesProblem prob;
            prob.mesh = &mesh;
            prob.k = k;
            prob.nu = nu;
            prob.lambda = config.lambda;
            prob.velocity_kind = space_from_config(config);
            prob.variant = variant_from_string(config.variants.front());
            prob.forcing = f;
            StokesSolution sol = solve_stokes(prob);
            const ErrorReport rep =
                compute_errors(u_ex, gu_ex, p_ex, sol.velocity, sol.facet, &sol.pressure, 4);
            ErrorRow row;
            row.k = k;
            row.h = rep.h;
            row.ndof = rep.ndofs;
            row.l2u = rep.l2_u;
            row.h1u = rep.h1_u;
            row.triple = rep.triple_u;
            row.l2p = rep.l2_p;
            row.variant = config.variants.front();
            row.h1u_rec = rep.h1_u;
            row.rate = r == 0 ? 0.0 : std::log2(prev / rep.h1_u);
            prev = rep.h1_u;
            rows.push_back(row);
            log_h.push_back(std::log(rep.h));
            log_h1.push_back(std::log(rep.h1_u));
            log_p.push_back(std::log(std::max(rep.l2_p, 1e-300)));
        }
        // Least-squares slope of log err vs log h.
        auto slope = [&](const std::vector<double>& ly) {
            const int n = static_cast<int>(log_h.size());
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (int i = 0; i < n; ++i) {
                sx += log_h[i];
                sy += ly[i];
                sxx += log_h[i] * log_h[i];
                sxy += log_h[i] * ly[i];
            }
            return (n * sxy - sx * sy) / (n * sxx - sx * sx);
        };
        fitted["k" + std::to_string(k)] = {{"rate_h1_u", slope(log_h1)},
                                           {"rate_l2_p", slope(log_p)}};
    }
    write_errors_csv(config.out_dir, rows);
    return 0;
}

int scenario_lattice(const ScenarioConfig& config, json& extras) {
    Mesh mesh = make_mesh(config.mesh, "square-periodic:10");
    UnsteadyProblem prob;
    prob.mesh = &mesh;
    prob.k = config.k_min;
    prob.nu = config.nu > 0 ? config.nu : 1e-6;
    prob.lambda = config.lambda;
    prob.velocity_kind = space_from_config(config);
    prob.semidisc = semidisc_from_string(config.semidisc);
    prob.scheme = scheme_from_string(config.scheme);
    prob.post_reconstruct = default_post_reconstruct(config);
    prob.dt = config.dt;
    prob.t_end = config.t_end;
    prob.diag_stride = 1;
    prob.initial = [](const Eigen::Vector2d& p) {
        return Eigen::Vector2d(std::sin(2 * M_PI * p.x()) * std::sin(2 * M_PI * p.y()),
                               std::cos(2 * M_PI * p.x()) * std::cos(2 * M_PI * p.y()));
    };

    DiagWriter diag(config.out_dir, false);
    std::vector<DiagRow> rows = run_unsteady(prob, [&](const DiagRow& r) { diag.row(r); });

    const double l2_0 = rows.front().l2_norm;
    const double decay = std::exp(-8.0 * M_PI * M_PI * prob.nu * prob.t_end);
    const double rel_err = std::abs(rows.back().l2_norm - l2_0 * decay) / (l2_0 * decay);
    double worst_increase = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        worst_increase =
            std::max(worst_increase, (rows[i].l2_norm - rows[i - 1].l2_norm) / l2_0);
    extras["l2_initial"] = l2_0;
    extras["l2_final"] = rows.back().l2_norm;
    extras["l2_exact_final"] = l2_0 * decay;
    extras["tracking_rel_err"] = rel_err;
    extras["max_per_step_l2_increase_rel"] = worst_increase;
    return 0;
}

int scenario_cylinder(const ScenarioConfig& config, json& extras) {
    Mesh mesh = make_mesh(config.mesh, "channel:0.07");
    UnsteadyProblem prob;
    prob.mesh = &mesh;
    prob.k = config.k_min;
    prob.nu = config.nu > 0 ? config.nu : 1e-3;
    prob.lambda = config.lambda;
    prob.velocity_kind = space_from_config(config);
    prob.semidisc = semidisc_from_string(config.semidisc);
    prob.scheme = scheme_from_string(config.scheme);
    prob.post_reconstruct = default_post_reconstruct(config);
    prob.dt = config.dt;
    prob.t_end = config.t_end;
    if (config.full_benchmark) {
        std::fprintf(stderr,
                     "warning: --full-benchmark runs t in [0,8] at dt=5e-4; expect a long "
                     "wall-clock time\n");
        prob.dt = 5e-4;
        prob.t_end = 8.0;
    }
    prob.diag_stride = std::max(1, static_cast<int>(std::lround(0.005 / prob.dt)));
    // Parabolic inflow, mean velocity 1 (Re = 100 at nu = 1e-3).
    prob.dirichlet = [](const Eigen::Vector2d& p) {
        if (std::abs(p.x()) > 1e-9) return Eigen::Vector2d(0.0, 0.0);
        const double h = 0.41;
        return Eigen::Vector2d(6.0 * p.y() * (h - p.y()) / (h * h), 0.0);
    };
    const double t_ramp = 0.1;
    prob.bc_ramp = [t_ramp](double t) {
        if (t >= t_ramp) return 1.0;
        const double s = std::sin(0.5 * M_PI * t / t_ramp);
        return s * s;
    };
    prob.compute_body_force = true;
    prob.body_tag = BoundaryTag::Wall;
    prob.body_filter = [](const Eigen::Vector2d& mid) {
        return (mid - Eigen::Vector2d(0.2, 0.2)).norm() < 0.1;
    };
    prob.body_scale = 20.0; // c = 2 F / (U^2 L), U = 1, L = 0.1

    DiagWriter diag(config.out_dir, true);
    double cd_min = 1e300, cd_max = -1e300, cl_min = 1e300, cl_max = -1e300;
    std::vector<DiagRow> rows = run_unsteady(prob, [&](const DiagRow& r) {
        diag.row(r);
        if (r.t >= 0.25) {
            cd_min = std::min(cd_min, r.cd);
            cd_max = std::max(cd_max, r.cd);
            cl_min = std::min(cl_min, r.cl);
            cl_max = std::max(cl_max, r.cl);
        }
    });
    extras["elements"] = mesh.num_elements();
    extras["cd_min"] = cd_min;
    extras["cd_max"] = cd_max;
    extras["cl_min"] = cl_min;
    extras["cl_max"] = cl_max;
    extras["final_energy"] = rows.back().energy;
    return 0;
}

int scenario_infsup(const ScenarioConfig& config, json& extras) {
    Mesh mesh = make_mesh(config.mesh, "square:4");
    std::ofstream csv(std::filesystem::path(config.out_dir) / "infsup.csv");
    csv << "k,h,n_velocity_free,n_pressure,c_lbb,c_co\n";
    char buf[160];
    bool ok = true;
    std::vector<double> lbbs;
    for (int k = config.k_min; k <= config.k_max; ++k) {
        const InfSupReport rep = estimate_infsup(mesh, k, config.nu > 0 ? config.nu : 1.0,
                                                 config.lambda, space_from_config(config));
        std::snprintf(buf, sizeof buf, "%d,%.12e,%d,%d,%.12e,%.12e\n", rep.k, rep.h,
                      rep.n_velocity_free, rep.n_pressure, rep.c_lbb, rep.c_co);
        csv << buf;
        lbbs.push_back(rep.c_lbb);
        if (!(rep.c_lbb > 0.0) || !(rep.c_co > 0.0)) ok = false;
    }
    extras["c_lbb"] = lbbs;
    if (!lbbs.empty()) {
        const double lo = *std::min_element(lbbs.begin(), lbbs.end());
        const double hi = *std::max_element(lbbs.begin(), lbbs.end());
        extras["c_lbb_spread"] = hi / lo;
    }
    return ok ? 0 : 1;
}

int scenario_reconstruct_check(const ScenarioConfig& config, json& extras) {
    Mesh mesh = make_mesh(config.mesh, "square:3");
    std::ofstream csv(std::filesystem::path(config.out_dir) / "reconstruct.csv");
    csv << "k,max_normal_jump,max_facet_moment_err,max_interior_moment_err,max_stability_ratio\n";
    char buf[200];
    bool ok = true;
    double ratio_lo = 1e300, ratio_hi = 0.0;
    json per_k = json::array();
    for (int k = config.k_min; k <= config.k_max; ++k) {
        const ReconstructReport rep = check_reconstruction(mesh, k, config.samples, config.seed);
        std::snprintf(buf, sizeof buf, "%d,%.12e,%.12e,%.12e,%.12e\n", rep.k,
                      rep.max_normal_jump, rep.max_facet_moment_err,
                      rep.max_interior_moment_err, rep.max_stability_ratio);
        csv << buf;
        per_k.push_back({{"k", rep.k},
                         {"max_normal_jump", rep.max_normal_jump},
                         {"max_facet_moment_err", rep.max_facet_moment_err},
                         {"max_interior_moment_err", rep.max_interior_moment_err},
                         {"max_stability_ratio", rep.max_stability_ratio}});
        ratio_lo = std::min(ratio_lo, rep.max_stability_ratio);
        ratio_hi = std::max(ratio_hi, rep.max_stability_ratio);
        if (rep.max_normal_jump > 1e-10 || rep.max_facet_moment_err > 1e-12 ||
            rep.max_interior_moment_err > 1e-12 || rep.max_stability_ratio >= 10.0)
            ok = false;
    }
    if (config.k_max > config.k_min && ratio_hi / ratio_lo > 2.0) ok = false;
    extras["per_k"] = per_k;
    extras["stability_ratio_spread"] = ratio_hi / ratio_lo;
    return ok ? 0 : 1;
}

} // namespace

// ----------------------------------------------------------------------

KovasznayFlow::KovasznayFlow(double viscosity) : nu(viscosity) {
    lambda_kov = 0.5 / nu - std::sqrt(0.25 / (nu * nu) + 4.0 * M_PI * M_PI);
    // p = -1/2 exp(2 lambda x) + shift with zero mean on [-1/2,1]x[-1/2,3/2].
    p_mean_shift =
        (std::exp(2.0 * lambda_kov) - std::exp(-lambda_kov)) / (6.0 * lambda_kov);
}

Eigen::Vector2d KovasznayFlow::velocity(const Eigen::Vector2d& p) const {
    const double e = std::exp(lambda_kov * p.x());
    return {1.0 - e * std::cos(2.0 * M_PI * p.y()),
            lambda_kov / (2.0 * M_PI) * e * std::sin(2.0 * M_PI * p.y())};
}

Eigen::Matrix2d KovasznayFlow::velocity_gradient(const Eigen::Vector2d& p) const {
    const double e = std::exp(lambda_kov * p.x());
    const double c = std::cos(2.0 * M_PI * p.y());
    const double s = std::sin(2.0 * M_PI * p.y());
    Eigen::Matrix2d g;
    g(0, 0) = -lambda_kov * e * c;
    g(0, 1) = 2.0 * M_PI * e * s;
    g(1, 0) = lambda_kov * lambda_kov / (2.0 * M_PI) * e * s;
    g(1, 1) = lambda_kov * e * c;
    return g;
}

double KovasznayFlow::pressure(const Eigen::Vector2d& p) const {
    return -0.5 * std::exp(2.0 * lambda_kov * p.x()) + p_mean_shift;
}

Eigen::Vector2d KovasznayFlow::forcing(const Eigen::Vector2d& p) const {
    return -(velocity_gradient(p) * velocity(p));
}

Mesh make_mesh(const std::string& spec, const std::string& fallback) {
    const std::string s = spec.empty() ? fallback : spec;
    if (s.empty()) throw ParseError("no mesh specification provided");
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
    if (kind == "square") return generate_unit_square(std::stoi(arg), false);
    if (kind == "square-periodic") return generate_unit_square(std::stoi(arg), true);
    if (kind == "channel") return generate_channel_cylinder(std::stod(arg));
    if (kind == "file") return read_mesh(arg);
    throw ParseError("unknown mesh spec '" + s + "'");
}

ReconstructReport check_reconstruction(const Mesh& mesh, int k, int samples,
                                       std::uint64_t seed) {
    ReconstructReport rep;
    rep.k = k;
    rep.samples = samples;
    const DofMap relaxed = build_dofmap(mesh, SpaceKind::WRelaxed, k);
    const DofMap conf = build_dofmap(mesh, SpaceKind::WConf, k);
    const DofMap fmap = build_dofmap(mesh, SpaceKind::Facet, k - 1);
    const ReconstructionOp rec(relaxed, conf);
    Rng rng(seed + static_cast<std::uint64_t>(k) * 1000003ull);

    // Facet-moment check data (modes 0..k-1, canonical parameters).
    const QuadratureRule frule = gauss_rule(k + 2);
    const BasisTable leg = legendre_facet_basis(k - 1).tabulate(frule.points);
    const QuadratureRule vrule = triangle_rule(2 * k + 2);
    const int n_int_scalar = k >= 2 ? (k - 1) * k / 2 : 0;
    const BasisTable dub =
        k >= 2 ? dubiner_basis(k - 2).tabulate(vrule.points) : BasisTable{};

    for (int s = 0; s < samples; ++s) {
        FeFunction u(relaxed);
        for (int i = 0; i < relaxed.total_dofs; ++i) u.coeffs(i) = rng.uniform(-1.0, 1.0);
        // Absolute tolerances presuppose unit-size fields; the checks are
        // linear in the scale, so normalize each sample in L2.
        u.coeffs /= l2_norm(u);
        FeFunction uf(fmap);
        for (int i = 0; i < fmap.total_dofs; ++i) uf.coeffs(i) = rng.uniform(-1.0, 1.0);
        const FeFunction ru = rec.apply(u);

        rep.max_normal_jump = std::max(rep.max_normal_jump, max_normal_jump(ru));

        // Facet normal moments 0..k-1 preserved (quadrature check on one side).
        for (int f = 0; f < mesh.num_facets(); ++f) {
            const Mesh::Facet& facet = mesh.facets[f];
            if (facet.tag == BoundaryTag::PeriodicSlave) continue;
            const int e = facet.elems[0];
            const int lf = facet.local_index[0];
            const Mesh::SideInfo& side = mesh.element_sides[e][lf];
            Eigen::MatrixXd tloc(frule.size(), 1);
            for (int q = 0; q < frule.size(); ++q)
                tloc(q, 0) = side.flip ? 1.0 - frule.points(q, 0) : frule.points(q, 0);
            const Eigen::MatrixXd nu_tr = evaluate(u, e, tloc, EvalWhat::NormalTrace, lf);
            const Eigen::MatrixXd nr_tr = evaluate(ru, e, tloc, EvalWhat::NormalTrace, lf);
            for (int d = 0; d < k; ++d) {
                double mu = 0.0, mr = 0.0;
                for (int q = 0; q < frule.size(); ++q) {
                    mu += frule.weights(q) * leg.value(d, q) * nu_tr(0, q);
                    mr += frule.weights(q) * leg.value(d, q) * nr_tr(0, q);
                }
                rep.max_facet_moment_err = std::max(rep.max_facet_moment_err, std::abs(mu - mr));
            }
        }

        // Interior moments against [P^{k-2}]^2 (physical measure).
        if (k >= 2) {
            for (int e = 0; e < mesh.num_elements(); ++e) {
                const double det = 2.0 * mesh.element_area(e);
                const Eigen::MatrixXd vu = evaluate(u, e, vrule.points, EvalWhat::Value);
                const Eigen::MatrixXd vr = evaluate(ru, e, vrule.points, EvalWhat::Value);
                for (int m = 0; m < n_int_scalar; ++m) {
                    Eigen::Vector2d du = Eigen::Vector2d::Zero();
                    for (int q = 0; q < vrule.size(); ++q)
                        du += vrule.weights(q) * det * dub.value(m, q) *
                              (vu.col(q) - vr.col(q));
                    rep.max_interior_moment_err =
                        std::max(rep.max_interior_moment_err, du.cwiseAbs().maxCoeff());
                }
            }
        }

        const double denom = triple_norm(u, uf);
        const double numer = triple_norm(ru, uf);
        if (denom > 0.0)
            rep.max_stability_ratio = std::max(rep.max_stability_ratio, numer / denom);
    }
    return rep;
}

std::string config_to_json(const ScenarioConfig& config) { return config_json(config).dump(2); }

ScenarioConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read config '" + path + "'");
    json j = json::parse(in);
    if (j.contains("config")) j = j["config"]; // accept a full manifest
    return config_from_json(j);
}

int run_scenario(const ScenarioConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::filesystem::create_directories(config.out_dir);
        int code = 0;
        json extras;
        if (config.scenario == "kovasznay")
            code = scenario_kovasznay(config, extras);
        else if (config.scenario == "manufactured")
            code = scenario_manufactured(config, extras);
        else if (config.scenario == "lattice")
            code = scenario_lattice(config, extras);
        else if (config.scenario == "cylinder")
            code = scenario_cylinder(config, extras);
        else if (config.scenario == "infsup")
            code = scenario_infsup(config, extras);
        else if (config.scenario == "reconstruct-check")
            code = scenario_reconstruct_check(config, extras);
        else
            throw ParseError("unknown scenario '" + config.scenario + "'");
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        extras["exit_code"] = code;
        write_manifest(config, extras, secs);
        std::fprintf(stderr, "scenario %s finished in %.2f s (exit %d)\n",
                     config.scenario.c_str(), secs, code);
        return code;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const UnsupportedOrder& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return 3;
    }
}

} // namespace hdgflow
