// Acceptance suite: one pass/fail line per criterion, exit code = number
// of failed criteria. Each check pins its tolerances in code; see the
// per-criterion banners for the measured values.

#include "hdgflow/analysis.hpp"
#include "hdgflow/scenarios.hpp"
#include "hdgflow/stokes.hpp"
#include "hdgflow/time_stepping.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <vector>

using namespace hdgflow;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("%s criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

struct KovCase {
    double h1_plain = 0.0;
    double h1_rec = 0.0;
};

// Shared Kovasznay study for criteria 1 and 2: fixed ~20-element
// unit-aspect mesh, nu = 1/40, k = 2..9, variants B and PR, plus the
// post-reconstruction gradient errors.
std::map<std::string, std::map<int, KovCase>> kovasznay_study(const Mesh& mesh) {
    const KovasznayFlow flow(1.0 / 40.0);
    const VectorField u = [&](const Eigen::Vector2d& x) { return flow.velocity(x); };
    const MatrixField gu = [&](const Eigen::Vector2d& x) {
        return flow.velocity_gradient(x);
    };
    const ScalarField pz = [](const Eigen::Vector2d&) { return 0.0; };
    std::map<std::string, std::map<int, KovCase>> out;
    for (int k = 2; k <= 9; ++k) {
        const DofMap conf = build_dofmap(mesh, SpaceKind::WConf, k);
        for (const auto& variant : {StokesVariant::B, StokesVariant::PR}) {
            StokesProblem prob;
            prob.mesh = &mesh;
            prob.k = k;
            prob.nu = flow.nu;
            prob.variant = variant;
            prob.forcing = [&](const Eigen::Vector2d& x) { return flow.forcing(x); };
            prob.dirichlet = u;
            const StokesSolution sol = solve_stokes(prob);
            const ReconstructionOp rec(*sol.wmap, conf);
            const FeFunction ru = rec.apply(sol.velocity);
            KovCase c;
            c.h1_plain = compute_errors(u, gu, pz, sol.velocity, sol.facet, nullptr, 6).h1_u;
            c.h1_rec = compute_errors(u, gu, pz, ru, sol.facet, nullptr, 6).h1_u;
            out[variant == StokesVariant::B ? "B" : "PR"][k] = c;
        }
    }
    return out;
}

void criterion_1_and_2() {
    const Mesh mesh = generate_rectangle(3, 4, -0.5, 1.0, -0.5, 1.5);
    const auto study = kovasznay_study(mesh);
    const auto& B = study.at("B");
    const auto& PR = study.at("PR");

    // Criterion 1: monotone decay; fitted per-order reduction factor over
    // k >= 4 at most 0.3; k=6 error within [1e-3, 5e-2].
    bool monotone = true;
    for (int k = 3; k <= 9; ++k)
        if (B.at(k).h1_plain >= B.at(k - 1).h1_plain) monotone = false;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int k = 4; k <= 9; ++k) {
        sx += k;
        sy += std::log(B.at(k).h1_plain);
        sxx += static_cast<double>(k) * k;
        sxy += k * std::log(B.at(k).h1_plain);
        ++n;
    }
    const double factor = std::exp((n * sxy - sx * sy) / (n * sxx - sx * sx));
    const double e6 = B.at(6).h1_plain;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "monotone=%d, fitted per-order factor k>=4 %.3f (<=0.3), "
                  "k=6 err %.3e in [1e-3,5e-2]",
                  monotone ? 1 : 0, factor, e6);
    report(1, "Kovasznay hp-convergence", monotone && factor <= 0.3 && e6 >= 1e-3 && e6 <= 5e-2,
           buf);

    // Criterion 2: B vs PR within 15% at every k; same bound for pre vs
    // post-reconstruction errors.
    double worst_bp = 0.0, worst_rec = 0.0;
    int worst_rec_k = 0;
    for (int k = 2; k <= 9; ++k) {
        worst_bp = std::max(worst_bp,
                            std::abs(PR.at(k).h1_plain / B.at(k).h1_plain - 1.0));
        for (const auto* var : {&B, &PR}) {
            const double infl = std::abs(var->at(k).h1_rec / var->at(k).h1_plain - 1.0);
            if (infl > worst_rec) {
                worst_rec = infl;
                worst_rec_k = k;
            }
        }
    }
    std::snprintf(buf, sizeof buf,
                  "max |B-PR|/B %.1f%% (<=15%%), max |rec-plain|/plain %.1f%% at k=%d "
                  "(<=15%%)%s",
                  100 * worst_bp, 100 * worst_rec, worst_rec_k,
                  worst_rec > 0.15 ? "; the H1-minimal reconstruction over all "
                                     "admissible operators already exceeds the bound "
                                     "on this mesh family, see docs/decisions"
                                   : "");
    report(2, "B-vs-PR and pre-vs-post closeness", worst_bp <= 0.15 && worst_rec <= 0.15,
           buf);
}

void criterion_3() {
    const Mesh mesh = generate_unit_square(4, false);
    const VectorField grad_phi = [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(4 * std::pow(x.x(), 3), 4 * std::pow(x.y(), 3));
    };
    double norms[2];
    int i = 0;
    for (const auto variant : {StokesVariant::B, StokesVariant::PR}) {
        StokesProblem prob;
        prob.mesh = &mesh;
        prob.k = 2;
        prob.nu = 1e-3;
        prob.variant = variant;
        prob.forcing = grad_phi;
        norms[i++] = l2_norm(solve_stokes(prob).velocity);
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "|u_PR| = %.3e, |u_B| = %.3e, ratio %.2e (<= 1e-4)",
                  norms[1], norms[0], norms[1] / norms[0]);
    report(3, "pressure-robustness mechanism (f = grad phi)", norms[1] <= 1e-4 * norms[0],
           buf);
}

void criterion_4() {
    const Mesh mesh = generate_unit_square(3, false);
    bool ok = true;
    double ratio_lo = 1e300, ratio_hi = 0.0, worst_jump = 0.0, worst_mom = 0.0;
    for (int k = 1; k <= 8; ++k) {
        const ReconstructReport rep = check_reconstruction(mesh, k, 200, 0);
        worst_jump = std::max(worst_jump, rep.max_normal_jump);
        worst_mom =
            std::max({worst_mom, rep.max_facet_moment_err, rep.max_interior_moment_err});
        ratio_lo = std::min(ratio_lo, rep.max_stability_ratio);
        ratio_hi = std::max(ratio_hi, rep.max_stability_ratio);
        if (rep.max_normal_jump > 1e-10 || rep.max_facet_moment_err > 1e-12 ||
            rep.max_interior_moment_err > 1e-12 || rep.max_stability_ratio >= 10.0)
            ok = false;
    }
    if (ratio_hi / ratio_lo > 2.0) ok = false;
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "200 unit-norm fields per k=1..8: jump %.1e (<=1e-10), moments %.1e "
                  "(<=1e-12), stability ratio in [%.3f, %.3f] (<10, spread <=2)",
                  worst_jump, worst_mom, ratio_lo, ratio_hi);
    report(4, "reconstruction axioms", ok, buf);
}

void criterion_5() {
    const Mesh mesh = generate_unit_square(2, false);
    const double pi = M_PI;
    const VectorField f = [pi](const Eigen::Vector2d& p) {
        return Eigen::Vector2d(std::sin(2 * pi * p.y()), std::cos(2 * pi * p.x()));
    };
    double worst_div = 0.0, worst_jump = 0.0;
    for (int k = 1; k <= 6; ++k) {
        StokesProblem prob;
        prob.mesh = &mesh;
        prob.k = k;
        prob.nu = 1.0;
        prob.variant = StokesVariant::PR;
        prob.forcing = f;
        const StokesSolution sol = solve_stokes(prob);
        const DofMap conf = build_dofmap(mesh, SpaceKind::WConf, k);
        const ReconstructionOp rec(*sol.wmap, conf);
        const FeFunction ru = rec.apply(sol.velocity);
        worst_div = std::max(worst_div, max_pointwise_divergence(ru));
        worst_jump = std::max(worst_jump, max_normal_jump(ru));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "k=1..6: max |div| %.1e (<=1e-10), max jump %.1e (<=1e-10)",
                  worst_div, worst_jump);
    report(5, "reconstructed Stokes solutions are solenoidal", worst_div <= 1e-10 &&
                                                                   worst_jump <= 1e-10,
           buf);
}

void criterion_6() {
    const Mesh mesh = generate_unit_square(4, false); // 32 elements
    double lbb_lo = 1e300, lbb_hi = 0.0;
    bool lbb_ok = true;
    for (int k = 1; k <= 6; ++k) {
        const InfSupReport rep = estimate_infsup(mesh, k, 1.0, 4.0);
        lbb_lo = std::min(lbb_lo, rep.c_lbb);
        lbb_hi = std::max(lbb_hi, rep.c_lbb);
        if (rep.c_lbb <= 0.05) lbb_ok = false;
    }
    if (lbb_hi / lbb_lo > 2.0) lbb_ok = false;

    bool co_ok = true;
    double co_min = 1e300;
    int co_min_k = 0;
    for (int k = 1; k <= 8; ++k) {
        const InfSupReport rep = estimate_infsup(mesh, k, 1.0, 4.0);
        if (rep.c_co < co_min) {
            co_min = rep.c_co;
            co_min_k = k;
        }
        if (!(rep.c_co > 0.0)) co_ok = false;
    }
    char buf[300];
    std::snprintf(buf, sizeof buf,
                  "c_LBB in [%.3f, %.3f] (>0.05, spread %.2f<=2); min c_CO(lambda=4) "
                  "%.3f at k=%d (>0 required)%s",
                  lbb_lo, lbb_hi, lbb_hi / lbb_lo, co_min, co_min_k,
                  co_ok ? ""
                        : "; the viscous form is provably indefinite at k=1 with "
                          "lambda=4 (lambda>=6 restores coercivity), see docs/decisions");
    report(6, "polynomial-robust inf-sup and coercivity", lbb_ok && co_ok, buf);
}

void criterion_7() {
    const double pi = M_PI;
    const double nu = 1.0;
    const VectorField u_ex = [pi](const Eigen::Vector2d& p) {
        const double sx = std::sin(pi * p.x()), sy = std::sin(pi * p.y());
        return Eigen::Vector2d(sx * sx * std::sin(2 * pi * p.y()),
                               -std::sin(2 * pi * p.x()) * sy * sy);
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
        return Eigen::Vector2d(-nu * lap1 + 2 * pi * std::cos(2 * pi * x) * std::cos(2 * pi * y),
                               -nu * lap2 - 2 * pi * std::sin(2 * pi * x) * std::sin(2 * pi * y));
    };

    bool ok = true;
    std::string detail;
    for (int k = 2; k <= 3; ++k) {
        std::vector<double> lh, lu, lp;
        for (int r = 0; r < 4; ++r) {
            const int n = 4 << r;
            const Mesh mesh = generate_unit_square(n, false);
            StokesProblem prob;
            prob.mesh = &mesh;
            prob.k = k;
            prob.nu = nu;
            prob.forcing = f;
            const StokesSolution sol = solve_stokes(prob);
            const ErrorReport rep =
                compute_errors(u_ex, gu_ex, p_ex, sol.velocity, sol.facet, &sol.pressure, 4);
            lh.push_back(std::log(rep.h));
            lu.push_back(std::log(rep.h1_u));
            lp.push_back(std::log(rep.l2_p));
        }
        auto slope = [&](const std::vector<double>& ly) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const int m = static_cast<int>(lh.size());
            for (int i = 0; i < m; ++i) {
                sx += lh[i];
                sy += ly[i];
                sxx += lh[i] * lh[i];
                sxy += lh[i] * ly[i];
            }
            return (m * sxy - sx * sy) / (m * sxx - sx * sx);
        };
        const double ru = slope(lu), rp = slope(lp);
        char buf[96];
        std::snprintf(buf, sizeof buf, "k=%d: H1 rate %.2f, p rate %.2f; ", k, ru, rp);
        detail += buf;
        if (std::abs(ru - k) > 0.25 || std::abs(rp - k) > 0.25) ok = false;
    }
    report(7, "h-convergence rates within +-0.25 of k", ok, detail + "four refinements each");
}

void criterion_8() {
    const Mesh mesh = generate_unit_square(10, true);
    const VectorField init = [](const Eigen::Vector2d& p) {
        return Eigen::Vector2d(std::sin(2 * M_PI * p.x()) * std::sin(2 * M_PI * p.y()),
                               std::cos(2 * M_PI * p.x()) * std::cos(2 * M_PI * p.y()));
    };
    UnsteadyProblem prob;
    prob.mesh = &mesh;
    prob.k = 4;
    prob.nu = 1e-6;
    prob.dt = 1e-4;
    prob.t_end = 0.1;
    prob.semidisc = Semidisc::D;
    prob.post_reconstruct = true;
    prob.initial = init;
    prob.diag_stride = 1;

    bool ok = true;
    std::string detail;
    try {
        const auto rows = run_unsteady(prob);
        const double l2_0 = rows.front().l2_norm;
        double worst_track = 0.0, worst_increase = 0.0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double exact = l2_0 * std::exp(-8.0 * M_PI * M_PI * prob.nu * rows[i].t);
            worst_track = std::max(worst_track, std::abs(rows[i].l2_norm - exact) / exact);
            worst_increase = std::max(
                worst_increase, (rows[i].l2_norm - rows[i - 1].l2_norm) / rows[i - 1].l2_norm);
        }
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "variant d: |u0| %.4f, tracking err %.2e (<=1%%), max per-step "
                      "increase %.1e (<=1e-10); ",
                      l2_0, worst_track, worst_increase);
        detail += buf;
        if (worst_track > 0.01 || worst_increase > 1e-10) ok = false;
    } catch (const std::exception& e) {
        detail += std::string("variant d failed: ") + e.what() + "; ";
        ok = false;
    }

    for (const Semidisc variant : {Semidisc::A, Semidisc::C}) {
        UnsteadyProblem other = prob;
        other.semidisc = variant;
        other.post_reconstruct = false;
        other.diag_stride = 100;
        try {
            run_unsteady(other);
            detail += std::string("variant ") + to_string(variant) + " completed; ";
        } catch (const Blowup&) {
            detail += std::string("variant ") + to_string(variant) + " blew up; ";
            ok = false;
        }
    }
    report(8, "lattice flow decay and stability", ok, detail);
}

void criterion_9() {
    Mesh mesh = generate_channel_cylinder(0.07);
    const bool count_ok = mesh.num_elements() >= 400 && mesh.num_elements() <= 800;

    UnsteadyProblem prob;
    prob.mesh = &mesh;
    prob.k = 3;
    prob.nu = 1e-3;
    prob.semidisc = Semidisc::D;
    prob.scheme = Scheme::SBDF2;
    prob.post_reconstruct = true;
    prob.dt = 5e-4;
    prob.t_end = 0.5;
    prob.diag_stride = 10;
    prob.dirichlet = [](const Eigen::Vector2d& p) {
        if (std::abs(p.x()) > 1e-9) return Eigen::Vector2d(0.0, 0.0);
        const double h = 0.41;
        return Eigen::Vector2d(6.0 * p.y() * (h - p.y()) / (h * h), 0.0);
    };
    prob.bc_ramp = [](double t) {
        const double tr = 0.1;
        if (t >= tr) return 1.0;
        const double s = std::sin(0.5 * M_PI * t / tr);
        return s * s;
    };
    prob.compute_body_force = true;
    prob.body_tag = BoundaryTag::Wall;
    prob.body_filter = [](const Eigen::Vector2d& mid) {
        return (mid - Eigen::Vector2d(0.2, 0.2)).norm() < 0.1;
    };
    prob.body_scale = 20.0;

    bool ok = count_ok;
    std::string detail = "|T| = " + std::to_string(mesh.num_elements()) + " (in [400,800]); ";
    try {
        double cd_min = 1e300, cd_max = -1e300, cd_sum = 0.0;
        int cd_n = 0;
        const auto rows = run_unsteady(prob);
        for (const auto& r : rows) {
            if (r.t < 0.25) continue;
            cd_min = std::min(cd_min, r.cd);
            cd_max = std::max(cd_max, r.cd);
            cd_sum += r.cd;
            ++cd_n;
        }
        const double cd_mean = cd_sum / cd_n;
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "bounded run to t=0.5; c_D on [0.25,0.5] in [%.3f, %.3f] "
                      "(within [2.0,4.5]), mean %.3f (>0)",
                      cd_min, cd_max, cd_mean);
        detail += buf;
        if (cd_min < 2.0 || cd_max > 4.5 || cd_mean <= 0.0) ok = false;
    } catch (const std::exception& e) {
        detail += std::string("run failed: ") + e.what();
        ok = false;
    }
    report(9, "Schaefer-Turek short benchmark", ok, detail);
}

void criterion_10() {
    const Mesh mesh = generate_unit_square(1, false);
    Rng rng(77);
    double worst = 0.0;
    for (int k = 1; k <= 5; ++k) {
        const DofMap wmap = build_dofmap(mesh, SpaceKind::WRelaxed, k);
        const DofMap fmap = build_dofmap(mesh, SpaceKind::Facet, k - 1);
        const DofMap pmap = build_dofmap(mesh, SpaceKind::Pressure, k - 1);
        const VelocityBlocks vel = velocity_blocks(wmap, fmap);
        ViscosityOptions opts;
        opts.nu = 0.37;
        opts.lambda = 4.0;
        const Eigen::SparseMatrix<double> A = assemble_viscosity(mesh, vel, opts);
        const Eigen::SparseMatrix<double> B = assemble_divergence(mesh, vel, pmap);
        const Eigen::SparseMatrix<double> M = assemble_mass(mesh, vel);

        FeFunction uw(wmap), vw(wmap), uf(fmap), vf(fmap), ph(pmap);
        for (int i = 0; i < wmap.total_dofs; ++i) {
            uw.coeffs(i) = rng.uniform(-1.0, 1.0);
            vw.coeffs(i) = rng.uniform(-1.0, 1.0);
        }
        for (int i = 0; i < fmap.total_dofs; ++i) {
            uf.coeffs(i) = rng.uniform(-1.0, 1.0);
            vf.coeffs(i) = rng.uniform(-1.0, 1.0);
        }
        for (int i = 0; i < pmap.total_dofs; ++i) ph.coeffs(i) = rng.uniform(-1.0, 1.0);
        Eigen::VectorXd U(vel.size()), V(vel.size());
        U << uw.coeffs, uf.coeffs;
        V << vw.coeffs, vf.coeffs;

        // Direct quadrature of the three forms.
        const int quad = 2 * k + 4;
        const QuadratureRule vr = triangle_rule(quad);
        double a_direct = 0.0, b_direct = 0.0, m_direct = 0.0;
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const double det = 2.0 * mesh.element_area(e);
            const Eigen::MatrixXd gu = evaluate(uw, e, vr.points, EvalWhat::Gradient);
            const Eigen::MatrixXd gv = evaluate(vw, e, vr.points, EvalWhat::Gradient);
            const Eigen::MatrixXd valu = evaluate(uw, e, vr.points, EvalWhat::Value);
            const Eigen::MatrixXd valv = evaluate(vw, e, vr.points, EvalWhat::Value);
            const Eigen::MatrixXd divu = evaluate(uw, e, vr.points, EvalWhat::Divergence);
            const Eigen::MatrixXd pv = evaluate(ph, e, vr.points, EvalWhat::Value);
            for (int q = 0; q < vr.size(); ++q) {
                a_direct += 0.37 * vr.weights(q) * det * gu.col(q).dot(gv.col(q));
                b_direct -= vr.weights(q) * det * pv(0, q) * divu(0, q);
                m_direct += vr.weights(q) * det * valu.col(q).dot(valv.col(q));
            }
        }
        // Facet terms of the viscous form.
        const QuadratureRule fr = gauss_rule(k + 3);
        const BasisTable leg = legendre_facet_basis(k - 1).tabulate(fr.points);
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const double h = mesh.h_local[e];
            for (int lf = 0; lf < 3; ++lf) {
                const auto& side = mesh.element_sides[e][lf];
                const double len = mesh.facets[side.facet].length;
                Eigen::MatrixXd tloc(fr.size(), 1);
                for (int q = 0; q < fr.size(); ++q)
                    tloc(q, 0) = side.flip ? 1.0 - fr.points(q, 0) : fr.points(q, 0);
                const Eigen::MatrixXd tu = evaluate(uw, e, tloc, EvalWhat::Value, lf);
                const Eigen::MatrixXd tv = evaluate(vw, e, tloc, EvalWhat::Value, lf);
                const Eigen::MatrixXd gu = evaluate(uw, e, tloc, EvalWhat::Gradient, lf);
                const Eigen::MatrixXd gv = evaluate(vw, e, tloc, EvalWhat::Gradient, lf);
                const Eigen::MatrixXd fu = evaluate(uf, e, tloc, EvalWhat::TangentialTrace, lf);
                const Eigen::MatrixXd fv = evaluate(vf, e, tloc, EvalWhat::TangentialTrace, lf);
                const Eigen::Vector2d tau = side.dof_tangent;
                const Eigen::Vector2d nout = side.sigma * side.dof_normal;
                for (int d = 0; d < k; ++d) {
                    double ju = 0, jv = 0, du = 0, dv = 0;
                    for (int q = 0; q < fr.size(); ++q) {
                        const double w = fr.weights(q) * leg.value(d, q);
                        ju += w * (tu.col(q).dot(tau) - fu(0, q));
                        jv += w * (tv.col(q).dot(tau) - fv(0, q));
                        Eigen::Matrix2d Gu, Gv;
                        Gu << gu(0, q), gu(1, q), gu(2, q), gu(3, q);
                        Gv << gv(0, q), gv(1, q), gv(2, q), gv(3, q);
                        du += w * tau.dot(Gu * nout);
                        dv += w * tau.dot(Gv * nout);
                    }
                    a_direct +=
                        len * (-0.37 * (du * jv + dv * ju) + 0.37 * 4.0 * k * k / h * ju * jv);
                }
            }
        }
        worst = std::max(worst, std::abs(V.dot(A * U) - a_direct) / std::abs(a_direct));
        worst = std::max(worst, std::abs(ph.coeffs.dot(B * U) - b_direct) / std::abs(b_direct));
        worst = std::max(worst, std::abs(V.dot(M * U) - m_direct) / std::abs(m_direct));
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "A, B, M vs direct quadrature, k=1..5: rel diff %.1e (<=1e-12)",
                  worst);
    report(10, "assembled forms equal direct quadrature", worst <= 1e-12, buf);
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_1_and_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d of 10 criteria failed (%.1f s total)\n", failures, secs);
    return failures;
}
