#include "hdgflow/stokes.hpp"
#include "hdgflow/time_stepping.hpp"

#include "hdgflow/analysis.hpp"
#include "hdgflow/common.hpp"

#include "doctest.h"

using namespace hdgflow;

TEST_CASE("linear solver: identity, random SPD, residual guarantee") {
    Eigen::SparseMatrix<double> I(40, 40);
    I.setIdentity();
    const LinearSolver ident(I);
    Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(40, -1.0, 2.0);
    CHECK((ident.solve(b) - b).cwiseAbs().maxCoeff() == 0.0);

    Rng rng(201);
    Eigen::MatrixXd R(50, 50);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j) R(i, j) = rng.uniform(-1.0, 1.0);
    const Eigen::MatrixXd SPD = R * R.transpose() + 50.0 * Eigen::MatrixXd::Identity(50, 50);
    const LinearSolver solver(SPD.sparseView());
    Eigen::VectorXd rhs(50);
    for (int i = 0; i < 50; ++i) rhs(i) = rng.uniform(-1.0, 1.0);
    const Eigen::VectorXd x = solver.solve(rhs);
    CHECK((SPD * x - rhs).norm() <= 1e-10 * rhs.norm());
}

TEST_CASE("saddle system vs dense factorization oracle (2-element mesh, k=2)") {
    const Mesh mesh = generate_unit_square(1, false);
    const int k = 2;
    const DofMap wmap = build_dofmap(mesh, SpaceKind::WRelaxed, k);
    const DofMap fmap = build_dofmap(mesh, SpaceKind::Facet, k - 1);
    const DofMap pmap = build_dofmap(mesh, SpaceKind::Pressure, k - 1);
    const VelocityBlocks vel = velocity_blocks(wmap, fmap);
    SparseSystem sys = build_sparse_system(mesh, vel, pmap, 1.0, 4.0);
    const Eigen::SparseMatrix<double> K = sys.compose();
    Rng rng(211);
    Eigen::VectorXd b(K.rows());
    for (int i = 0; i < b.size(); ++i) b(i) = rng.uniform(-1.0, 1.0);
    const LinearSolver solver(K);
    const Eigen::VectorXd x = solver.solve(b);
    const Eigen::VectorXd x_dense = Eigen::MatrixXd(K).fullPivLu().solve(b);
    CHECK((x - x_dense).norm() <= 1e-9 * x_dense.norm());
}

TEST_CASE("solve_stokes: zero data gives the zero solution") {
    const Mesh mesh = generate_unit_square(2, false);
    StokesProblem prob;
    prob.mesh = &mesh;
    prob.k = 2;
    const StokesSolution sol = solve_stokes(prob);
    CHECK(sol.velocity.coeffs.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(sol.facet.coeffs.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(sol.pressure.coeffs.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("solve_stokes: polynomial manufactured solution is reproduced") {
    const Mesh mesh = generate_unit_square(3, false);
    const double nu = 0.7;
    const VectorField u_ex = [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(2 * x.x() * x.x() * x.y(), -2 * x.x() * x.y() * x.y());
    };
    const MatrixField gu_ex = [](const Eigen::Vector2d& x) {
        Eigen::Matrix2d g;
        g << 4 * x.x() * x.y(), 2 * x.x() * x.x(), -2 * x.y() * x.y(), -4 * x.x() * x.y();
        return g;
    };
    const ScalarField p_ex = [](const Eigen::Vector2d& x) {
        return x.x() * x.x() + x.y() * x.y() - 2.0 / 3.0;
    };
    const VectorField f = [nu](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(-nu * 4 * x.y() + 2 * x.x(), nu * 4 * x.x() + 2 * x.y());
    };
    for (const auto variant : {StokesVariant::B, StokesVariant::PR}) {
        StokesProblem prob;
        prob.mesh = &mesh;
        prob.k = 3;
        prob.nu = nu;
        prob.variant = variant;
        prob.forcing = f;
        prob.dirichlet = u_ex;
        const StokesSolution sol = solve_stokes(prob);
        const ErrorReport rep =
            compute_errors(u_ex, gu_ex, p_ex, sol.velocity, sol.facet, &sol.pressure);
        CHECK(rep.l2_u < 1e-9);
        CHECK(rep.h1_u < 1e-9);
        CHECK(rep.l2_p < 1e-9);
        CHECK(sol.divergence_residual < 1e-9);
    }
}

TEST_CASE("solve_stokes: conforming pair runs through the same path") {
    const Mesh mesh = generate_unit_square(2, false);
    const VectorField f = [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(std::sin(2 * x.y()), std::cos(3 * x.x()));
    };
    StokesProblem prob;
    prob.mesh = &mesh;
    prob.k = 3;
    prob.nu = 0.1;
    prob.forcing = f;
    prob.velocity_kind = SpaceKind::WConf;
    const StokesSolution sol = solve_stokes(prob);
    CHECK(sol.divergence_residual < 1e-9);
    CHECK(max_top_normal_jump(sol.velocity) == 0.0); // conforming by construction
}

TEST_CASE("imex: zero initial data and forcing stays zero") {
    const Mesh mesh = generate_unit_square(2, false);
    UnsteadyProblem prob;
    prob.mesh = &mesh;
    prob.k = 2;
    prob.nu = 1e-2;
    prob.dt = 1e-2;
    prob.t_end = 5e-2;
    prob.semidisc = Semidisc::D;
    const auto rows = run_unsteady(prob);
    CHECK(rows.back().energy == 0.0);
    CHECK(rows.back().l2_norm == 0.0);
}

TEST_CASE("imex: Stokes limit converges to the steady solution") {
    const Mesh mesh = generate_unit_square(2, false);
    const double nu = 1.0;
    const VectorField f = [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(std::sin(2 * x.y()), x.x());
    };
    StokesProblem sprob;
    sprob.mesh = &mesh;
    sprob.k = 2;
    sprob.nu = nu;
    sprob.forcing = f;
    const StokesSolution steady = solve_stokes(sprob);

    UnsteadyProblem prob;
    prob.mesh = &mesh;
    prob.k = 2;
    prob.nu = nu;
    prob.dt = 0.25;
    prob.t_end = 30.0;
    prob.forcing = f;
    prob.disable_convection = true;
    prob.post_reconstruct = false;
    prob.semidisc = Semidisc::A;
    ImexStepper stepper(prob);
    for (int i = 0; i < 120; ++i) stepper.step();
    const double diff =
        (stepper.state().velocity.coeffs - steady.velocity.coeffs).cwiseAbs().maxCoeff();
    const double scale = steady.velocity.coeffs.cwiseAbs().maxCoeff();
    CHECK(diff <= 1e-8 * std::max(1.0, scale));
}

TEST_CASE("imex variant d: lattice energy does not increase") {
    const Mesh mesh = generate_unit_square(6, true);
    UnsteadyProblem prob;
    prob.mesh = &mesh;
    prob.k = 3;
    prob.nu = 1e-6;
    prob.dt = 1e-4;
    prob.t_end = 2e-3;
    prob.semidisc = Semidisc::D;
    prob.post_reconstruct = true;
    prob.initial = [](const Eigen::Vector2d& p) {
        return Eigen::Vector2d(std::sin(2 * M_PI * p.x()) * std::sin(2 * M_PI * p.y()),
                               std::cos(2 * M_PI * p.x()) * std::cos(2 * M_PI * p.y()));
    };
    ImexStepper stepper(prob);
    double prev = stepper.state().energy;
    CHECK(prev == doctest::Approx(0.25).epsilon(1e-4));
    for (int i = 0; i < 20; ++i) {
        stepper.step();
        CHECK(stepper.state().energy <= prev * (1.0 + 1e-10));
        prev = stepper.state().energy;
        CHECK(stepper.state().div_max < 1e-10);
    }
}

TEST_CASE("SBDF2 runs and stays close to IMEX1 on a smooth problem") {
    const Mesh mesh = generate_unit_square(4, true);
    const VectorField init = [](const Eigen::Vector2d& p) {
        return Eigen::Vector2d(std::sin(2 * M_PI * p.x()) * std::sin(2 * M_PI * p.y()),
                               std::cos(2 * M_PI * p.x()) * std::cos(2 * M_PI * p.y()));
    };
    auto run = [&](Scheme scheme) {
        UnsteadyProblem prob;
        prob.mesh = &mesh;
        prob.k = 2;
        prob.nu = 1e-3;
        prob.dt = 5e-4;
        prob.t_end = 1e-2;
        prob.scheme = scheme;
        prob.semidisc = Semidisc::D;
        prob.initial = init;
        return run_unsteady(prob).back().l2_norm;
    };
    const double a = run(Scheme::IMEX1);
    const double b = run(Scheme::SBDF2);
    CHECK(a == doctest::Approx(b).epsilon(5e-3));
}

TEST_CASE("blowup detection reports instability instead of garbage") {
    // An absurdly large time step on a convection-dominated start triggers
    // the energy guard.
    const Mesh mesh = generate_unit_square(4, true);
    UnsteadyProblem prob;
    prob.mesh = &mesh;
    prob.k = 3;
    prob.nu = 1e-8;
    prob.dt = 0.5;
    prob.t_end = 50.0;
    prob.semidisc = Semidisc::A;
    prob.post_reconstruct = false;
    prob.initial = [](const Eigen::Vector2d& p) {
        return Eigen::Vector2d(std::sin(2 * M_PI * p.x()) * std::sin(2 * M_PI * p.y()),
                               std::cos(2 * M_PI * p.x()) * std::cos(2 * M_PI * p.y()));
    };
    ImexStepper stepper(prob);
    bool blew_up = false;
    try {
        for (int i = 0; i < 100; ++i) stepper.step();
    } catch (const Blowup&) {
        blew_up = true;
    }
    CHECK(blew_up);
}
