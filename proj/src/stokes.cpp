#include "hdgflow/stokes.hpp"

#include "hdgflow/common.hpp"

#include <cstdio>
#include <fstream>

namespace hdgflow {

SparseSystem build_sparse_system(const Mesh& mesh, const VelocityBlocks& vel,
                                 const DofMap& pmap, double nu, double lambda) {
    SparseSystem sys;
    sys.vel = vel;
    sys.pmap = &pmap;
    sys.nu = nu;
    sys.lambda = lambda;
    sys.k = vel.wmap->order;
    ViscosityOptions opts;
    opts.nu = nu;
    opts.lambda = lambda;
    sys.A = assemble_viscosity(mesh, vel, opts);
    sys.B = assemble_divergence(mesh, vel, pmap);
    sys.mean_constraint = !mesh.has_tag(BoundaryTag::Outflow);
    if (sys.mean_constraint) sys.mean_vector = assemble_mean_vector(mesh, pmap);

    sys.free_index.assign(vel.size(), -1);
    for (int i = 0; i < vel.n_w; ++i)
        if (!vel.wmap->dirichlet[i]) {
            sys.free_index[i] = static_cast<int>(sys.free_list.size());
            sys.free_list.push_back(i);
        }
    for (int i = 0; i < vel.n_f; ++i)
        if (!vel.fmap->dirichlet[i]) {
            sys.free_index[vel.n_w + i] = static_cast<int>(sys.free_list.size());
            sys.free_list.push_back(vel.n_w + i);
        }
    return sys;
}

Eigen::SparseMatrix<double> SparseSystem::compose(
    double a_visc, double a_mass, const Eigen::SparseMatrix<double>* mass,
    double b_scale) const {
    const int nf = n_free();
    const int np = pmap->total_dofs;
    std::vector<Eigen::Triplet<double>> trip;
    auto add_velocity_block = [&](const Eigen::SparseMatrix<double>& S, double factor) {
        for (int col = 0; col < S.outerSize(); ++col) {
            const int jc = free_index[col];
            if (jc < 0) continue;
            for (Eigen::SparseMatrix<double>::InnerIterator it(S, col); it; ++it) {
                const int ir = free_index[static_cast<int>(it.row())];
                if (ir < 0) continue;
                trip.emplace_back(ir, jc, factor * it.value());
            }
        }
    };
    add_velocity_block(A, a_visc);
    if (a_mass != 0.0 && mass) add_velocity_block(*mass, a_mass);
    for (int col = 0; col < B.outerSize(); ++col) {
        const int jc = free_index[col];
        if (jc < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(B, col); it; ++it) {
            const int p = static_cast<int>(it.row());
            trip.emplace_back(nf + p, jc, it.value());
            trip.emplace_back(jc, nf + p, b_scale * it.value());
        }
    }
    if (mean_constraint) {
        const int last = nf + np;
        for (int p = 0; p < np; ++p) {
            if (mean_vector(p) == 0.0) continue;
            trip.emplace_back(last, nf + p, mean_vector(p));
            trip.emplace_back(nf + p, last, mean_vector(p));
        }
    }
    Eigen::SparseMatrix<double> K(reduced_size(), reduced_size());
    K.setFromTriplets(trip.begin(), trip.end());
    K.makeCompressed();
    return K;
}

Eigen::VectorXd SparseSystem::reduce_rhs(const Eigen::VectorXd& load, const Eigen::VectorXd& g,
                                         double a_visc, double a_mass,
                                         const Eigen::SparseMatrix<double>* mass) const {
    const int nf = n_free();
    const int np = pmap->total_dofs;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(reduced_size());
    Eigen::VectorXd lift = a_visc * (A * g);
    if (a_mass != 0.0 && mass) lift += a_mass * (*mass * g);
    for (int i = 0; i < nf; ++i) {
        const int full = free_list[i];
        b(i) = load(full) - lift(full);
    }
    const Eigen::VectorXd bp = B * g;
    b.segment(nf, np) = -bp;
    return b;
}

void SparseSystem::expand(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                          Eigen::VectorXd& velocity, Eigen::VectorXd& pressure) const {
    velocity = g;
    for (int i = 0; i < n_free(); ++i) velocity(free_list[i]) = x(i);
    pressure = x.segment(n_free(), pmap->total_dofs);
}

void SparseSystem::dump_matrix_market(const std::string& path) const {
    const Eigen::SparseMatrix<double> K = compose();
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << K.rows() << " " << K.cols() << " " << K.nonZeros() << "\n";
    char buf[96];
    for (int col = 0; col < K.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
            std::snprintf(buf, sizeof buf, "%ld %d %.17g\n",
                          static_cast<long>(it.row()) + 1, col + 1, it.value());
            out << buf;
        }
}

StokesSolution solve_stokes(const StokesProblem& problem) {
    const Mesh& mesh = *problem.mesh;
    if (problem.k < 1) throw UnsupportedOrder("Stokes solve requires k >= 1");

    StokesSolution sol;
    sol.wmap = std::make_shared<DofMap>(build_dofmap(mesh, problem.velocity_kind, problem.k));
    sol.fmap = std::make_shared<DofMap>(build_dofmap(mesh, SpaceKind::Facet, problem.k - 1));
    sol.pmap = std::make_shared<DofMap>(build_dofmap(mesh, SpaceKind::Pressure, problem.k - 1));
    const VelocityBlocks vel = velocity_blocks(*sol.wmap, *sol.fmap);
    SparseSystem sys = build_sparse_system(mesh, vel, *sol.pmap, problem.nu, problem.lambda);

    Eigen::VectorXd load = Eigen::VectorXd::Zero(vel.size());
    if (problem.forcing) {
        if (problem.variant == StokesVariant::PR &&
            problem.velocity_kind == SpaceKind::WRelaxed) {
            const DofMap conf = build_dofmap(mesh, SpaceKind::WConf, problem.k);
            const ReconstructionOp rec(*sol.wmap, conf);
            load = assemble_rhs_reconstructed(mesh, vel, rec, problem.forcing).vector;
        } else {
            load = assemble_rhs(mesh, vel, problem.forcing).vector;
        }
    }

    Eigen::VectorXd g = Eigen::VectorXd::Zero(vel.size());
    if (problem.dirichlet) {
        g.head(vel.n_w) = dirichlet_values_w(*sol.wmap, problem.dirichlet);
        g.tail(vel.n_f) = dirichlet_values_facet(*sol.fmap, problem.dirichlet);
        for (int i = 0; i < vel.n_w; ++i)
            if (!sol.wmap->dirichlet[i]) g(i) = 0.0;
        for (int i = 0; i < vel.n_f; ++i)
            if (!sol.fmap->dirichlet[i]) g(vel.n_w + i) = 0.0;
    }

    const LinearSolver solver(sys.compose());
    const Eigen::VectorXd b = sys.reduce_rhs(load, g);
    const Eigen::VectorXd x = solver.solve(b);

    Eigen::VectorXd u_full, p_full;
    sys.expand(x, g, u_full, p_full);

    sol.velocity = FeFunction(*sol.wmap);
    sol.velocity.coeffs = u_full.head(vel.n_w);
    sol.facet = FeFunction(*sol.fmap);
    sol.facet.coeffs = u_full.tail(vel.n_f);
    sol.pressure = FeFunction(*sol.pmap);
    sol.pressure.coeffs = p_full;

    sol.divergence_residual = (sys.B * u_full).cwiseAbs().maxCoeff();
    sol.stats.dimension = solver.dimension();
    sol.stats.dense_fallback = solver.used_dense_fallback();
    const Eigen::VectorXd res = sys.compose() * x - b;
    const double bnorm = b.norm();
    sol.stats.residual = bnorm > 0 ? res.norm() / bnorm : res.norm();
    return sol;
}

} // namespace hdgflow
