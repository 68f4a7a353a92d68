#include "hdgflow/analysis.hpp"

#include "hdgflow/common.hpp"
#include "hdgflow/linear_solver.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace hdgflow {

double triple_norm(const FeFunction& velocity, const FeFunction& facet) {
    const DofMap& wmap = *velocity.map;
    const DofMap& fmap = *facet.map;
    const Mesh& mesh = *wmap.mesh;
    const int k = wmap.order;
    double total = 0.0;

    const QuadratureRule vrule = triangle_rule(2 * k);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Eigen::MatrixXd g = evaluate(velocity, e, vrule.points, EvalWhat::Gradient);
        const double det = 2.0 * mesh.element_area(e);
        for (int q = 0; q < vrule.size(); ++q)
            total += vrule.weights(q) * det * g.col(q).squaredNorm();
    }

    const QuadratureRule frule = gauss_rule(k + 1);
    const BasisTable leg = legendre_facet_basis(k - 1).tabulate(frule.points);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double h = mesh.h_local[e];
        for (int lf = 0; lf < 3; ++lf) {
            const Mesh::SideInfo& side = mesh.element_sides[e][lf];
            Eigen::MatrixXd tloc(frule.size(), 1);
            for (int q = 0; q < frule.size(); ++q)
                tloc(q, 0) = side.flip ? 1.0 - frule.points(q, 0) : frule.points(q, 0);
            const Eigen::MatrixXd tr = evaluate(velocity, e, tloc, EvalWhat::Value, lf);
            const int modes = k;
            const double len = mesh.facets[side.facet].length;
            // Point q of tloc sits at DOF-facet parameter frule.points(q),
            // so the traces line up with the plain Legendre table.
            for (int d = 0; d < modes; ++d) {
                double coef = 0.0;
                for (int q = 0; q < frule.size(); ++q)
                    coef += frule.weights(q) * leg.value(d, q) * tr.col(q).dot(side.dof_tangent);
                const double jump =
                    coef - facet.coeffs(fmap.facet_base[side.dof_facet] + d);
                total += (static_cast<double>(k) * k / h) * len * jump * jump;
            }
        }
    }
    return std::sqrt(total);
}

ErrorReport compute_errors(const VectorField& u_exact, const MatrixField& grad_u_exact,
                           const ScalarField& p_exact, const FeFunction& velocity,
                           const FeFunction& facet, const FeFunction* pressure,
                           int overquad) {
    const DofMap& wmap = *velocity.map;
    const Mesh& mesh = *wmap.mesh;
    const int k = wmap.order;
    ErrorReport rep;
    rep.k = k;
    rep.h = mesh.max_h();
    rep.ndofs = wmap.total_dofs + facet.map->total_dofs + (pressure ? pressure->map->total_dofs : 0);

    const QuadratureRule vrule = triangle_rule(2 * k + 2 + overquad);
    double l2 = 0.0, h1 = 0.0, l2p = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const AffineMap geo = mesh.affine_map(e);
        const Eigen::MatrixXd val = evaluate(velocity, e, vrule.points, EvalWhat::Value);
        const Eigen::MatrixXd grad = evaluate(velocity, e, vrule.points, EvalWhat::Gradient);
        Eigen::MatrixXd pval;
        if (pressure) pval = evaluate(*pressure, e, vrule.points, EvalWhat::Value);
        for (int q = 0; q < vrule.size(); ++q) {
            const Eigen::Vector2d x = geo.apply(vrule.points.row(q).transpose());
            const double w = vrule.weights(q) * geo.det;
            l2 += w * (val.col(q) - u_exact(x)).squaredNorm();
            const Eigen::Matrix2d ge = grad_u_exact(x);
            Eigen::Matrix2d gh;
            gh << grad(0, q), grad(1, q), grad(2, q), grad(3, q);
            h1 += w * (gh - ge).squaredNorm();
            if (pressure) {
                const double dp = pval(0, q) - p_exact(x);
                l2p += w * dp * dp;
            }
        }
    }
    rep.l2_u = std::sqrt(l2);
    rep.h1_u = std::sqrt(h1);
    rep.l2_p = std::sqrt(l2p);

    // Jump part of the triple norm: the exact solution's element trace and
    // facet trace coincide, so the error jump equals the discrete jump.
    const double tn = triple_norm(velocity, facet);
    const double jump_sq = tn * tn - [&] {
        // discrete gradient part of the triple norm
        double g = 0.0;
        const QuadratureRule r = triangle_rule(2 * k);
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const Eigen::MatrixXd grad = evaluate(velocity, e, r.points, EvalWhat::Gradient);
            const double det = 2.0 * mesh.element_area(e);
            for (int q = 0; q < r.size(); ++q)
                g += r.weights(q) * det * grad.col(q).squaredNorm();
        }
        return g;
    }();
    rep.triple_u = std::sqrt(std::max(0.0, h1 + std::max(0.0, jump_sq)));
    return rep;
}

double max_pointwise_divergence(const FeFunction& velocity, int quad_degree) {
    const DofMap& wmap = *velocity.map;
    const Mesh& mesh = *wmap.mesh;
    const int deg = quad_degree > 0 ? quad_degree : 2 * wmap.order + 2;
    const QuadratureRule rule = triangle_rule(deg);
    double worst = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Eigen::MatrixXd div = evaluate(velocity, e, rule.points, EvalWhat::Divergence);
        worst = std::max(worst, div.cwiseAbs().maxCoeff());
    }
    return worst;
}

double max_normal_jump(const FeFunction& velocity, int quad_degree) {
    const DofMap& wmap = *velocity.map;
    const Mesh& mesh = *wmap.mesh;
    const int n = quad_degree > 0 ? quad_degree : wmap.order + 2;
    const QuadratureRule rule = gauss_rule(n);
    double worst = 0.0;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Mesh::Facet& facet = mesh.facets[f];
        if (facet.tag == BoundaryTag::PeriodicSlave) continue;
        std::array<std::pair<int, int>, 2> sides;
        int nsides = 0;
        for (int s = 0; s < 2; ++s)
            if (facet.elems[s] >= 0) sides[nsides++] = {facet.elems[s], facet.local_index[s]};
        if (facet.periodic_partner >= 0) {
            const Mesh::Facet& partner = mesh.facets[facet.periodic_partner];
            sides[nsides++] = {partner.elems[0], partner.local_index[0]};
        }
        if (nsides < 2) continue;
        Eigen::RowVectorXd tr[2];
        for (int s = 0; s < nsides; ++s) {
            const auto [e, lf] = sides[s];
            const Mesh::SideInfo& side = mesh.element_sides[e][lf];
            Eigen::MatrixXd tloc(rule.size(), 1);
            for (int q = 0; q < rule.size(); ++q)
                tloc(q, 0) = side.flip ? 1.0 - rule.points(q, 0) : rule.points(q, 0);
            Eigen::MatrixXd ntr = evaluate(velocity, e, tloc, EvalWhat::NormalTrace, lf);
            // NormalTrace is w.r.t. the element outward normal; point q of
            // tloc sits at canonical parameter rule.points(q) already.
            tr[s] = side.sigma * ntr.row(0);
        }
        worst = std::max(worst, (tr[0] - tr[1]).cwiseAbs().maxCoeff());
    }
    return worst;
}

double kinetic_energy(const FeFunction& velocity) {
    const DofMap& wmap = *velocity.map;
    const Mesh& mesh = *wmap.mesh;
    const QuadratureRule rule = triangle_rule(2 * wmap.order + 2);
    double total = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Eigen::MatrixXd val = evaluate(velocity, e, rule.points, EvalWhat::Value);
        const double det = 2.0 * mesh.element_area(e);
        for (int q = 0; q < rule.size(); ++q)
            total += rule.weights(q) * det * val.col(q).squaredNorm();
    }
    return 0.5 * total;
}

double l2_norm(const FeFunction& velocity) { return std::sqrt(2.0 * kinetic_energy(velocity)); }

InfSupReport estimate_infsup(const Mesh& mesh, int k, double nu, double lambda,
                             SpaceKind velocity_kind) {
    const DofMap wmap = build_dofmap(mesh, velocity_kind, k);
    const DofMap fmap = build_dofmap(mesh, SpaceKind::Facet, k - 1);
    const DofMap pmap = build_dofmap(mesh, SpaceKind::Pressure, k - 1);
    const VelocityBlocks vel = velocity_blocks(wmap, fmap);

    std::vector<int> free_list;
    for (int i = 0; i < vel.n_w; ++i)
        if (!wmap.dirichlet[i]) free_list.push_back(i);
    for (int i = 0; i < vel.n_f; ++i)
        if (!fmap.dirichlet[i]) free_list.push_back(vel.n_w + i);
    const int nfree = static_cast<int>(free_list.size());
    const int np = pmap.total_dofs;
    if (nfree > 4000 || np > 2000)
        throw DimensionLimit("inf-sup estimation needs a desk-scale mesh");

    ViscosityOptions aopts;
    aopts.nu = nu;
    aopts.lambda = lambda;
    const Eigen::MatrixXd A_full = Eigen::MatrixXd(assemble_viscosity(mesh, vel, aopts));
    ViscosityOptions nopts;
    nopts.nu = 1.0;
    nopts.consistency_terms = false;
    nopts.scale_penalty_by_nu_lambda = false;
    const Eigen::MatrixXd N_full = Eigen::MatrixXd(assemble_viscosity(mesh, vel, nopts));
    const Eigen::MatrixXd B_full = Eigen::MatrixXd(assemble_divergence(mesh, vel, pmap));

    Eigen::MatrixXd A(nfree, nfree), N(nfree, nfree), B(np, nfree);
    for (int i = 0; i < nfree; ++i) {
        for (int j = 0; j < nfree; ++j) {
            A(i, j) = A_full(free_list[i], free_list[j]);
            N(i, j) = N_full(free_list[i], free_list[j]);
        }
        B.col(i) = B_full.col(free_list[i]);
    }
    const Eigen::MatrixXd Mp = Eigen::MatrixXd(assemble_pressure_mass(mesh, pmap));

    InfSupReport rep;
    rep.k = k;
    rep.h = mesh.max_h();
    rep.n_velocity_free = nfree;
    rep.n_pressure = np;

    // c_LBB^2 = second-smallest eigenvalue of B N^-1 B^T p = mu M_p p
    // (the constant pressure is the expected kernel when the velocity has
    // no outflow boundary).
    const Eigen::LLT<Eigen::MatrixXd> nllt(N);
    if (nllt.info() != Eigen::Success)
        throw BackendFailure("triple-norm Gram matrix is not SPD");
    const Eigen::MatrixXd S = B * nllt.solve(B.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Mp);
    const Eigen::VectorXd mu = es.eigenvalues();
    const double mu_max = mu.maxCoeff();
    double mu_min = mu_max;
    for (int i = 0; i < mu.size(); ++i)
        if (mu(i) > 1e-10 * mu_max) mu_min = std::min(mu_min, mu(i));
    rep.c_lbb = std::sqrt(std::max(0.0, mu_min));

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> co(A, nu * N);
    rep.c_co = co.eigenvalues().minCoeff();
    return rep;
}

std::pair<double, double> drag_lift(const FeFunction& velocity, const FeFunction& pressure,
                                    double nu, BoundaryTag tag,
                                    const std::function<bool(const Eigen::Vector2d&)>& filter) {
    const DofMap& wmap = *velocity.map;
    const Mesh& mesh = *wmap.mesh;
    const QuadratureRule rule = gauss_rule(wmap.order + 3);
    double fx = 0.0, fy = 0.0;
    bool found = false;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Mesh::Facet& facet = mesh.facets[f];
        if (facet.tag != tag || facet.elems[1] >= 0) continue;
        const Eigen::Vector2d a = mesh.vertices[facet.vertices[0]];
        const Eigen::Vector2d b = mesh.vertices[facet.vertices[1]];
        if (filter && !filter(0.5 * (a + b))) continue;
        found = true;
        const int e = facet.elems[0];
        const int lf = facet.local_index[0];
        const Mesh::SideInfo& side = mesh.element_sides[e][lf];
        // Outward normal of the enclosed body, i.e. pointing into the
        // fluid; this orientation gives the benchmark's positive drag.
        const Eigen::Vector2d n = -side.sigma * facet.normal;
        Eigen::MatrixXd tloc(rule.size(), 1);
        for (int q = 0; q < rule.size(); ++q)
            tloc(q, 0) = side.flip ? 1.0 - rule.points(q, 0) : rule.points(q, 0);
        const Eigen::MatrixXd grad = evaluate(velocity, e, tloc, EvalWhat::Gradient, lf);
        const Eigen::MatrixXd pv = evaluate(pressure, e, tloc, EvalWhat::Value, lf);
        for (int q = 0; q < rule.size(); ++q) {
            Eigen::Matrix2d g;
            g << grad(0, q), grad(1, q), grad(2, q), grad(3, q);
            const Eigen::Vector2d traction = nu * (g * n) - pv(0, q) * n;
            const double w = rule.weights(q) * facet.length;
            fx += w * traction.x();
            fy += w * traction.y();
        }
    }
    if (!found) throw MissingTag("no boundary facets carry tag " + to_string(tag));
    return {fx, fy};
}

} // namespace hdgflow
