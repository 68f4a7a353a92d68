#include "hdgflow/assembly.hpp"

#include "hdgflow/common.hpp"

#include <vector>

namespace hdgflow {

namespace {

struct PhysShape {
    Eigen::MatrixXd v1, v2;
    Eigen::MatrixXd g1x, g1y, g2x, g2y;

    void values(const WShape& ref, const AffineMap& geo) {
        const Eigen::Matrix2d& J = geo.jacobian;
        v1 = (J(0, 0) * ref.v1 + J(0, 1) * ref.v2) / geo.det;
        v2 = (J(1, 0) * ref.v1 + J(1, 1) * ref.v2) / geo.det;
    }
    void gradients(const WShape& ref, const AffineMap& geo) {
        const Eigen::Matrix2d& J = geo.jacobian;
        const Eigen::Matrix2d& Ji = geo.jacobian_inv;
        const Eigen::MatrixXd a1 = J(0, 0) * ref.g1x + J(0, 1) * ref.g2x;
        const Eigen::MatrixXd a2 = J(0, 0) * ref.g1y + J(0, 1) * ref.g2y;
        const Eigen::MatrixXd b1 = J(1, 0) * ref.g1x + J(1, 1) * ref.g2x;
        const Eigen::MatrixXd b2 = J(1, 0) * ref.g1y + J(1, 1) * ref.g2y;
        g1x = (a1 * Ji(0, 0) + a2 * Ji(1, 0)) / geo.det;
        g1y = (a1 * Ji(0, 1) + a2 * Ji(1, 1)) / geo.det;
        g2x = (b1 * Ji(0, 0) + b2 * Ji(1, 0)) / geo.det;
        g2y = (b1 * Ji(0, 1) + b2 * Ji(1, 1)) / geo.det;
    }
};

WShape flipped(const WShape& s, bool flip) {
    if (!flip) return s;
    WShape out;
    out.v1 = s.v1.rowwise().reverse();
    out.v2 = s.v2.rowwise().reverse();
    out.g1x = s.g1x.rowwise().reverse();
    out.g1y = s.g1y.rowwise().reverse();
    out.g2x = s.g2x.rowwise().reverse();
    out.g2y = s.g2y.rowwise().reverse();
    out.div_ref = s.div_ref.rowwise().reverse();
    return out;
}

/// One element side of a logical (periodically identified) facet.
struct Side {
    int element = -1;
    int local_facet = -1;
    Mesh::SideInfo info;
};

/// Logical facets: every facet record once, with periodic pairs merged.
struct LogicalFacet {
    int dof_facet = -1;
    double length = 0.0;
    BoundaryTag tag = BoundaryTag::Interior; // Interior for merged pairs
    std::vector<Side> sides;
};

std::vector<LogicalFacet> logical_facets(const Mesh& mesh) {
    std::vector<LogicalFacet> out;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Mesh::Facet& facet = mesh.facets[f];
        if (facet.tag == BoundaryTag::PeriodicSlave) continue;
        LogicalFacet lf;
        lf.dof_facet = f;
        lf.length = facet.length;
        lf.tag = facet.tag == BoundaryTag::PeriodicMaster ? BoundaryTag::Interior : facet.tag;
        for (int s = 0; s < 2; ++s) {
            if (facet.elems[s] < 0) continue;
            Side side;
            side.element = facet.elems[s];
            side.local_facet = facet.local_index[s];
            side.info = mesh.element_sides[side.element][side.local_facet];
            lf.sides.push_back(side);
        }
        if (facet.periodic_partner >= 0) {
            const Mesh::Facet& partner = mesh.facets[facet.periodic_partner];
            Side side;
            side.element = partner.elems[0];
            side.local_facet = partner.local_index[0];
            side.info = mesh.element_sides[side.element][side.local_facet];
            lf.sides.push_back(side);
        }
        out.push_back(lf);
    }
    return out;
}

} // namespace

VelocityBlocks velocity_blocks(const DofMap& wmap, const DofMap& fmap) {
    if (!wmap.is_velocity() || fmap.kind != SpaceKind::Facet || wmap.mesh != fmap.mesh ||
        fmap.order != wmap.order - 1)
        throw MapMismatch("velocity blocks need matching W and facet maps");
    VelocityBlocks vel;
    vel.wmap = &wmap;
    vel.fmap = &fmap;
    vel.n_w = wmap.total_dofs;
    vel.n_f = fmap.total_dofs;
    return vel;
}

Eigen::SparseMatrix<double> assemble_viscosity(const Mesh& mesh, const VelocityBlocks& vel,
                                               const ViscosityOptions& opts) {
    const DofMap& wmap = *vel.wmap;
    const DofMap& fmap = *vel.fmap;
    const BdmElement& bdm = *wmap.bdm;
    const int k = wmap.order;
    const int nloc = bdm.size();
    std::vector<Eigen::Triplet<double>> trip;

    // Volume gradients.
    const QuadratureRule vrule = triangle_rule(2 * k);
    const WShape vshape(bdm, vrule.points);
    PhysShape phys;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const AffineMap geo = mesh.affine_map(e);
        phys.gradients(vshape, geo);
        Eigen::MatrixXd aloc =
            phys.g1x * vrule.weights.asDiagonal() * phys.g1x.transpose();
        aloc += phys.g1y * vrule.weights.asDiagonal() * phys.g1y.transpose();
        aloc += phys.g2x * vrule.weights.asDiagonal() * phys.g2x.transpose();
        aloc += phys.g2y * vrule.weights.asDiagonal() * phys.g2y.transpose();
        aloc *= opts.nu * geo.det;
        const auto& dofs = wmap.element_dofs[e];
        // Mirror the upper triangle so A equals its transpose exactly.
        for (int i = 0; i < nloc; ++i) {
            trip.emplace_back(dofs[i].global, dofs[i].global,
                              dofs[i].scale * dofs[i].scale * aloc(i, i));
            for (int j = i + 1; j < nloc; ++j) {
                const double v = dofs[i].scale * dofs[j].scale * aloc(i, j);
                trip.emplace_back(dofs[i].global, dofs[j].global, v);
                trip.emplace_back(dofs[j].global, dofs[i].global, v);
            }
        }
    }

    // Facet terms in Legendre coefficient space of the DOF facet.
    const QuadratureRule frule = gauss_rule(k + 1);
    std::array<WShape, 3> fshape;
    for (int f = 0; f < 3; ++f)
        fshape[f] = WShape(bdm, facet_ref_points(f, frule.points));
    const BasisTable leg = legendre_facet_basis(k - 1).tabulate(frule.points);
    const int modes = k;

    for (const LogicalFacet& lf : logical_facets(mesh)) {
        for (const Side& side : lf.sides) {
            const int e = side.element;
            const AffineMap geo = mesh.affine_map(e);
            const WShape shape = flipped(fshape[side.local_facet], side.info.flip);
            PhysShape ps;
            ps.values(shape, geo);
            ps.gradients(shape, geo);
            const Eigen::Vector2d tau = side.info.dof_tangent;
            const Eigen::Vector2d nout = side.info.sigma * side.info.dof_normal;

            // Tangential trace and normal-derivative coefficients.
            const Eigen::MatrixXd vt = tau.x() * ps.v1 + tau.y() * ps.v2;
            const Eigen::MatrixXd dn =
                tau.x() * (ps.g1x * nout.x() + ps.g1y * nout.y()) +
                tau.y() * (ps.g2x * nout.x() + ps.g2y * nout.y());
            const Eigen::MatrixXd T =
                vt * frule.weights.asDiagonal() * leg.value.transpose(); // nloc x modes
            const Eigen::MatrixXd D =
                dn * frule.weights.asDiagonal() * leg.value.transpose();

            const auto& dofs = wmap.element_dofs[e];
            const int nf = modes;
            const int ntot = nloc + nf;
            std::vector<int> gid(ntot);
            for (int j = 0; j < nloc; ++j) gid[j] = dofs[j].global;
            for (int d = 0; d < nf; ++d)
                gid[nloc + d] = vel.facet_offset(fmap.facet_base[side.info.dof_facet] + d);

            const double h = mesh.h_local[e];
            const double pen = opts.scale_penalty_by_nu_lambda
                                   ? opts.nu * opts.lambda * k * k / h
                                   : static_cast<double>(k) * k / h;
            Eigen::MatrixXd mloc = Eigen::MatrixXd::Zero(ntot, ntot);
            Eigen::VectorXd jd = Eigen::VectorXd::Zero(ntot);
            Eigen::VectorXd dd = Eigen::VectorXd::Zero(ntot);
            for (int d = 0; d < modes; ++d) {
                for (int j = 0; j < nloc; ++j) {
                    jd(j) = dofs[j].scale * T(j, d);
                    dd(j) = dofs[j].scale * D(j, d);
                }
                jd(nloc + d) = -1.0;
                mloc += (pen * lf.length) * (jd * jd.transpose());
                if (opts.consistency_terms) {
                    const Eigen::MatrixXd cross = (opts.nu * lf.length) * (dd * jd.transpose());
                    mloc -= cross + cross.transpose();
                }
                jd(nloc + d) = 0.0;
            }
            for (int i = 0; i < ntot; ++i) {
                if (mloc(i, i) != 0.0) trip.emplace_back(gid[i], gid[i], mloc(i, i));
                for (int j = i + 1; j < ntot; ++j) {
                    if (mloc(i, j) == 0.0 && mloc(j, i) == 0.0) continue;
                    const double v = mloc(i, j);
                    trip.emplace_back(gid[i], gid[j], v);
                    trip.emplace_back(gid[j], gid[i], v);
                }
            }
        }
    }

    Eigen::SparseMatrix<double> A(vel.size(), vel.size());
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

Eigen::SparseMatrix<double> assemble_divergence(const Mesh& mesh, const VelocityBlocks& vel,
                                                const DofMap& pmap) {
    const DofMap& wmap = *vel.wmap;
    const BdmElement& bdm = *wmap.bdm;
    const int k = wmap.order;
    if (pmap.order != k - 1) throw MapMismatch("pressure space must have degree k-1");
    const QuadratureRule vrule = triangle_rule(2 * k);
    const WShape vshape(bdm, vrule.points);
    const BasisTable ptab = dubiner_basis(pmap.order).tabulate(vrule.points);
    std::vector<Eigen::Triplet<double>> trip;
    // det(J) cancels: p div(u) dx = p_hat div_ref(u_hat) dx_hat.
    const Eigen::MatrixXd bloc_ref =
        -(ptab.value * vrule.weights.asDiagonal() * vshape.div_ref.transpose());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& dofs = wmap.element_dofs[e];
        for (int s = 0; s < pmap.element_block_size; ++s)
            for (int j = 0; j < bdm.size(); ++j)
                trip.emplace_back(pmap.element_base[e] + s, dofs[j].global,
                                  dofs[j].scale * bloc_ref(s, j));
    }
    Eigen::SparseMatrix<double> B(pmap.total_dofs, vel.size());
    B.setFromTriplets(trip.begin(), trip.end());
    B.makeCompressed();
    return B;
}

Eigen::SparseMatrix<double> assemble_mass(const Mesh& mesh, const VelocityBlocks& vel) {
    const DofMap& wmap = *vel.wmap;
    const BdmElement& bdm = *wmap.bdm;
    const int k = wmap.order;
    const QuadratureRule vrule = triangle_rule(2 * k + 2);
    const WShape vshape(bdm, vrule.points);
    std::vector<Eigen::Triplet<double>> trip;
    PhysShape phys;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const AffineMap geo = mesh.affine_map(e);
        phys.values(vshape, geo);
        Eigen::MatrixXd mloc = phys.v1 * vrule.weights.asDiagonal() * phys.v1.transpose();
        mloc += phys.v2 * vrule.weights.asDiagonal() * phys.v2.transpose();
        mloc *= geo.det;
        const auto& dofs = wmap.element_dofs[e];
        for (int i = 0; i < bdm.size(); ++i)
            for (int j = 0; j < bdm.size(); ++j)
                trip.emplace_back(dofs[i].global, dofs[j].global,
                                  dofs[i].scale * dofs[j].scale * mloc(i, j));
    }
    Eigen::SparseMatrix<double> M(vel.size(), vel.size());
    M.setFromTriplets(trip.begin(), trip.end());
    M.makeCompressed();
    return M;
}

Eigen::SparseMatrix<double> assemble_pressure_mass(const Mesh& mesh, const DofMap& pmap) {
    std::vector<Eigen::Triplet<double>> trip;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double det = 2.0 * mesh.element_area(e);
        for (int s = 0; s < pmap.element_block_size; ++s)
            trip.emplace_back(pmap.element_base[e] + s, pmap.element_base[e] + s, det);
    }
    Eigen::SparseMatrix<double> M(pmap.total_dofs, pmap.total_dofs);
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

Eigen::VectorXd assemble_mean_vector(const Mesh& mesh, const DofMap& pmap) {
    // Only the constant Dubiner mode sqrt(2) has a nonzero integral.
    Eigen::VectorXd c = Eigen::VectorXd::Zero(pmap.total_dofs);
    for (int e = 0; e < mesh.num_elements(); ++e)
        c(pmap.element_base[e]) = 2.0 * mesh.element_area(e) * std::sqrt(2.0) * 0.5;
    return c;
}

RhsFunctional assemble_rhs(const Mesh& mesh, const VelocityBlocks& vel, const VectorField& f,
                           int extra_degree) {
    const DofMap& wmap = *vel.wmap;
    const BdmElement& bdm = *wmap.bdm;
    const int k = wmap.order;
    const QuadratureRule vrule = triangle_rule(2 * k + 2 + extra_degree);
    const WShape vshape(bdm, vrule.points);
    RhsFunctional rhs;
    rhs.variant = "plain";
    rhs.vector = Eigen::VectorXd::Zero(vel.size());
    PhysShape phys;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const AffineMap geo = mesh.affine_map(e);
        phys.values(vshape, geo);
        Eigen::VectorXd f1(vrule.size()), f2(vrule.size());
        for (int q = 0; q < vrule.size(); ++q) {
            const Eigen::Vector2d val = f(geo.apply(vrule.points.row(q).transpose()));
            f1(q) = vrule.weights(q) * val.x();
            f2(q) = vrule.weights(q) * val.y();
        }
        const Eigen::VectorXd rloc = geo.det * (phys.v1 * f1 + phys.v2 * f2);
        const auto& dofs = wmap.element_dofs[e];
        for (int j = 0; j < bdm.size(); ++j)
            rhs.vector(dofs[j].global) += dofs[j].scale * rloc(j);
    }
    return rhs;
}

RhsFunctional assemble_rhs_reconstructed(const Mesh& mesh, const VelocityBlocks& vel,
                                         const ReconstructionOp& rec, const VectorField& f,
                                         int extra_degree) {
    const DofMap& conf = rec.target();
    VelocityBlocks conf_vel = velocity_blocks(conf, *vel.fmap);
    RhsFunctional plain = assemble_rhs(mesh, conf_vel, f, extra_degree);
    RhsFunctional rhs;
    rhs.variant = "reconstructed";
    rhs.vector = Eigen::VectorXd::Zero(vel.size());
    rhs.vector.head(vel.n_w) = rec.apply_transpose(plain.vector.head(conf.total_dofs));
    // <f, R_U v> has no facet component; the facet rows stay zero.
    return rhs;
}

double max_top_normal_jump(const FeFunction& u) {
    const DofMap& map = *u.map;
    if (map.kind != SpaceKind::WRelaxed) return 0.0;
    const Mesh& mesh = *map.mesh;
    double jump = 0.0;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        if (mesh.facets[f].tag == BoundaryTag::PeriodicSlave) continue;
        const int a = map.top_dof[f][0];
        const int b = map.top_dof[f][1];
        if (a == b) continue;
        jump = std::max(jump, std::abs(u.coeffs(a) - u.coeffs(b)));
    }
    return jump;
}

Eigen::VectorXd apply_convection(const FeFunction& w, const FeFunction& u,
                                 const VelocityBlocks& test, const ConvectionOptions& opts) {
    const DofMap& wmap = *w.map;
    const DofMap& umap = *u.map;
    const DofMap& tmap = *test.wmap;
    if (!wmap.is_velocity() || !umap.is_velocity())
        throw MapMismatch("convection arguments must be velocity fields");
    if (wmap.mesh != umap.mesh || wmap.mesh != tmap.mesh || wmap.order != umap.order ||
        wmap.order != tmap.order)
        throw MapMismatch("convection arguments must share mesh and order");
    const bool averaged = wmap.kind == SpaceKind::WRelaxed;
    if (averaged && !opts.allow_average_normal) {
        const double jump = max_top_normal_jump(w);
        if (jump > opts.normal_jump_tol)
            throw NotNormalContinuous("advective field has normal jump " +
                                      std::to_string(jump));
    }

    const Mesh& mesh = *wmap.mesh;
    const BdmElement& bdm = *wmap.bdm;
    const int k = wmap.order;
    const int nloc = bdm.size();
    Eigen::VectorXd r = Eigen::VectorXd::Zero(test.size());

    // Volume term -int u (x) w : grad(v).
    const QuadratureRule vrule = triangle_rule(3 * k + 2);
    const WShape vshape(bdm, vrule.points);
    PhysShape pv, pg;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const AffineMap geo = mesh.affine_map(e);
        pv.values(vshape, geo);
        pg.gradients(vshape, geo);
        Eigen::VectorXd cw(nloc), cu(nloc);
        {
            const auto& dw = wmap.element_dofs[e];
            const auto& du = umap.element_dofs[e];
            for (int j = 0; j < nloc; ++j) {
                cw(j) = dw[j].scale * w.coeffs(dw[j].global);
                cu(j) = du[j].scale * u.coeffs(du[j].global);
            }
        }
        const Eigen::RowVectorXd w1 = cw.transpose() * pv.v1;
        const Eigen::RowVectorXd w2 = cw.transpose() * pv.v2;
        const Eigen::RowVectorXd u1 = cu.transpose() * pv.v1;
        const Eigen::RowVectorXd u2 = cu.transpose() * pv.v2;
        Eigen::VectorXd coeff(vrule.size());
        Eigen::VectorXd rloc = Eigen::VectorXd::Zero(nloc);
        coeff = (u1.array() * w1.array()).matrix().transpose().cwiseProduct(vrule.weights);
        rloc -= pg.g1x * coeff;
        coeff = (u1.array() * w2.array()).matrix().transpose().cwiseProduct(vrule.weights);
        rloc -= pg.g1y * coeff;
        coeff = (u2.array() * w1.array()).matrix().transpose().cwiseProduct(vrule.weights);
        rloc -= pg.g2x * coeff;
        coeff = (u2.array() * w2.array()).matrix().transpose().cwiseProduct(vrule.weights);
        rloc -= pg.g2y * coeff;
        rloc *= geo.det;
        const auto& dt = tmap.element_dofs[e];
        for (int j = 0; j < nloc; ++j) r(dt[j].global) += dt[j].scale * rloc(j);
    }

    // Upwind facet terms.
    const QuadratureRule frule = gauss_rule((3 * k + 3) / 2 + 1);
    std::array<WShape, 3> fshape;
    for (int f = 0; f < 3; ++f)
        fshape[f] = WShape(bdm, facet_ref_points(f, frule.points));
    const int nq = frule.size();

    for (const LogicalFacet& lf : logical_facets(mesh)) {
        const int nsides = static_cast<int>(lf.sides.size());
        // Traces of w, u and the test basis per side, in canonical params.
        std::array<Eigen::Matrix2Xd, 2> wt, ut;
        std::array<PhysShape, 2> tshape;
        std::array<AffineMap, 2> geo;
        for (int s = 0; s < nsides; ++s) {
            const Side& side = lf.sides[s];
            geo[s] = mesh.affine_map(side.element);
            const WShape shape = flipped(fshape[side.local_facet], side.info.flip);
            tshape[s].values(shape, geo[s]);
            Eigen::VectorXd cw(nloc), cu(nloc);
            const auto& dw = wmap.element_dofs[side.element];
            const auto& du = umap.element_dofs[side.element];
            for (int j = 0; j < nloc; ++j) {
                cw(j) = dw[j].scale * w.coeffs(dw[j].global);
                cu(j) = du[j].scale * u.coeffs(du[j].global);
            }
            wt[s].resize(2, nq);
            ut[s].resize(2, nq);
            wt[s].row(0) = cw.transpose() * tshape[s].v1;
            wt[s].row(1) = cw.transpose() * tshape[s].v2;
            ut[s].row(0) = cu.transpose() * tshape[s].v1;
            ut[s].row(1) = cu.transpose() * tshape[s].v2;
        }

        const Eigen::Vector2d n = lf.sides[0].info.dof_normal;
        Eigen::VectorXd an(nq);
        for (int q = 0; q < nq; ++q) {
            double v = wt[0].col(q).dot(n);
            if (nsides == 2 && averaged) v = 0.5 * (v + wt[1].col(q).dot(n));
            an(q) = v;
        }

        // Upwind value of u at each point.
        Eigen::Matrix2Xd uhat(2, nq);
        if (nsides == 2) {
            const int plus = lf.sides[0].info.sigma > 0 ? 0 : 1;
            const int minus = 1 - plus;
            for (int q = 0; q < nq; ++q)
                uhat.col(q) = an(q) >= 0.0 ? ut[plus].col(q) : ut[minus].col(q);
        } else {
            const Side& side = lf.sides[0];
            const Mesh::Facet& facet = mesh.facets[lf.dof_facet];
            const Eigen::Vector2d a = mesh.vertices[facet.vertices[0]];
            const Eigen::Vector2d b = mesh.vertices[facet.vertices[1]];
            for (int q = 0; q < nq; ++q) {
                const double an_out = side.info.sigma * an(q);
                if (lf.tag == BoundaryTag::Outflow || an_out >= 0.0) {
                    uhat.col(q) = ut[0].col(q);
                } else if (opts.boundary_data) {
                    const Eigen::Vector2d x = a + frule.points(q, 0) * (b - a);
                    uhat.col(q) = opts.boundary_scale * (*opts.boundary_data)(x);
                } else {
                    uhat.col(q).setZero();
                }
            }
        }

        for (int s = 0; s < nsides; ++s) {
            const Side& side = lf.sides[s];
            Eigen::VectorXd c1(nq), c2(nq);
            for (int q = 0; q < nq; ++q) {
                const double fac =
                    side.info.sigma * lf.length * frule.weights(q) * an(q);
                c1(q) = fac * uhat(0, q);
                c2(q) = fac * uhat(1, q);
            }
            const Eigen::VectorXd rloc = tshape[s].v1 * c1 + tshape[s].v2 * c2;
            const auto& dt = tmap.element_dofs[side.element];
            for (int j = 0; j < nloc; ++j) r(dt[j].global) += dt[j].scale * rloc(j);
        }
    }
    return r;
}

} // namespace hdgflow
