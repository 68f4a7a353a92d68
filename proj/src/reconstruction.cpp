#include "hdgflow/reconstruction.hpp"

#include "hdgflow/common.hpp"

#include <array>
#include <vector>

namespace hdgflow {

ReconstructionOp::ReconstructionOp(const DofMap& relaxed, const DofMap& conf)
    : source_(&relaxed), target_(&conf) {
    if (relaxed.kind != SpaceKind::WRelaxed || conf.kind != SpaceKind::WConf ||
        relaxed.mesh != conf.mesh || relaxed.order != conf.order)
        throw MapMismatch("reconstruction requires matching W_relaxed/W_conf maps");

    const Mesh& mesh = *relaxed.mesh;
    const int k = relaxed.order;
    const BdmElement& bdm = *relaxed.bdm;
    const int nloc = bdm.size();
    const int n_int = k >= 2 ? k * (k - 1) : 0;
    const int n_comp = k - 1;

    std::vector<Eigen::Triplet<double>> trip;

    // Facet moments 0..k-1 and the degree-k mode.
    for (int f = 0; f < mesh.num_facets(); ++f) {
        if (mesh.facets[f].tag == BoundaryTag::PeriodicSlave) continue;
        for (int d = 0; d < k; ++d)
            trip.emplace_back(conf.facet_moment_base[f] + d,
                              relaxed.facet_moment_base[f] + d, 1.0);
        const int row = conf.top_dof[f][0];
        const int a = relaxed.top_dof[f][0];
        const int b = relaxed.top_dof[f][1];
        if (a == b) {
            trip.emplace_back(row, a, 1.0);
        } else {
            trip.emplace_back(row, a, 0.5);
            trip.emplace_back(row, b, 0.5);
        }
    }

    // Interior moments are copied verbatim. The complement DOFs minimize
    // the L2 distance of Ru to u per element given the averaged top
    // modes: with Dubiner-orthonormal modal components the weighted Gram
    // is a 2x2 combination of four reference products. Only the three
    // facet top modes move, so each complement DOF couples to at most six
    // extra global DOFs.
    Eigen::MatrixXd p11, p12, p21, p22;
    if (n_comp > 0) {
        const int ns = bdm.scalar_size();
        Eigen::MatrixXd even(ns, nloc), odd(ns, nloc);
        for (int s = 0; s < ns; ++s) {
            even.row(s) = bdm.dual.row(2 * s);
            odd.row(s) = bdm.dual.row(2 * s + 1);
        }
        p11 = even.transpose() * even;
        p12 = even.transpose() * odd;
        p21 = p12.transpose();
        p22 = odd.transpose() * odd;
    }

    for (int e = 0; e < mesh.num_elements(); ++e) {
        for (int j = 0; j < n_int; ++j)
            trip.emplace_back(conf.element_base[e] + j, relaxed.element_base[e] + j, 1.0);
        if (n_comp == 0) continue;

        const AffineMap geo = mesh.affine_map(e);
        const Eigen::Matrix2d W = geo.jacobian.transpose() * geo.jacobian / geo.det;
        const Eigen::MatrixXd G =
            W(0, 0) * p11 + W(0, 1) * p12 + W(1, 0) * p21 + W(1, 1) * p22;

        std::array<int, 3> top_local{};
        for (int f = 0; f < 3; ++f) top_local[f] = bdm.facet_dof(f, k);
        Eigen::MatrixXd Gcc(n_comp, n_comp), Gct(n_comp, 3);
        const int comp0 = bdm.num_facet_dofs() + n_int;
        for (int i = 0; i < n_comp; ++i) {
            for (int j = 0; j < n_comp; ++j) Gcc(i, j) = G(comp0 + i, comp0 + j);
            for (int f = 0; f < 3; ++f) Gct(i, f) = G(comp0 + i, top_local[f]);
        }
        const Eigen::MatrixXd M = Gcc.ldlt().solve(Gct); // (k-1) x 3

        for (int j = 0; j < n_comp; ++j) {
            const int row = conf.element_base[e] + n_int + j;
            trip.emplace_back(row, relaxed.element_base[e] + n_int + j, 1.0);
            for (int f = 0; f < 3; ++f) {
                const DofMap::LocalDof own = relaxed.element_dofs[e][top_local[f]];
                const Mesh::SideInfo& side = mesh.element_sides[e][f];
                const Mesh::Facet& rec_facet = mesh.facets[side.facet];
                const int slot =
                    (rec_facet.elems[0] == e && rec_facet.local_index[0] == f) ? 0 : 1;
                int other = -1;
                if (rec_facet.periodic_partner >= 0) {
                    const int master = side.dof_facet;
                    other = relaxed.top_dof[master]
                                           [own.global == relaxed.top_dof[master][0] ? 1 : 0];
                } else if (rec_facet.elems[1] >= 0) {
                    other = relaxed.top_dof[side.facet][1 - slot];
                }
                if (other < 0) continue; // exterior: top mode unchanged
                // c_conf_j -= M(j,f) * Delta_top_local
                //           = M(j,f) * scale * (own - other)/2
                const double w = M(j, f) * own.scale * 0.5;
                trip.emplace_back(row, own.global, w);
                trip.emplace_back(row, other, -w);
            }
        }
    }

    op_.resize(conf.total_dofs, relaxed.total_dofs);
    op_.setFromTriplets(trip.begin(), trip.end());
    op_.makeCompressed();

    std::vector<Eigen::Triplet<double>> emb;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        if (mesh.facets[f].tag == BoundaryTag::PeriodicSlave) continue;
        for (int d = 0; d < k; ++d)
            emb.emplace_back(relaxed.facet_moment_base[f] + d,
                             conf.facet_moment_base[f] + d, 1.0);
        emb.emplace_back(relaxed.top_dof[f][0], conf.top_dof[f][0], 1.0);
        if (relaxed.top_dof[f][1] != relaxed.top_dof[f][0])
            emb.emplace_back(relaxed.top_dof[f][1], conf.top_dof[f][0], 1.0);
    }
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (int j = 0; j < n_int + n_comp; ++j)
            emb.emplace_back(relaxed.element_base[e] + j, conf.element_base[e] + j, 1.0);
    embed_.resize(relaxed.total_dofs, conf.total_dofs);
    embed_.setFromTriplets(emb.begin(), emb.end());
    embed_.makeCompressed();
}

Eigen::VectorXd ReconstructionOp::embed(const Eigen::VectorXd& conf_coeffs) const {
    return embed_ * conf_coeffs;
}

FeFunction ReconstructionOp::apply(const FeFunction& u) const {
    if (u.map != source_) throw MapMismatch("reconstruct: input not bound to the source map");
    FeFunction out(*target_);
    out.coeffs = op_ * u.coeffs;
    return out;
}

Eigen::VectorXd ReconstructionOp::apply_transpose(
    const Eigen::VectorXd& conf_functional) const {
    return op_.transpose() * conf_functional;
}

CompositeFunction reconstruct_composite(const ReconstructionOp& op,
                                        const CompositeFunction& u) {
    CompositeFunction out;
    out.element = op.apply(u.element);
    out.facet = u.facet;
    return out;
}

} // namespace hdgflow
