#include "hdgflow/bdm.hpp"

#include "hdgflow/common.hpp"

#include <cmath>

namespace hdgflow {

const std::array<RefFacet, 3>& reference_facets() {
    static const std::array<RefFacet, 3> facets = [] {
        std::array<RefFacet, 3> f;
        const Eigen::Vector2d v0(0.0, 0.0), v1(1.0, 0.0), v2(0.0, 1.0);
        f[0] = {v0, v1 - v0, Eigen::Vector2d(0.0, -1.0), 1.0};
        f[1] = {v1, v2 - v1, Eigen::Vector2d(1.0, 1.0).normalized(), std::sqrt(2.0)};
        f[2] = {v2, v0 - v2, Eigen::Vector2d(-1.0, 0.0), 1.0};
        return f;
    }();
    return facets;
}

BdmElement build_bdm_element(int k) {
    if (k < 1) throw UnsupportedOrder("BDM element requires k >= 1");
    BdmElement elem;
    elem.order = k;
    const int n = elem.size();
    const int ns = elem.scalar_size();

    for (int f = 0; f < 3; ++f)
        for (int d = 0; d <= k; ++d)
            elem.dofs.push_back({BdmDof::Kind::FacetNormal, f, d});
    const int n_int_scalar = k >= 2 ? (k - 1) * k / 2 : 0; // dim P^{k-2}
    for (int s = 0; s < n_int_scalar; ++s)
        for (int c = 0; c < 2; ++c)
            elem.dofs.push_back({BdmDof::Kind::InteriorMoment, -1, 2 * s + c});
    for (int j = 0; j < k - 1; ++j)
        elem.dofs.push_back({BdmDof::Kind::Complement, -1, j});

    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(n, n);
    const ScalarBasis scalar = dubiner_basis(k);

    // Facet-normal moments: Gauss tables along each reference facet.
    const QuadratureRule line = gauss_rule(k + 1);
    const ScalarBasis leg = legendre_facet_basis(k);
    const BasisTable leg_tab = leg.tabulate(line.points);
    for (int f = 0; f < 3; ++f) {
        const RefFacet& rf = reference_facets()[f];
        Eigen::MatrixXd pts(line.size(), 2);
        for (int q = 0; q < line.size(); ++q)
            pts.row(q) = (rf.start + line.points(q, 0) * rf.dir).transpose();
        const BasisTable st = scalar.tabulate(pts);
        for (int d = 0; d <= k; ++d) {
            const int row = elem.facet_dof(f, d);
            for (int s = 0; s < ns; ++s) {
                double m0 = 0.0, m1 = 0.0;
                for (int q = 0; q < line.size(); ++q) {
                    const double w = line.weights(q) * leg_tab.value(d, q) * st.value(s, q);
                    m0 += w * rf.normal.x();
                    m1 += w * rf.normal.y();
                }
                V(row, 2 * s + 0) = m0;
                V(row, 2 * s + 1) = m1;
            }
        }
    }

    // Interior moments against [P^{k-2}]^2 are exact by Dubiner
    // orthonormality: moment (s',c') of modal (s,c) is delta delta.
    int row = elem.num_facet_dofs();
    for (int s = 0; s < n_int_scalar; ++s)
        for (int c = 0; c < 2; ++c, ++row) V(row, 2 * s + c) = 1.0;

    // Complement: moments against an L2-orthonormalized family spanning
    // curl(b q), q homogeneous of degree k-2. Orthonormalizing keeps the
    // same DOF span while taming the Vandermonde conditioning.
    if (k >= 2) {
        const QuadratureRule tri = triangle_rule(2 * k + 2);
        const BasisTable st = scalar.tabulate(tri.points);
        const int nc = k - 1;
        std::vector<Eigen::MatrixXd> phi(nc, Eigen::MatrixXd(2, tri.size()));
        for (int j = 0; j < nc; ++j) {
            for (int q = 0; q < tri.size(); ++q) {
                const double x = tri.points(q, 0);
                const double y = tri.points(q, 1);
                // q_j = x^(k-2-j) y^j
                const int px = k - 2 - j, py = j;
                const double qv = std::pow(x, px) * std::pow(y, py);
                const double qx = px > 0 ? px * std::pow(x, px - 1) * std::pow(y, py) : 0.0;
                const double qy = py > 0 ? py * std::pow(x, px) * std::pow(y, py - 1) : 0.0;
                const double b = bubble(x, y);
                const Eigen::Vector2d gb = bubble_grad(x, y);
                // curl(w) = (dw/dy, -dw/dx) for scalar w = b q
                phi[j](0, q) = b * qy + qv * gb.y();
                phi[j](1, q) = -(b * qx + qv * gb.x());
            }
        }
        Eigen::MatrixXd gram(nc, nc);
        for (int i = 0; i < nc; ++i)
            for (int j = 0; j < nc; ++j) {
                double g = 0.0;
                for (int q = 0; q < tri.size(); ++q)
                    g += tri.weights(q) * phi[i].col(q).dot(phi[j].col(q));
                gram(i, j) = g;
            }
        const Eigen::LLT<Eigen::MatrixXd> llt(gram);
        // psi = L^{-T} phi is orthonormal; moments transform the same way.
        Eigen::MatrixXd raw(nc, n);
        for (int j = 0; j < nc; ++j)
            for (int s = 0; s < ns; ++s) {
                double m0 = 0.0, m1 = 0.0;
                for (int q = 0; q < tri.size(); ++q) {
                    const double w = tri.weights(q) * st.value(s, q);
                    m0 += w * phi[j](0, q);
                    m1 += w * phi[j](1, q);
                }
                raw(j, 2 * s + 0) = m0;
                raw(j, 2 * s + 1) = m1;
            }
        const Eigen::MatrixXd ortho =
            llt.matrixL().solve(raw); // L^{-1} raw == rows of L^{-T} basis moments
        for (int j = 0; j < nc; ++j, ++row) V.row(row) = ortho.row(j);
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(V);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    elem.conditioning = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(elem.conditioning < 1e12))
        throw SingularElement("BDM DOF set is numerically singular at k=" + std::to_string(k) +
                              " (cond " + std::to_string(elem.conditioning) + ")");

    elem.vandermonde_ = V;
    elem.dual = V.partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
    return elem;
}

Eigen::VectorXd BdmElement::apply_dofs_modal(const Eigen::VectorXd& modal) const {
    return vandermonde_ * modal;
}

} // namespace hdgflow
