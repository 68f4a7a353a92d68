#pragma once

#include "hdgflow/basis.hpp"
#include "hdgflow/quadrature.hpp"

#include <array>
#include <vector>

namespace hdgflow {

/// Reference triangle facet geometry shared by the element construction
/// and the global orientation logic. Facet f runs from local vertex f to
/// local vertex (f+1) mod 3 of {(0,0),(1,0),(0,1)}.
struct RefFacet {
    Eigen::Vector2d start;
    Eigen::Vector2d dir;    // end - start (not normalized)
    Eigen::Vector2d normal; // unit outward
    double length;
};
const std::array<RefFacet, 3>& reference_facets();

/// Degree-of-freedom descriptor of the BDM_k element.
struct BdmDof {
    enum class Kind { FacetNormal, InteriorMoment, Complement };
    Kind kind = Kind::FacetNormal;
    int facet = -1;  // FacetNormal: local facet
    int degree = 0;  // FacetNormal: Legendre mode; otherwise running index
};

/// BDM_k element on the reference triangle: the full vector polynomial
/// space [P^k]^2 with facet-normal moment DOFs (Legendre modes 0..k per
/// facet), interior moments against [P^{k-2}]^2 and a curl-bubble
/// complement of dimension k-1. `dual` maps DOF values to modal (Dubiner
/// per component) coefficients: column j holds the modal expansion of the
/// j-th dual basis function.
struct BdmElement {
    int order = 1;
    std::vector<BdmDof> dofs;
    Eigen::MatrixXd dual;        // size x size
    double conditioning = 0.0;   // Vandermonde 2-norm condition estimate

    int size() const { return (order + 1) * (order + 2); }
    int scalar_size() const { return (order + 1) * (order + 2) / 2; }
    int num_facet_dofs() const { return 3 * (order + 1); }

    /// Local index of the facet-normal DOF (facet f, mode d).
    int facet_dof(int f, int d) const { return f * (order + 1) + d; }

    /// Applies all DOF functionals to an arbitrary vector field sampled
    /// through the provided callables (used for interpolation).
    /// Facet integrals use `facet_trace(f, t)`; interior integrals use
    /// `volume(x, y)`. Quadrature degrees are chosen by `extra_degree`.
    template <class FacetTrace, class Volume>
    Eigen::VectorXd apply_dofs(FacetTrace&& facet_trace, Volume&& volume,
                               int extra_degree = 0) const;

    /// DOF functionals applied to a field given by modal coefficients.
    Eigen::VectorXd apply_dofs_modal(const Eigen::VectorXd& modal) const;

    /// Vandermonde matrix (DOF x modal), exposed for tests.
    const Eigen::MatrixXd& vandermonde() const { return vandermonde_; }

    Eigen::MatrixXd vandermonde_;
};

/// Builds the BDM_k element (k >= 1). Throws SingularElement if the DOF
/// set fails to be unisolvent within conditioning 1e12.
BdmElement build_bdm_element(int k);

template <class FacetTrace, class Volume>
Eigen::VectorXd BdmElement::apply_dofs(FacetTrace&& facet_trace, Volume&& volume,
                                       int extra_degree) const {
    const int k = order;
    Eigen::VectorXd values = Eigen::VectorXd::Zero(size());

    const QuadratureRule line = gauss_rule(k + 1 + (extra_degree + 1) / 2);
    const BasisTable leg = legendre_facet_basis(k).tabulate(line.points);
    for (int f = 0; f < 3; ++f) {
        const RefFacet& rf = reference_facets()[f];
        for (int q = 0; q < line.size(); ++q) {
            const double t = line.points(q, 0);
            const double vn = facet_trace(f, t).dot(rf.normal);
            for (int d = 0; d <= k; ++d)
                values(facet_dof(f, d)) += line.weights(q) * leg.value(d, q) * vn;
        }
    }

    // Interior and complement rows: the Vandermonde row holds the modal
    // expansion of the test function, so evaluate it directly.
    if (size() > num_facet_dofs()) {
        const QuadratureRule tri = triangle_rule(2 * k + 2 + extra_degree);
        const BasisTable st = dubiner_basis(k).tabulate(tri.points);
        for (int q = 0; q < tri.size(); ++q) {
            const Eigen::Vector2d v = volume(tri.points(q, 0), tri.points(q, 1));
            for (int m = num_facet_dofs(); m < size(); ++m) {
                double tx = 0.0, ty = 0.0;
                for (int s = 0; s < scalar_size(); ++s) {
                    tx += vandermonde_(m, 2 * s + 0) * st.value(s, q);
                    ty += vandermonde_(m, 2 * s + 1) * st.value(s, q);
                }
                values(m) += tri.weights(q) * (v.x() * tx + v.y() * ty);
            }
        }
    }
    return values;
}

/// Cubic bubble b = x y (1-x-y) and its gradient.
inline double bubble(double x, double y) { return x * y * (1.0 - x - y); }
inline Eigen::Vector2d bubble_grad(double x, double y) {
    return {y * (1.0 - 2.0 * x - y), x * (1.0 - x - 2.0 * y)};
}

} // namespace hdgflow
