#pragma once

#include <Eigen/Dense>

namespace hdgflow {

/// Tabulated values (and first derivatives) of a polynomial basis at a
/// fixed set of points. Layout: one row per basis function, one column
/// per point.
struct BasisTable {
    Eigen::MatrixXd value;
    Eigen::MatrixXd dx;
    Eigen::MatrixXd dy; // unused (empty) for interval bases
};

/// L2-orthonormal scalar basis on a reference domain: shifted Legendre
/// polynomials on [0,1] or the Dubiner basis on the unit triangle.
struct ScalarBasis {
    enum class Domain { Interval, Triangle };

    Domain domain = Domain::Triangle;
    int order = 0;
    bool orthonormal = true;

    int size() const {
        return domain == Domain::Interval ? order + 1
                                          : (order + 1) * (order + 2) / 2;
    }

    /// points: n x 1 for interval, n x 2 for triangle.
    BasisTable tabulate(const Eigen::MatrixXd& points) const;
};

/// Orthonormal Dubiner basis of total degree <= k on the reference
/// triangle {x,y >= 0, x+y <= 1}. Functions are ordered by total degree.
ScalarBasis dubiner_basis(int k);

/// Shifted Legendre polynomials of degree <= k, orthonormal on [0,1].
ScalarBasis legendre_facet_basis(int k);

/// Index of the Dubiner function with collapsed indices (a,b), a+b <= k.
inline int dubiner_index(int a, int b) {
    const int d = a + b;
    return d * (d + 1) / 2 + a;
}

} // namespace hdgflow
