#pragma once

#include <Eigen/Dense>

namespace hdgflow {

/// Quadrature rule on a reference domain: the unit interval [0,1]
/// (points is n x 1) or the unit triangle {x,y >= 0, x+y <= 1}
/// (points is n x 2). Weights carry the reference measure, so they sum
/// to 1 on the interval and to 1/2 on the triangle.
struct QuadratureRule {
    Eigen::MatrixXd points;
    Eigen::VectorXd weights;
    int exact_degree = 0;

    int size() const { return static_cast<int>(weights.size()); }
};

/// Gauss-Legendre rule with n points on [0,1]; exact for degree 2n-1.
QuadratureRule gauss_rule(int n);

/// Rule on the reference triangle exact at least for the given total
/// degree, built as a Duffy-transformed tensor Gauss rule.
QuadratureRule triangle_rule(int degree);

} // namespace hdgflow
