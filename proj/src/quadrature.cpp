#include "hdgflow/quadrature.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace hdgflow {

namespace {

// Legendre P_n(x) and derivative on [-1,1] by the three-term recurrence.
void legendre_value_deriv(int n, double x, double& p, double& dp) {
    double p0 = 1.0, p1 = x;
    if (n == 0) {
        p = 1.0;
        dp = 0.0;
        return;
    }
    for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
    }
    p = p1;
    // (1-x^2) P_n' = n (P_{n-1} - x P_n)
    dp = n * (p0 - x * p1) / (1.0 - x * x);
}

} // namespace

QuadratureRule gauss_rule(int n) {
    if (n < 1) throw std::invalid_argument("gauss_rule: n >= 1 required");
    QuadratureRule rule;
    rule.points.resize(n, 1);
    rule.weights.resize(n);
    rule.exact_degree = 2 * n - 1;
    for (int i = 0; i < n; ++i) {
        // Chebyshev initial guess, Newton refinement on [-1,1].
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p = 0.0, dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            legendre_value_deriv(n, x, p, dp);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        legendre_value_deriv(n, x, p, dp);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1,1] -> [0,1]; Gauss nodes come out descending in x.
        rule.points(n - 1 - i, 0) = 0.5 * (x + 1.0);
        rule.weights(n - 1 - i) = 0.5 * w;
    }
    return rule;
}

QuadratureRule triangle_rule(int degree) {
    if (degree < 0) throw std::invalid_argument("triangle_rule: degree >= 0 required");
    // Duffy map (u,v) in [0,1]^2 -> (x,y) = (u(1-v), v) with Jacobian (1-v).
    // Plain Gauss in v absorbs the extra (1-v) factor at the cost of one
    // point, which keeps the construction weight-free.
    const int n = (degree + 2 + 1) / 2; // ceil((degree+2)/2)
    const QuadratureRule g = gauss_rule(n);
    QuadratureRule rule;
    rule.points.resize(n * n, 2);
    rule.weights.resize(n * n);
    rule.exact_degree = 2 * n - 2;
    int q = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j, ++q) {
            const double u = g.points(i, 0);
            const double v = g.points(j, 0);
            rule.points(q, 0) = u * (1.0 - v);
            rule.points(q, 1) = v;
            rule.weights(q) = g.weights(i) * g.weights(j) * (1.0 - v);
        }
    }
    return rule;
}

} // namespace hdgflow
