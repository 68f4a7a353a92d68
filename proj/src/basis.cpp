#include "hdgflow/basis.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hdgflow {

namespace {

// Shifted Legendre l_d(t) = sqrt(2d+1) P_d(2t-1) and d/dt, all degrees 0..k
// at one point.
void legendre_column(int k, double t, Eigen::Ref<Eigen::VectorXd> val,
                     Eigen::Ref<Eigen::VectorXd> der) {
    const double x = 2.0 * t - 1.0;
    double p0 = 1.0, p1 = x, d0 = 0.0, d1 = 1.0;
    for (int d = 0; d <= k; ++d) {
        double p, dp;
        if (d == 0) {
            p = p0;
            dp = d0;
        } else if (d == 1) {
            p = p1;
            dp = d1;
        } else {
            p = ((2.0 * d - 1.0) * x * p1 - (d - 1.0) * p0) / d;
            dp = ((2.0 * d - 1.0) * (p1 + x * d1) - (d - 1.0) * d0) / d;
            p0 = p1;
            p1 = p;
            d0 = d1;
            d1 = dp;
        }
        const double c = std::sqrt(2.0 * d + 1.0);
        val(d) = c * p;
        der(d) = c * dp * 2.0; // chain rule t -> 2t-1
    }
}

// Scaled Legendre S_a(u,w) = P_a(u/w) w^a, a polynomial in (u,w), with
// partial derivatives. Recurrence:
//   S_{a+1} = ((2a+1) u S_a - a w^2 S_{a-1}) / (a+1)
struct ScaledLegendre {
    std::vector<double> s, su, sw;
    ScaledLegendre(int kmax, double u, double w)
        : s(kmax + 1), su(kmax + 1), sw(kmax + 1) {
        s[0] = 1.0;
        su[0] = sw[0] = 0.0;
        if (kmax >= 1) {
            s[1] = u;
            su[1] = 1.0;
            sw[1] = 0.0;
        }
        for (int a = 1; a < kmax; ++a) {
            const double c1 = (2.0 * a + 1.0) / (a + 1.0);
            const double c2 = static_cast<double>(a) / (a + 1.0);
            s[a + 1] = c1 * u * s[a] - c2 * w * w * s[a - 1];
            su[a + 1] = c1 * (s[a] + u * su[a]) - c2 * w * w * su[a - 1];
            sw[a + 1] = c1 * u * sw[a] - c2 * (2.0 * w * s[a - 1] + w * w * sw[a - 1]);
        }
    }
};

// Jacobi P_b^{(alpha,0)}(x) with derivative, b = 0..bmax, at one point.
struct JacobiColumn {
    std::vector<double> p, dp;
    JacobiColumn(int bmax, double alpha, double x) : p(bmax + 1), dp(bmax + 1) {
        p[0] = 1.0;
        dp[0] = 0.0;
        if (bmax >= 1) {
            p[1] = 0.5 * ((alpha + 2.0) * x + alpha);
            dp[1] = 0.5 * (alpha + 2.0);
        }
        for (int n = 2; n <= bmax; ++n) {
            const double a2 = 2.0 * n + alpha;
            const double c0 = 2.0 * n * (n + alpha) * (a2 - 2.0);
            const double c1 = (a2 - 1.0) * (a2 * (a2 - 2.0));
            const double c2 = (a2 - 1.0) * alpha * alpha;
            const double c3 = 2.0 * (n + alpha - 1.0) * (n - 1.0) * a2;
            p[n] = ((c1 * x + c2) * p[n - 1] - c3 * p[n - 2]) / c0;
            dp[n] = (c1 * p[n - 1] + (c1 * x + c2) * dp[n - 1] - c3 * dp[n - 2]) / c0;
        }
    }
};

} // namespace

BasisTable ScalarBasis::tabulate(const Eigen::MatrixXd& points) const {
    BasisTable table;
    const int npts = static_cast<int>(points.rows());
    const int n = size();
    table.value.resize(n, npts);
    table.dx.resize(n, npts);

    if (domain == Domain::Interval) {
        Eigen::VectorXd v(n), d(n);
        for (int q = 0; q < npts; ++q) {
            legendre_column(order, points(q, 0), v, d);
            table.value.col(q) = v;
            table.dx.col(q) = d;
        }
        return table;
    }

    table.dy.resize(n, npts);
    for (int q = 0; q < npts; ++q) {
        const double x = points(q, 0);
        const double y = points(q, 1);
        // Collapsed coordinates: xi = u/w with u = 2x+y-1, w = 1-y, and
        // eta = 2y-1. S_a keeps the w^a factor so nothing is singular
        // at the collapsed vertex.
        const double u = 2.0 * x + y - 1.0;
        const double w = 1.0 - y;
        const ScaledLegendre S(order, u, w);
        for (int a = 0; a <= order; ++a) {
            const JacobiColumn J(order - a, 2.0 * a + 1.0, 2.0 * y - 1.0);
            for (int b = 0; a + b <= order; ++b) {
                const double c = std::sqrt(2.0 * (2.0 * a + 1.0) * (a + b + 1.0));
                const int i = dubiner_index(a, b);
                const double sa = S.s[a];
                // u_x = 2, u_y = 1, w_y = -1, eta_y = 2
                const double sa_x = 2.0 * S.su[a];
                const double sa_y = S.su[a] - S.sw[a];
                table.value(i, q) = c * sa * J.p[b];
                table.dx(i, q) = c * sa_x * J.p[b];
                table.dy(i, q) = c * (sa_y * J.p[b] + sa * 2.0 * J.dp[b]);
            }
        }
    }
    return table;
}

ScalarBasis dubiner_basis(int k) {
    if (k < 0) throw std::invalid_argument("dubiner_basis: k >= 0 required");
    return ScalarBasis{ScalarBasis::Domain::Triangle, k, true};
}

ScalarBasis legendre_facet_basis(int k) {
    if (k < 0) throw std::invalid_argument("legendre_facet_basis: k >= 0 required");
    return ScalarBasis{ScalarBasis::Domain::Interval, k, true};
}

} // namespace hdgflow
