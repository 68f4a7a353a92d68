#include "hdgflow/basis.hpp"
#include "hdgflow/quadrature.hpp"

#include "doctest.h"

#include <cmath>

using namespace hdgflow;

namespace {

double integrate_interval(const QuadratureRule& rule, double (*f)(double)) {
    double s = 0.0;
    for (int q = 0; q < rule.size(); ++q) s += rule.weights(q) * f(rule.points(q, 0));
    return s;
}

} // namespace

TEST_CASE("gauss_rule: midpoint, cubic and degree-9 moments") {
    const QuadratureRule g1 = gauss_rule(1);
    CHECK(g1.size() == 1);
    CHECK(g1.points(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g1.weights(0) == doctest::Approx(1.0).epsilon(1e-15));

    const QuadratureRule g2 = gauss_rule(2);
    CHECK(integrate_interval(g2, [](double t) { return t * t * t; }) ==
          doctest::Approx(0.25).epsilon(1e-14));

    const QuadratureRule g5 = gauss_rule(5);
    CHECK(std::abs(integrate_interval(g5, [](double t) { return std::pow(t, 9); }) - 0.1) <
          1e-15);
}

TEST_CASE("triangle_rule: analytic moments and measure") {
    for (int degree : {0, 1, 2, 4, 8, 14}) {
        const QuadratureRule rule = triangle_rule(degree);
        CHECK(rule.exact_degree >= degree);
        CHECK(rule.weights.sum() == doctest::Approx(0.5).epsilon(1e-14));
    }
    const QuadratureRule r1 = triangle_rule(1);
    double m = 0.0;
    for (int q = 0; q < r1.size(); ++q)
        m += r1.weights(q) * (r1.points(q, 0) + r1.points(q, 1));
    CHECK(m == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    const QuadratureRule r4 = triangle_rule(4);
    double m22 = 0.0;
    for (int q = 0; q < r4.size(); ++q)
        m22 += r4.weights(q) * r4.points(q, 0) * r4.points(q, 0) * r4.points(q, 1) *
               r4.points(q, 1);
    CHECK(std::abs(m22 - 1.0 / 180.0) < 1e-14);
}

TEST_CASE("dubiner basis: normalization, orthonormality, gradients") {
    const ScalarBasis b0 = dubiner_basis(0);
    Eigen::MatrixXd pt(1, 2);
    pt << 0.25, 0.3;
    CHECK(b0.tabulate(pt).value(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

    for (int k : {2, 6, 10}) {
        const ScalarBasis b = dubiner_basis(k);
        const QuadratureRule rule = triangle_rule(2 * k + 2);
        const BasisTable tab = b.tabulate(rule.points);
        const Eigen::MatrixXd gram =
            tab.value * rule.weights.asDiagonal() * tab.value.transpose();
        CHECK((gram - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff() <
              1e-12);
    }

    // Central finite differences against the recurrence gradients.
    const ScalarBasis b = dubiner_basis(6);
    const double h = 1e-6;
    Eigen::MatrixXd p0(1, 2), pxp(1, 2), pxm(1, 2), pyp(1, 2), pym(1, 2);
    p0 << 0.31, 0.41;
    pxp << 0.31 + h, 0.41;
    pxm << 0.31 - h, 0.41;
    pyp << 0.31, 0.41 + h;
    pym << 0.31, 0.41 - h;
    const BasisTable t0 = b.tabulate(p0);
    const BasisTable txp = b.tabulate(pxp), txm = b.tabulate(pxm);
    const BasisTable typ = b.tabulate(pyp), tym = b.tabulate(pym);
    for (int i = 0; i < b.size(); ++i) {
        CHECK(std::abs((txp.value(i, 0) - txm.value(i, 0)) / (2 * h) - t0.dx(i, 0)) < 1e-7);
        CHECK(std::abs((typ.value(i, 0) - tym.value(i, 0)) / (2 * h) - t0.dy(i, 0)) < 1e-7);
    }
}

TEST_CASE("legendre facet basis: first modes and orthonormality") {
    const ScalarBasis b = legendre_facet_basis(5);
    Eigen::MatrixXd pt(1, 1);
    pt << 0.75;
    const BasisTable tab = b.tabulate(pt);
    CHECK(tab.value(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(tab.value(1, 0) == doctest::Approx(std::sqrt(3.0) * (2 * 0.75 - 1)).epsilon(1e-14));

    const QuadratureRule rule = gauss_rule(8);
    const BasisTable t = b.tabulate(rule.points);
    const Eigen::MatrixXd gram = t.value * rule.weights.asDiagonal() * t.value.transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-13);
}
