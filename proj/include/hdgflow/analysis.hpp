#pragma once

#include "hdgflow/assembly.hpp"

#include <functional>

namespace hdgflow {

using MatrixField = std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>;

/// Error norms of a discrete velocity/pressure pair against smooth
/// reference fields. The triple norm augments the broken H1 seminorm by
/// the k^2/h-weighted projected tangential jumps.
struct ErrorReport {
    double l2_u = 0.0;
    double h1_u = 0.0;     // broken H1 seminorm
    double triple_u = 0.0; // |||u - u_h|||_1
    double l2_p = 0.0;
    int k = 0;
    double h = 0.0;
    int ndofs = 0;
};

ErrorReport compute_errors(const VectorField& u_exact, const MatrixField& grad_u_exact,
                           const ScalarField& p_exact, const FeFunction& velocity,
                           const FeFunction& facet, const FeFunction* pressure,
                           int overquad = 4);

/// Discrete H1-like triple norm of a composite velocity (element part +
/// facet part), eq-norm of the stability measurements.
double triple_norm(const FeFunction& velocity, const FeFunction& facet);

/// Max |div u_T| over all element quadrature points.
double max_pointwise_divergence(const FeFunction& velocity, int quad_degree = -1);

/// Max |[[u . n]]| over all interior (and periodic) facet quadrature points.
double max_normal_jump(const FeFunction& velocity, int quad_degree = -1);

/// 1/2 ||u_T||^2 by quadrature.
double kinetic_energy(const FeFunction& velocity);
double l2_norm(const FeFunction& velocity);

/// Discrete estimates of the inf-sup and coercivity constants via dense
/// eigensolves in the triple-norm geometry.
struct InfSupReport {
    double c_lbb = 0.0;
    double c_co = 0.0;
    int k = 0;
    double h = 0.0;
    int n_velocity_free = 0;
    int n_pressure = 0;
};

InfSupReport estimate_infsup(const Mesh& mesh, int k, double nu = 1.0, double lambda = 4.0,
                             SpaceKind velocity_kind = SpaceKind::WRelaxed);

/// Surface-traction force on the body enclosed by the facets carrying
/// `tag` (optionally filtered by midpoint): int (nu du/dn - p n) . e with
/// n the body's outward normal (pointing into the fluid). Returns the raw
/// (x, y) force integrals.
std::pair<double, double> drag_lift(const FeFunction& velocity, const FeFunction& pressure,
                                    double nu, BoundaryTag tag,
                                    const std::function<bool(const Eigen::Vector2d&)>& filter = {});

} // namespace hdgflow
