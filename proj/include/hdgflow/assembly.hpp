#pragma once

#include "hdgflow/reconstruction.hpp"
#include "hdgflow/spaces.hpp"

#include <Eigen/Sparse>

#include <optional>

namespace hdgflow {

/// Velocity unknowns are blocked [W dofs | facet dofs]; pressure is a
/// separate block. All assembled operators are immutable once returned.
struct VelocityBlocks {
    const DofMap* wmap = nullptr;
    const DofMap* fmap = nullptr;
    int n_w = 0;
    int n_f = 0;
    int size() const { return n_w + n_f; }
    int facet_offset(int facet_dof) const { return n_w + facet_dof; }
};

VelocityBlocks velocity_blocks(const DofMap& wmap, const DofMap& fmap);

struct ViscosityOptions {
    double nu = 1.0;
    double lambda = 4.0;
    bool consistency_terms = true; // the two mixed normal-derivative terms
    bool scale_penalty_by_nu_lambda = true; // penalty nu*lambda*k^2/h vs k^2/h
};

/// Bilinear form of the viscous operator: element gradients, the two
/// consistency terms and the projected tangential-jump penalty with
/// element-sided weights k^2/h_T. With consistency off and plain k^2/h
/// weights this assembles the Gram matrix of the discrete H1-like norm.
Eigen::SparseMatrix<double> assemble_viscosity(const Mesh& mesh, const VelocityBlocks& vel,
                                               const ViscosityOptions& opts);

/// Divergence coupling -(p, div u_T); facet columns are exactly zero.
Eigen::SparseMatrix<double> assemble_divergence(const Mesh& mesh, const VelocityBlocks& vel,
                                                const DofMap& pmap);

/// L2 mass of the element velocity part; facet rows/columns are zero.
Eigen::SparseMatrix<double> assemble_mass(const Mesh& mesh, const VelocityBlocks& vel);

/// Pressure mass matrix (block diagonal det(J_T) I).
Eigen::SparseMatrix<double> assemble_pressure_mass(const Mesh& mesh, const DofMap& pmap);

/// Integral of each pressure basis function (the mean-constraint row).
Eigen::VectorXd assemble_mean_vector(const Mesh& mesh, const DofMap& pmap);

/// Load functional <f, v_T> over the velocity block.
struct RhsFunctional {
    Eigen::VectorXd vector;
    std::string variant; // "plain" or "reconstructed"
};
RhsFunctional assemble_rhs(const Mesh& mesh, const VelocityBlocks& vel, const VectorField& f,
                           int extra_degree = 4);

/// Pressure-robust load <f, R_U v>: the plain functional on the
/// conforming space pulled back through the reconstruction adjoint.
RhsFunctional assemble_rhs_reconstructed(const Mesh& mesh, const VelocityBlocks& vel,
                                         const ReconstructionOp& rec, const VectorField& f,
                                         int extra_degree = 4);

struct ConvectionOptions {
    /// Boundary data used for the upwind trace on inflow parts of
    /// essential boundaries; nullptr means zero.
    const VectorField* boundary_data = nullptr;
    double boundary_scale = 1.0; // ramp factor multiplying the data
    /// Accept a relaxed advective field by averaging its two normal
    /// traces (needed for the plain semi-discretization).
    bool allow_average_normal = false;
    double normal_jump_tol = 1e-10;
};

/// Upwind convection residual r_i = C(w; u, phi_i) over the test space
/// `test` (facet test functions receive zero). `w` must have a
/// single-valued normal trace unless averaging is allowed.
Eigen::VectorXd apply_convection(const FeFunction& w, const FeFunction& u,
                                 const VelocityBlocks& test,
                                 const ConvectionOptions& opts = {});

/// Max absolute degree-k normal-moment jump of a W_relaxed function
/// (zero for conforming maps).
double max_top_normal_jump(const FeFunction& u);

} // namespace hdgflow
