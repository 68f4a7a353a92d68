#pragma once

#include "hdgflow/spaces.hpp"

#include <Eigen/Sparse>

namespace hdgflow {

/// Divergence-restoring reconstruction R_W : W_relaxed -> W_conf.
///
/// Facet-normal moments of degree < k are copied (both spaces share them),
/// the degree-k moment is averaged between the two sides, interior moments
/// are copied, and the per-element complement DOFs are chosen by
/// least-squares minimization of the L2 distance to the input subject to
/// the fixed DOFs. On weakly incompressible inputs the output is pointwise
/// divergence free.
class ReconstructionOp {
public:
    ReconstructionOp(const DofMap& relaxed, const DofMap& conf);

    const DofMap& source() const { return *source_; }
    const DofMap& target() const { return *target_; }

    /// conf coefficients = matrix * relaxed coefficients.
    const Eigen::SparseMatrix<double>& matrix() const { return op_; }

    FeFunction apply(const FeFunction& u) const;

    /// Adjoint in coefficient space: relaxed-sized vector from a
    /// conf-sized functional vector (used for pressure-robust right-hand
    /// sides and reconstructed test functions).
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& conf_functional) const;

    /// Natural inclusion W_conf -> W_relaxed (both top slots take the
    /// shared value). R composed with this embedding is the identity.
    Eigen::VectorXd embed(const Eigen::VectorXd& conf_coeffs) const;

private:
    const DofMap* source_;
    const DofMap* target_;
    Eigen::SparseMatrix<double> op_;
    Eigen::SparseMatrix<double> embed_;
};

/// Composite reconstruction R_U (u_T, u_F) = (R_W u_T, u_F): the facet
/// component is returned unchanged.
struct CompositeFunction {
    FeFunction element; // W space
    FeFunction facet;   // Facet space
};
CompositeFunction reconstruct_composite(const ReconstructionOp& op,
                                        const CompositeFunction& u);

} // namespace hdgflow
