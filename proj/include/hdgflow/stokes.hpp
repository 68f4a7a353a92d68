#pragma once

#include "hdgflow/analysis.hpp"
#include "hdgflow/linear_solver.hpp"

#include <memory>

namespace hdgflow {

enum class StokesVariant { B, PR };

/// Assembled saddle-point operator with boundary elimination data and the
/// optional mean-pressure constraint (added exactly when the mesh has no
/// outflow boundary, where the pressure is only determined up to L2_0).
struct SparseSystem {
    VelocityBlocks vel;
    const DofMap* pmap = nullptr;
    Eigen::SparseMatrix<double> A;
    Eigen::SparseMatrix<double> B;
    Eigen::VectorXd mean_vector;
    bool mean_constraint = false;
    std::vector<int> free_index; // velocity dof -> reduced index (-1 = eliminated)
    std::vector<int> free_list;
    double nu = 1.0;
    double lambda = 4.0;
    int k = 1;

    int n_free() const { return static_cast<int>(free_list.size()); }
    int reduced_size() const {
        return n_free() + pmap->total_dofs + (mean_constraint ? 1 : 0);
    }

    /// Reduced saddle matrix [[a_visc A + a_mass M, b_scale B_f^T],
    /// [B_f, 0]] (+ mean row/col). The continuity rows stay unscaled so
    /// the blocks remain balanced for small time steps.
    Eigen::SparseMatrix<double> compose(double a_visc = 1.0, double a_mass = 0.0,
                                        const Eigen::SparseMatrix<double>* mass = nullptr,
                                        double b_scale = 1.0) const;

    /// Reduced right-hand side for velocity load `load` and Dirichlet
    /// values `g` (full velocity length, zero at free DOFs).
    Eigen::VectorXd reduce_rhs(const Eigen::VectorXd& load, const Eigen::VectorXd& g,
                               double a_visc = 1.0, double a_mass = 0.0,
                               const Eigen::SparseMatrix<double>* mass = nullptr) const;

    /// Expands a reduced solution into full velocity/pressure vectors.
    void expand(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                Eigen::VectorXd& velocity, Eigen::VectorXd& pressure) const;

    void dump_matrix_market(const std::string& path) const;
};

SparseSystem build_sparse_system(const Mesh& mesh, const VelocityBlocks& vel,
                                 const DofMap& pmap, double nu, double lambda);

struct StokesProblem {
    const Mesh* mesh = nullptr;
    int k = 2;
    double nu = 1.0;
    double lambda = 4.0;
    SpaceKind velocity_kind = SpaceKind::WRelaxed;
    StokesVariant variant = StokesVariant::B;
    VectorField forcing;   // nullptr-like (empty) means zero
    VectorField dirichlet; // data on essential boundaries; empty means zero
};

struct SolverStats {
    double residual = 0.0;
    int dimension = 0;
    bool dense_fallback = false;
};

struct StokesSolution {
    std::shared_ptr<DofMap> wmap, fmap, pmap;
    FeFunction velocity; // W part
    FeFunction facet;    // tangential facet part
    FeFunction pressure;
    double divergence_residual = 0.0; // ||B u||_inf
    SolverStats stats;
};

StokesSolution solve_stokes(const StokesProblem& problem);

} // namespace hdgflow
