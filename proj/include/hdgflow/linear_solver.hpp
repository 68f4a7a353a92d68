#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <memory>

namespace hdgflow {

/// Direct linear backend: sparse LU with fill-reducing (COLAMD) ordering,
/// with a dense LU fallback below dimension 5e4 if the sparse
/// factorization breaks down. Solves are residual-checked against a
/// relative tolerance of 1e-10.
class LinearSolver {
public:
    explicit LinearSolver(Eigen::SparseMatrix<double> matrix);

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

    int dimension() const { return static_cast<int>(matrix_.rows()); }
    bool used_dense_fallback() const { return dense_ != nullptr; }

    static constexpr double kResidualTol = 1e-10;
    static constexpr int kDenseLimit = 50000;

private:
    Eigen::SparseMatrix<double> matrix_;
    Eigen::SparseMatrix<double> scaled_;
    Eigen::VectorXd scale_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> sparse_;
    mutable std::unique_ptr<Eigen::FullPivLU<Eigen::MatrixXd>> dense_;
};

} // namespace hdgflow
