#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "topflow/sparse.hpp"

namespace topflow {

// Direct solve of a symmetric positive definite system to a relative residual
// tolerance. Throws SolverError on factorization failure or when the residual
// check fails.
Eigen::VectorXd solve_spd(const CsrMatrix& A, const Eigen::VectorXd& b, double tol = 1e-12);

// Sparse direct LU for general (saddle-point) systems; residual must satisfy
// |Ax-b| <= 1e-10 * max(1, |b|). Throws SolverError with the pivot index on a
// singular factorization when the backend reports one.
Eigen::VectorXd solve_saddle(const CsrMatrix& A, const Eigen::VectorXd& b);

// Reusable Cholesky factorization for solving many right-hand sides against
// one SPD matrix (the semi-implicit phase-field step matrix is constant).
class SpdFactorization {
public:
    void factorize(const CsrMatrix& A);
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

private:
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> ldlt_;
    bool ready_ = false;
};

// Reusable LU with a persistent symbolic analysis: repeated factorizations of
// matrices with identical sparsity (Newton iterations) skip the analysis.
// Backed by UMFPACK; one factorization serves both A x = b and A^T x = b,
// which lets the adjoint solve reuse the final Newton factorization.
class LuFactorization {
public:
    LuFactorization() = default;
    ~LuFactorization();
    LuFactorization(const LuFactorization&) = delete;
    LuFactorization& operator=(const LuFactorization&) = delete;

    void factorize(const CsrMatrix& A);
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::VectorXd solve_transposed(const Eigen::VectorXd& b) const;

    // products with the stored matrix, for residual checks
    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
    Eigen::VectorXd multiply_transposed(const Eigen::VectorXd& x) const;

private:
    void release();
    // CSR arrays of A handed to UMFPACK as the CSC form of A^T
    std::vector<int> ap_, ai_;
    std::vector<double> ax_;
    int n_ = 0;
    void* symbolic_ = nullptr;
    void* numeric_ = nullptr;
};

}  // namespace topflow
