#include "topflow/solvers.hpp"

#include <umfpack.h>

#include <cctype>

#include "topflow/error.hpp"

namespace topflow {

namespace {

long parse_index_from_message(const std::string& msg) {
    // Eigen reports singular factorizations with the offending column in the
    // message text; extract the first integer if present.
    for (size_t i = 0; i < msg.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(msg[i]))) {
            size_t end = i;
            while (end < msg.size() && std::isdigit(static_cast<unsigned char>(msg[end]))) ++end;
            return std::stol(msg.substr(i, end - i));
        }
    }
    return -1;
}

void check_residual(const CsrMatrix& A, const Eigen::VectorXd& x, const Eigen::VectorXd& b,
                    double tol_abs, const char* what) {
    double res = (A.multiply(x) - b).norm();
    if (!(res <= tol_abs))
        throw SolverError(std::string(what) + ": residual " + std::to_string(res) +
                              " exceeds tolerance " + std::to_string(tol_abs),
                          {res});
}

}  // namespace

Eigen::VectorXd solve_spd(const CsrMatrix& A, const Eigen::VectorXd& b, double tol) {
    if (A.rows != A.cols || b.size() != A.rows) throw SolverError("solve_spd: dimension mismatch");
    SpdFactorization fact;
    fact.factorize(A);
    Eigen::VectorXd x = fact.solve(b);
    check_residual(A, x, b, tol * std::max(1e-300, b.norm()), "solve_spd");
    return x;
}

Eigen::VectorXd solve_saddle(const CsrMatrix& A, const Eigen::VectorXd& b) {
    if (A.rows != A.cols || b.size() != A.rows) throw SolverError("solve_saddle: dimension mismatch");
    Eigen::SparseMatrix<double> M = A.to_eigen();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) {
        std::string msg = lu.lastErrorMessage();
        throw SolverError("solve_saddle: singular factorization: " + msg, {},
                          parse_index_from_message(msg));
    }
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success) throw SolverError("solve_saddle: back-substitution failed");
    check_residual(A, x, b, 1e-10 * std::max(1.0, b.norm()), "solve_saddle");
    return x;
}

void SpdFactorization::factorize(const CsrMatrix& A) {
    Eigen::SparseMatrix<double> M = A.to_eigen();
    ldlt_.compute(M);
    if (ldlt_.info() != Eigen::Success)
        throw SolverError("SPD factorization failed (matrix not positive definite?)");
    ready_ = true;
}

Eigen::VectorXd SpdFactorization::solve(const Eigen::VectorXd& b) const {
    if (!ready_) throw SolverError("SpdFactorization::solve before factorize");
    Eigen::VectorXd x = ldlt_.solve(b);
    if (ldlt_.info() != Eigen::Success) throw SolverError("SPD back-substitution failed");
    return x;
}

LuFactorization::~LuFactorization() { release(); }

void LuFactorization::release() {
    if (numeric_) umfpack_di_free_numeric(&numeric_);
    if (symbolic_) umfpack_di_free_symbolic(&symbolic_);
    numeric_ = symbolic_ = nullptr;
}

void LuFactorization::factorize(const CsrMatrix& A) {
    if (A.rows != A.cols) throw SolverError("LuFactorization: matrix must be square");
    const bool same_pattern =
        symbolic_ && n_ == A.rows && ap_ == A.row_ptr && ai_ == A.col;
    if (!same_pattern) {
        if (symbolic_) umfpack_di_free_symbolic(&symbolic_);
        symbolic_ = nullptr;
        n_ = A.rows;
        ap_ = A.row_ptr;
        ai_ = A.col;
    }
    ax_ = A.val;

    if (!symbolic_) {
        int status = umfpack_di_symbolic(n_, n_, ap_.data(), ai_.data(), ax_.data(), &symbolic_,
                                         nullptr, nullptr);
        if (status != UMFPACK_OK)
            throw SolverError("LU symbolic analysis failed (status " + std::to_string(status) +
                              ")");
    }
    if (numeric_) umfpack_di_free_numeric(&numeric_);
    numeric_ = nullptr;
    int status = umfpack_di_numeric(ap_.data(), ai_.data(), ax_.data(), symbolic_, &numeric_,
                                    nullptr, nullptr);
    if (status != UMFPACK_OK)
        throw SolverError("LU factorization failed (singular or ill-conditioned matrix, status " +
                          std::to_string(status) + ")");
}

Eigen::VectorXd LuFactorization::solve(const Eigen::VectorXd& b) const {
    if (!numeric_) throw SolverError("LuFactorization::solve before factorize");
    if (b.size() != n_) throw SolverError("LuFactorization::solve: dimension mismatch");
    Eigen::VectorXd x(n_);
    // our arrays are the CSC form of A^T, so UMFPACK_Aat solves A x = b
    int status = umfpack_di_solve(UMFPACK_Aat, ap_.data(), ai_.data(), ax_.data(), x.data(),
                                  b.data(), numeric_, nullptr, nullptr);
    if (status != UMFPACK_OK) throw SolverError("LU back-substitution failed");
    return x;
}

Eigen::VectorXd LuFactorization::solve_transposed(const Eigen::VectorXd& b) const {
    if (!numeric_) throw SolverError("LuFactorization::solve before factorize");
    if (b.size() != n_) throw SolverError("LuFactorization::solve: dimension mismatch");
    Eigen::VectorXd x(n_);
    int status = umfpack_di_solve(UMFPACK_A, ap_.data(), ai_.data(), ax_.data(), x.data(),
                                  b.data(), numeric_, nullptr, nullptr);
    if (status != UMFPACK_OK) throw SolverError("LU back-substitution failed");
    return x;
}

Eigen::VectorXd LuFactorization::multiply(const Eigen::VectorXd& x) const {
    if (x.size() != n_) throw SolverError("LuFactorization::multiply: dimension mismatch");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
    for (int r = 0; r < n_; ++r) {
        double s = 0.0;
        for (int k = ap_[r]; k < ap_[r + 1]; ++k) s += ax_[k] * x[ai_[k]];
        y[r] = s;
    }
    return y;
}

Eigen::VectorXd LuFactorization::multiply_transposed(const Eigen::VectorXd& x) const {
    if (x.size() != n_) throw SolverError("LuFactorization::multiply: dimension mismatch");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
    for (int r = 0; r < n_; ++r)
        for (int k = ap_[r]; k < ap_[r + 1]; ++k) y[ai_[k]] += ax_[k] * x[r];
    return y;
}

}  // namespace topflow
