#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

namespace topflow {

// Execution policy for element loops. Both policies run the same element
// kernels and scatter in the same fixed element order, so results are
// bit-identical; `serial` is the reference path kept for testing and
// benchmarking against the OpenMP path.
enum class Exec { serial, parallel };

struct Triplet {
    int row, col;
    double value;
};

// Compressed-row sparse matrix. Structural entries are retained even when
// their value is zero; rows hold strictly increasing column indices.
struct CsrMatrix {
    int rows = 0, cols = 0;
    std::vector<int> row_ptr;  // size rows+1
    std::vector<int> col;
    std::vector<double> val;

    static CsrMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& entries);

    int nnz() const { return static_cast<int>(col.size()); }
    double value_at(int r, int c) const;  // 0 when (r,c) is not structural
    // index into val for structural (r,c), -1 otherwise
    int find(int r, int c) const;

    Eigen::VectorXd multiply(const Eigen::VectorXd& x, Exec exec = Exec::parallel) const;

    void zero_row(int r);
    void set_value(int r, int c, double v);  // entry must be structural

    Eigen::SparseMatrix<double> to_eigen() const;
};

// Element-loop assembler with a fixed sparsity pattern. The pattern and the
// per-element scatter indices are built once; numeric assembly computes the
// per-element dense blocks (optionally in parallel) into a buffer and then
// accumulates them serially in element order, which keeps results independent
// of the thread count.
class FormAssembler {
public:
    // row_dofs: nelem*ldr indices, col_dofs: nelem*ldc indices
    FormAssembler(int rows, int cols, int nelem, int ldr, int ldc, std::vector<int> row_dofs,
                  std::vector<int> col_dofs);

    // Kernel signature: void(int e, double* mat /*ldr*ldc row-major*/, double* rhs /*ldr or null*/)
    template <class Kernel>
    void assemble(Exec exec, Kernel&& kernel, CsrMatrix& out, Eigen::VectorXd* rhs = nullptr) {
        out = structure_;  // copies the pattern, values zeroed below
        std::fill(out.val.begin(), out.val.end(), 0.0);
        if (rhs) rhs->setZero(structure_.rows);
        const int block = ldr_ * ldc_;
        mat_buffer_.assign(static_cast<size_t>(nelem_) * block, 0.0);
        rhs_buffer_.assign(rhs ? static_cast<size_t>(nelem_) * ldr_ : 0, 0.0);

        if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
            for (int e = 0; e < nelem_; ++e)
                kernel(e, &mat_buffer_[static_cast<size_t>(e) * block],
                       rhs ? &rhs_buffer_[static_cast<size_t>(e) * ldr_] : nullptr);
        } else {
            for (int e = 0; e < nelem_; ++e)
                kernel(e, &mat_buffer_[static_cast<size_t>(e) * block],
                       rhs ? &rhs_buffer_[static_cast<size_t>(e) * ldr_] : nullptr);
        }

        for (int e = 0; e < nelem_; ++e) {
            const double* local = &mat_buffer_[static_cast<size_t>(e) * block];
            const int32_t* sc = &scatter_[static_cast<size_t>(e) * block];
            for (int k = 0; k < block; ++k) out.val[sc[k]] += local[k];
            if (rhs) {
                const double* lr = &rhs_buffer_[static_cast<size_t>(e) * ldr_];
                const int* rd = &row_dofs_[static_cast<size_t>(e) * ldr_];
                for (int k = 0; k < ldr_; ++k) (*rhs)[rd[k]] += lr[k];
            }
        }
    }

    // Right-hand-side-only assembly with the same deterministic scatter.
    // Kernel signature: void(int e, double* rhs /*ldr*/)
    template <class Kernel>
    void assemble_rhs(Exec exec, Kernel&& kernel, Eigen::VectorXd& rhs) {
        rhs.setZero(structure_.rows);
        rhs_buffer_.assign(static_cast<size_t>(nelem_) * ldr_, 0.0);
        if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
            for (int e = 0; e < nelem_; ++e)
                kernel(e, &rhs_buffer_[static_cast<size_t>(e) * ldr_]);
        } else {
            for (int e = 0; e < nelem_; ++e)
                kernel(e, &rhs_buffer_[static_cast<size_t>(e) * ldr_]);
        }
        for (int e = 0; e < nelem_; ++e) {
            const double* lr = &rhs_buffer_[static_cast<size_t>(e) * ldr_];
            const int* rd = &row_dofs_[static_cast<size_t>(e) * ldr_];
            for (int k = 0; k < ldr_; ++k) rhs[rd[k]] += lr[k];
        }
    }

    const CsrMatrix& structure() const { return structure_; }
    int nelem() const { return nelem_; }

private:
    int nelem_, ldr_, ldc_;
    std::vector<int> row_dofs_, col_dofs_;
    CsrMatrix structure_;
    std::vector<int32_t> scatter_;
    std::vector<double> mat_buffer_, rhs_buffer_;
};

// Sum of per-element values accumulated in fixed element order (deterministic
// under both execution policies).
template <class Fn>
double deterministic_element_sum(int nelem, Exec exec, Fn&& per_element) {
    std::vector<double> partial(nelem);
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int e = 0; e < nelem; ++e) partial[e] = per_element(e);
    } else {
        for (int e = 0; e < nelem; ++e) partial[e] = per_element(e);
    }
    double sum = 0.0;
    for (int e = 0; e < nelem; ++e) sum += partial[e];
    return sum;
}

}  // namespace topflow
