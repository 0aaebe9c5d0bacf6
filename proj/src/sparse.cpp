#include "topflow/sparse.hpp"

#include <algorithm>
#include <cstring>

#include "topflow/error.hpp"

namespace topflow {

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, const std::vector<Triplet>& entries) {
    for (const auto& t : entries)
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
            throw Error("triplet index out of range");

    std::vector<size_t> order(entries.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (entries[a].row != entries[b].row) return entries[a].row < entries[b].row;
        if (entries[a].col != entries[b].col) return entries[a].col < entries[b].col;
        return a < b;  // stable within duplicates
    });

    CsrMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_ptr.assign(rows + 1, 0);
    int prev_row = -1, prev_col = -1;
    for (size_t i : order) {
        const auto& t = entries[i];
        if (t.row == prev_row && t.col == prev_col) {
            m.val.back() += t.value;  // duplicates merge
            continue;
        }
        m.col.push_back(t.col);
        m.val.push_back(t.value);
        ++m.row_ptr[t.row + 1];
        prev_row = t.row;
        prev_col = t.col;
    }
    for (int r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
}

int CsrMatrix::find(int r, int c) const {
    if (r < 0 || r >= rows || c < 0 || c >= cols) throw Error("CsrMatrix: index out of range");
    const int* begin = col.data() + row_ptr[r];
    const int* end = col.data() + row_ptr[r + 1];
    const int* it = std::lower_bound(begin, end, c);
    if (it != end && *it == c) return static_cast<int>(it - col.data());
    return -1;
}

double CsrMatrix::value_at(int r, int c) const {
    int i = find(r, c);
    return i >= 0 ? val[i] : 0.0;
}

Eigen::VectorXd CsrMatrix::multiply(const Eigen::VectorXd& x, Exec exec) const {
    if (x.size() != cols) throw Error("CsrMatrix::multiply: dimension mismatch");
    Eigen::VectorXd y(rows);
    auto row_dot = [&](int r) {
        double s = 0.0;
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
        return s;
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int r = 0; r < rows; ++r) y[r] = row_dot(r);
    } else {
        for (int r = 0; r < rows; ++r) y[r] = row_dot(r);
    }
    return y;
}

void CsrMatrix::zero_row(int r) {
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) val[k] = 0.0;
}

void CsrMatrix::set_value(int r, int c, double v) {
    int i = find(r, c);
    if (i < 0) throw Error("CsrMatrix::set_value: entry is not structural");
    val[i] = v;
}

Eigen::SparseMatrix<double> CsrMatrix::to_eigen() const {
    Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor, int>> map(
        rows, cols, nnz(), row_ptr.data(), col.data(), val.data());
    return Eigen::SparseMatrix<double>(map);
}

FormAssembler::FormAssembler(int rows, int cols, int nelem, int ldr, int ldc,
                             std::vector<int> row_dofs, std::vector<int> col_dofs)
    : nelem_(nelem), ldr_(ldr), ldc_(ldc), row_dofs_(std::move(row_dofs)),
      col_dofs_(std::move(col_dofs)) {
    if (row_dofs_.size() != static_cast<size_t>(nelem) * ldr ||
        col_dofs_.size() != static_cast<size_t>(nelem) * ldc)
        throw Error("FormAssembler: dof table size mismatch");

    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(nelem) * ldr * ldc);
    for (int e = 0; e < nelem; ++e)
        for (int a = 0; a < ldr; ++a)
            for (int b = 0; b < ldc; ++b)
                trips.push_back({row_dofs_[static_cast<size_t>(e) * ldr + a],
                                 col_dofs_[static_cast<size_t>(e) * ldc + b], 0.0});
    structure_ = CsrMatrix::from_triplets(rows, cols, trips);

    scatter_.resize(static_cast<size_t>(nelem) * ldr * ldc);
    for (int e = 0; e < nelem; ++e)
        for (int a = 0; a < ldr; ++a) {
            int r = row_dofs_[static_cast<size_t>(e) * ldr + a];
            for (int b = 0; b < ldc; ++b) {
                int c = col_dofs_[static_cast<size_t>(e) * ldc + b];
                int idx = structure_.find(r, c);
                scatter_[(static_cast<size_t>(e) * ldr + a) * ldc + b] = idx;
            }
        }
}

}  // namespace topflow
