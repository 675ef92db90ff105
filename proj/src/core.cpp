#include "mjbd/core.hpp"

#include <algorithm>
#include <cmath>

#include "mjbd/kernels.hpp"
#include "mjbd/linalg.hpp"

namespace mjbd {

Matrix stack_underline(const MatrixSet& set) {
    const int d = set.d();
    Matrix stacked(2 * set.m() * d, d);
    for (int i = 0; i < set.m(); ++i) {
        stacked.middleRows(2 * i * d, d) = set[i].transpose();
        stacked.middleRows((2 * i + 1) * d, d) = set[i];
    }
    return stacked;
}

Matrix block_diag_part(const Matrix& X, const Partition& tau) {
    if (X.rows() != tau.total() || X.cols() != tau.total()) {
        throw DimensionError("block_diag_part: partition total does not match matrix size");
    }
    Matrix result = Matrix::Zero(X.rows(), X.cols());
    for (int j = 0; j < tau.cardinality(); ++j) {
        int off = tau.offset(j);
        int size = tau.part(j);
        result.block(off, off, size, size) = X.block(off, off, size, size);
    }
    return result;
}

Matrix off_block_diag_part(const Matrix& X, const Partition& tau) {
    return X - block_diag_part(X, tau);
}

PartitionMatch partitions_equivalent(const Partition& a, const Partition& b) {
    PartitionMatch match;
    if (a.cardinality() != b.cardinality()) return match;

    std::vector<bool> used(b.cardinality(), false);
    match.permutation.resize(a.cardinality(), -1);
    for (int i = 0; i < a.cardinality(); ++i) {
        bool found = false;
        for (int j = 0; j < b.cardinality(); ++j) {
            if (!used[j] && b.part(j) == a.part(i)) {
                used[j] = true;
                match.permutation[i] = j;
                found = true;
                break;
            }
        }
        if (!found) {
            match.permutation.clear();
            return match;
        }
    }
    match.equivalent = true;
    return match;
}

Matrix normalize_block_columns(const Matrix& A, const Partition& tau) {
    if (A.cols() != tau.total()) {
        throw DimensionError("normalize_block_columns: partition total does not match columns");
    }
    Matrix pinv = pseudo_inverse(A);
    Matrix gram = pinv * pinv.transpose();
    Matrix result = A;
    for (int j = 0; j < tau.cardinality(); ++j) {
        int off = tau.offset(j);
        int size = tau.part(j);
        Matrix scale = sqrtm_spd(gram.block(off, off, size, size));
        result.middleCols(off, size) = A.middleCols(off, size) * scale;
    }
    return result;
}

double offblock_residual(const MatrixSet& set, const Matrix& A, const Partition& tau) {
    if (A.cols() != tau.total()) {
        throw DimensionError("offblock_residual: partition total does not match columns");
    }
    Svd dec = svd(A);
    int rank = numerical_rank(dec.singular_values, static_cast<int>(A.rows()),
                              static_cast<int>(A.cols()));
    if (rank < A.cols()) {
        throw DegenerateInputError("offblock_residual: diagonalizer is rank deficient");
    }
    Matrix normalized = normalize_block_columns(A, tau);
    Matrix pinv = pseudo_inverse(normalized);
    double sq_sum = kernels::par::offblock_sq_sum(set, pinv, tau);
    return std::sqrt(sq_sum);
}

}  // namespace mjbd
