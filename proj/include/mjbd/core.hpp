#pragma once

#include <vector>

#include "mjbd/types.hpp"

namespace mjbd {

/// Vertical stack [D_1^T; D_1; ...; D_m^T; D_m], a 2md x d matrix.
Matrix stack_underline(const MatrixSet& set);

/// Zero everything outside the diagonal blocks induced by tau.
Matrix block_diag_part(const Matrix& X, const Partition& tau);
Matrix off_block_diag_part(const Matrix& X, const Partition& tau);

struct PartitionMatch {
    bool equivalent = false;
    /// When equivalent: a.parts()[i] == b.parts()[permutation[i]].
    std::vector<int> permutation;
};

/// Same cardinality and same multiset of parts, with one witnessing
/// permutation.
PartitionMatch partitions_equivalent(const Partition& a, const Partition& b);

/// Rescale the column blocks of A so that Bdiag_tau(A^+ A^+T) = I_p.
/// Uses the symmetric square roots of the diagonal blocks of A^+ A^+T.
Matrix normalize_block_columns(const Matrix& A, const Partition& tau);

/// f(A) = sqrt(sum_i ||OffBdiag_tau(A^+ C_i A^+T)||_F^2) evaluated after
/// block normalization of A. Zero exactly when every A^+ C_i A^+T is
/// tau-block diagonal. Throws DegenerateInputError for rank-deficient A.
double offblock_residual(const MatrixSet& set, const Matrix& A, const Partition& tau);

}  // namespace mjbd
