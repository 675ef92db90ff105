#pragma once

#include <limits>
#include <vector>

#include "mjbd/types.hpp"

namespace mjbd {

/// Perfect shuffle permutation: Pi_q vec(X^T) = vec(X) for every q x q X.
Matrix perfect_shuffle(int q);

/// L(D), the mq^2 x q^2 operator whose i-th block maps vec(X) to
/// vec(D_i X - X^T D_i).
Matrix build_L(const MatrixSet& set);

/// Orthonormal basis (trace inner product) of the delta-relaxed null space
/// of L: the right singular subspace for singular values <= delta.
struct NullBasis {
    std::vector<Matrix> basis;  // s matrices, q x q
    Vector sigma_kept;          // the s smallest singular values, ascending
    double sigma_next = std::numeric_limits<double>::infinity();  // (s+1)-th
    double delta = 0.0;         // threshold actually applied

    int size() const { return static_cast<int>(basis.size()); }
    int q() const { return basis.empty() ? 0 : static_cast<int>(basis.front().rows()); }
};

/// Threshold policy for the null-space extraction.
///
/// Fixed mode resolves to max(base, floor_coeff * sigma_max(L)).
/// Gap-adaptive mode keeps the largest leading group of singular values
/// separated from the rest by a factor gap_ratio: the largest k with
/// sigma_k < gap_ratio * sigma_{k+1} (ascending order). The recorded
/// delta is then the measured noise floor max(sigma_k, floor).
struct DeltaSpec {
    enum class Mode { fixed, gap_adaptive };

    Mode mode = Mode::fixed;
    double base = 0.0;
    double floor_coeff = 0.0;
    double gap_ratio = 0.1;

    static DeltaSpec exact(double delta) { return {Mode::fixed, delta, 0.0, 0.1}; }
    static DeltaSpec fixed(double base, double floor_coeff) {
        return {Mode::fixed, base, floor_coeff, 0.1};
    }
    static DeltaSpec adaptive(double gap_ratio = 0.1, double floor_coeff = 1e-10) {
        return {Mode::gap_adaptive, 0.0, floor_coeff, gap_ratio};
    }

    double resolve(double sigma_max) const { return std::max(base, floor_coeff * sigma_max); }
};

/// Throws AmbiguousThresholdError when the resolved delta falls within
/// 1e-12 * sigma_max of a singular value of L.
NullBasis null_basis(const MatrixSet& set, const DeltaSpec& delta);
NullBasis null_basis(const MatrixSet& set, double delta);

/// Candidate thresholds for N_delta read off the spectrum of L: one delta
/// per downward gap sigma_k / sigma_{k+1} < max_ratio (ascending order,
/// k >= 2 since a single direction can never split), strongest gaps
/// first, at most max_candidates of them.
std::vector<double> gap_candidates(const MatrixSet& set, double max_ratio, int max_candidates);

}  // namespace mjbd
