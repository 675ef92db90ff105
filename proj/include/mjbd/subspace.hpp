#pragma once

#include "mjbd/types.hpp"

namespace mjbd {

/// Full SVD of the stacked matrix of a set.
struct SpectralProfile {
    Vector singular_values;  // length d, nonincreasing
    Matrix right_vectors;    // d x d orthonormal
    Matrix left_vectors;     // 2md x d orthonormal columns
    int selected_rank = 0;   // 0 until estimate_rank runs
};

SpectralProfile spectral_profile(const MatrixSet& set);

/// Smallest p >= 1 with phi_{p+1} < xi * phi_p, treating phi_{d+1} = 0.
/// Records the result in the profile. Throws RankUndetectableError (with
/// the spectrum attached) when the whole spectrum is zero.
int estimate_rank(SpectralProfile& profile, double xi);

/// Leading p right singular vectors, d x p orthonormal.
Matrix range_basis(const SpectralProfile& profile, int p);

/// Canonical angles between R(X) and R(Y), X n-by-k and Y n-by-l with
/// k >= l, both with orthonormal columns. Nonincreasing, in [0, pi/2].
Vector canonical_angles(const Matrix& X, const Matrix& Y);

/// sin of the largest canonical angle, i.e. ||sin Theta||_2.
double sin_theta_max(const Matrix& X, const Matrix& Y);

}  // namespace mjbd
