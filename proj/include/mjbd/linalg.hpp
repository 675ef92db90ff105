#pragma once

#include "mjbd/types.hpp"

namespace mjbd {

/// Full SVD, singular values nonincreasing. U is thin (rows x min(rows,cols)),
/// V is full (cols x cols).
struct Svd {
    Vector singular_values;
    Matrix U;
    Matrix V;
};

Svd svd(const Matrix& A);

/// Rank-revealing cutoff: count of singular values above
/// max(rows, cols) * eps * sigma_max.
int numerical_rank(const Vector& singular_values, int rows, int cols);

/// Moore-Penrose inverse via SVD with the cutoff above.
Matrix pseudo_inverse(const Matrix& A);

/// sigma_max / sigma_min; +inf for rank-deficient input.
double condition_number(const Matrix& A);

double spectral_norm(const Matrix& A);

/// Symmetric PSD square root via self-adjoint eigendecomposition.
/// Negative eigenvalues from roundoff are clamped to zero.
Matrix sqrtm_spd(const Matrix& S);

Matrix kron(const Matrix& A, const Matrix& B);

/// Column-major stacking, first column on top.
Vector vec(const Matrix& X);
Matrix unvec(const Vector& v, int rows, int cols);

}  // namespace mjbd
