#pragma once

#include <cstdint>
#include <limits>

#include "mjbd/commutant.hpp"
#include "mjbd/kernels.hpp"

namespace mjbd {

/// Orthonormal basis of span(basis) intersected with the traceless
/// hyperplane. Drops exactly one dimension when the span contains a
/// traced direction (in particular I/sqrt(q)), none otherwise. An empty
/// result signals an empty feasible set.
NullBasis deflate_identity(const NullBasis& basis);

/// The reduced quartic: K_ij = tr(X_i X_j) = G^T G, and the whitened
/// symmetric tensor N with N beta^4 = tr(X^4) for X = sum_j alpha_j X_j,
/// alpha = G^{-1} beta.
struct QuarticForm {
    kernels::Tensor4 order4;  // N
    Matrix gram;              // K
    Matrix chol;              // upper-triangular G
    NullBasis basis_ref;
};

/// Throws DegenerateInputError when K is not numerically positive definite.
QuarticForm build_quartic(const NullBasis& basis);

struct ZeigOptions {
    int restarts = 16;
    int max_iterations = 5000;
    double tol = 1e-10;
    std::uint64_t seed = 0;
};

struct ZeigResult {
    double lambda = 0.0;  // smallest Z-eigenvalue found
    Vector beta;          // unit-norm eigenvector
    int iterations = 0;
    bool converged = false;
};

/// Shifted power iteration for the smallest Z-eigenvalue of the order-4
/// tensor: run as maximization of -N with shift 1 + sum|N|. Deterministic
/// given the seed; restarts may run in parallel. Throws ConvergenceError
/// when no restart converges.
ZeigResult min_z_eigen(const QuarticForm& form, const ZeigOptions& opts = {});

struct OptSolution {
    Matrix x_star;                        // tr = 0, tr(X^2) = q when feasible
    double objective = std::numeric_limits<double>::quiet_NaN();  // tr(X*^4)
    Eigen::VectorXcd eigenvalues;
    bool feasible = false;
    int null_dimension = 0;               // dim of N_delta before deflation
    double delta_used = 0.0;              // resolved threshold
    double gram_min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
};

/// OPT(D, delta): minimize tr(X^4) over X in N_delta with tr(X) = 0 and
/// tr(X^2) = q. Infeasible when identity deflation empties the basis or
/// when the trace Gram K is not numerically positive definite.
OptSolution solve_opt(const MatrixSet& set, const DeltaSpec& delta,
                      const ZeigOptions& opts = {});

}  // namespace mjbd
