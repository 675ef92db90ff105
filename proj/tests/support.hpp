#pragma once

// Shared helpers for the test suites: random inputs and the independent
// oracles (dense null space, sphere grid) that the solvers are checked
// against. Everything here stays off the implementation paths it verifies.

#include <cmath>
#include <vector>

#include "mjbd/core.hpp"
#include "mjbd/kernels.hpp"
#include "mjbd/linalg.hpp"
#include "mjbd/rng.hpp"
#include "mjbd/synth.hpp"
#include "mjbd/types.hpp"

namespace testsupport {

using mjbd::Matrix;
using mjbd::Vector;

inline Matrix random_matrix(mjbd::CounterRng& rng, int rows, int cols) {
    Matrix out(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out(r, c) = rng.normal();
    return out;
}

inline Matrix random_orthonormal(mjbd::CounterRng& rng, int n, int k) {
    Matrix g = random_matrix(rng, n, k);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    return q.leftCols(k);
}

inline mjbd::MatrixSet random_set(mjbd::CounterRng& rng, int m, int d) {
    std::vector<Matrix> mats;
    for (int i = 0; i < m; ++i) mats.push_back(random_matrix(rng, d, d));
    return mjbd::MatrixSet(std::move(mats));
}

/// Stacked perturbation [E_1^T; E_1; ...] of a planted instance.
inline Matrix stacked_error(const mjbd::PlantedInstance& inst) {
    std::vector<Matrix> errors;
    for (int i = 0; i < inst.observed.m(); ++i) {
        errors.push_back(inst.observed[i] -
                         inst.truth_A * inst.truth_blocks[i] * inst.truth_A.transpose());
    }
    return mjbd::stack_underline(mjbd::MatrixSet(std::move(errors)));
}

/// Brute-force null space of the map X -> {D_i X - X^T D_i}: the operator
/// is built column by column from canonical basis matrices (independent of
/// the Kronecker assembly) and factored densely. Returns an orthonormal
/// basis of vec'd null directions (column-major vec, matching mjbd::vec).
inline Matrix null_space_oracle(const mjbd::MatrixSet& set, double tol_rel = 1e-10) {
    const int q = set.d();
    const int q2 = q * q;
    Matrix op(set.m() * q2, q2);
    for (int v = 0; v < q; ++v) {
        for (int u = 0; u < q; ++u) {
            Matrix E = Matrix::Zero(q, q);
            E(u, v) = 1.0;
            const int col = v * q + u;
            for (int i = 0; i < set.m(); ++i) {
                Matrix block = set[i] * E - E.transpose() * set[i];
                op.block(i * q2, col, q2, 1) = mjbd::vec(block);
            }
        }
    }
    Eigen::JacobiSVD<Matrix> dec(op, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const Vector& sv = dec.singularValues();
    double cutoff = sv.size() > 0 ? tol_rel * sv(0) : 0.0;
    int null_dim = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) <= cutoff) ++null_dim;
    }
    return dec.matrixV().rightCols(null_dim);
}

/// Objective of the whitened quartic, evaluated with its own loop.
inline double quartic_value(const mjbd::kernels::Tensor4& T, const Vector& beta) {
    const int s = T.s;
    double acc = 0.0;
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
            for (int k = 0; k < s; ++k)
                for (int l = 0; l < s; ++l)
                    acc += T(i, j, k, l) * beta(i) * beta(j) * beta(k) * beta(l);
    return acc;
}

/// Sphere-grid minimizer for s <= 3: 10^4 grid points plus a projected
/// gradient polish. Independent of the shifted power method.
inline double sphere_grid_min(const mjbd::kernels::Tensor4& T) {
    const int s = T.s;
    std::vector<Vector> grid;
    if (s == 1) {
        grid.push_back(Vector::Constant(1, 1.0));
        grid.push_back(Vector::Constant(1, -1.0));
    } else if (s == 2) {
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            double theta = 2.0 * M_PI * i / n;
            Vector b(2);
            b << std::cos(theta), std::sin(theta);
            grid.push_back(b);
        }
    } else if (s == 3) {
        // Fibonacci sphere
        const int n = 10000;
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < n; ++i) {
            double y = 1.0 - 2.0 * (i + 0.5) / n;
            double radius = std::sqrt(1.0 - y * y);
            double theta = golden * i;
            Vector b(3);
            b << radius * std::cos(theta), y, radius * std::sin(theta);
            grid.push_back(b);
        }
    } else {
        throw std::runtime_error("sphere_grid_min: only s <= 3 supported");
    }

    Vector best = grid.front();
    double best_value = quartic_value(T, best);
    for (const Vector& b : grid) {
        double value = quartic_value(T, b);
        if (value < best_value) {
            best_value = value;
            best = b;
        }
    }

    // projected gradient descent with halving line search
    Vector beta = best;
    double value = best_value;
    double step = 0.1;
    for (int it = 0; it < 2000 && step > 1e-18; ++it) {
        Vector grad(s);
        for (int i = 0; i < s; ++i) {
            // d/d beta_i of the symmetric quartic
            double g = 0.0;
            for (int j = 0; j < s; ++j)
                for (int k = 0; k < s; ++k)
                    for (int l = 0; l < s; ++l) g += T(i, j, k, l) * beta(j) * beta(k) * beta(l);
            grad(i) = 4.0 * g;
        }
        Vector tangent = grad - grad.dot(beta) * beta;
        Vector candidate = (beta - step * tangent).normalized();
        double candidate_value = quartic_value(T, candidate);
        if (candidate_value < value) {
            beta = candidate;
            value = candidate_value;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    return value;
}

/// Largest canonical angle between the column spans of two orthonormal
/// bases, through the sine formula (accurate for small angles, unlike
/// arccos of a near-unit cosine).
inline double largest_angle(const Matrix& X, const Matrix& Y) {
    Eigen::JacobiSVD<Matrix> dec(Y - X * (X.transpose() * Y));
    double sine = dec.singularValues()(0);
    return std::asin(std::clamp(sine, 0.0, 1.0));
}

/// vec'd orthonormal basis matrix of a NullBasis-style matrix list.
inline Matrix vec_basis(const std::vector<Matrix>& mats) {
    if (mats.empty()) return Matrix(0, 0);
    const int q = static_cast<int>(mats.front().rows());
    Matrix out(q * q, static_cast<int>(mats.size()));
    for (std::size_t j = 0; j < mats.size(); ++j) out.col(j) = mjbd::vec(mats[j]);
    return out;
}

}  // namespace testsupport
