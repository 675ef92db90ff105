#include "mjbd/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mjbd/core.hpp"
#include "mjbd/linalg.hpp"

namespace mjbd {

SpectralProfile spectral_profile(const MatrixSet& set) {
    Svd dec = svd(stack_underline(set));
    return {dec.singular_values, dec.V, dec.U, 0};
}

int estimate_rank(SpectralProfile& profile, double xi) {
    if (xi <= 0.0 || xi >= 1.0) {
        throw PreconditionError("estimate_rank: xi must lie in (0, 1)");
    }
    const Vector& phi = profile.singular_values;
    const int d = static_cast<int>(phi.size());
    if (d == 0 || phi(0) <= 0.0) {
        std::vector<double> spectrum(phi.data(), phi.data() + phi.size());
        throw RankUndetectableError("estimate_rank: spectrum is identically zero",
                                    std::move(spectrum));
    }
    for (int p = 1; p <= d; ++p) {
        double tail = (p < d) ? phi(p) : 0.0;
        if (tail < xi * phi(p - 1)) {
            profile.selected_rank = p;
            return p;
        }
    }
    std::vector<double> spectrum(phi.data(), phi.data() + phi.size());
    std::ostringstream msg;
    msg << "estimate_rank: no singular-value gap below xi=" << xi;
    throw RankUndetectableError(msg.str(), std::move(spectrum));
}

Matrix range_basis(const SpectralProfile& profile, int p) {
    const int d = static_cast<int>(profile.right_vectors.cols());
    if (p < 1 || p > d) {
        throw PreconditionError("range_basis: p out of range");
    }
    return profile.right_vectors.leftCols(p);
}

namespace {

void check_orthonormal(const Matrix& X, const char* name) {
    Matrix gram = X.transpose() * X;
    double deviation = (gram - Matrix::Identity(X.cols(), X.cols())).norm();
    if (deviation > 1e-8) {
        std::ostringstream msg;
        msg << "canonical_angles: " << name << " columns are not orthonormal (Gram deviation "
            << deviation << ")";
        throw PreconditionError(msg.str());
    }
}

}  // namespace

Vector canonical_angles(const Matrix& X, const Matrix& Y) {
    if (X.rows() != Y.rows()) {
        throw DimensionError("canonical_angles: bases live in different spaces");
    }
    if (X.cols() < Y.cols()) {
        throw PreconditionError("canonical_angles: first basis must have at least as many columns");
    }
    check_orthonormal(X, "X");
    check_orthonormal(Y, "Y");

    Eigen::JacobiSVD<Matrix> cos_dec(Y.transpose() * X);
    Vector omega = cos_dec.singularValues();  // nonincreasing

    // arccos of a cosine near 1 cannot resolve small angles; those are
    // recovered from the sines, the singular values of Y - X (X^T Y).
    // Ascending sines pair with descending cosines.
    Eigen::JacobiSVD<Matrix> sin_dec(Y - X * (X.transpose() * Y));
    Vector sines = sin_dec.singularValues();  // nonincreasing

    const Eigen::Index count = omega.size();
    Vector angles(count);
    for (Eigen::Index j = 0; j < count; ++j) {
        double w = std::clamp(omega(j), 0.0, 1.0);
        double s = std::clamp(sines(count - 1 - j), 0.0, 1.0);
        // reversed so angles come out nonincreasing
        angles(count - 1 - j) = w * w > 0.5 ? std::asin(s) : std::acos(w);
    }
    return angles;
}

double sin_theta_max(const Matrix& X, const Matrix& Y) {
    Vector angles = canonical_angles(X, Y);
    return angles.size() > 0 ? std::sin(angles(0)) : 0.0;
}

}  // namespace mjbd
