#include "mjbd/linalg.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace mjbd {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}

Svd svd(const Matrix& A) {
    // BDCSVD for larger problems, Jacobi below its useful range.
    if (std::min(A.rows(), A.cols()) >= 32) {
        Eigen::BDCSVD<Matrix> dec(A, Eigen::ComputeThinU | Eigen::ComputeFullV);
        return {dec.singularValues(), dec.matrixU(), dec.matrixV()};
    }
    Eigen::JacobiSVD<Matrix> dec(A, Eigen::ComputeThinU | Eigen::ComputeFullV);
    return {dec.singularValues(), dec.matrixU(), dec.matrixV()};
}

int numerical_rank(const Vector& singular_values, int rows, int cols) {
    if (singular_values.size() == 0) return 0;
    double cutoff = std::max(rows, cols) * kEps * singular_values(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
        if (singular_values(i) > cutoff) ++rank;
    }
    return rank;
}

Matrix pseudo_inverse(const Matrix& A) {
    Svd dec = svd(A);
    int rank = numerical_rank(dec.singular_values, static_cast<int>(A.rows()),
                              static_cast<int>(A.cols()));
    Matrix result = Matrix::Zero(A.cols(), A.rows());
    for (int i = 0; i < rank; ++i) {
        result.noalias() +=
            (1.0 / dec.singular_values(i)) * dec.V.col(i) * dec.U.col(i).transpose();
    }
    return result;
}

double condition_number(const Matrix& A) {
    Eigen::JacobiSVD<Matrix> dec(A);
    const Vector& sv = dec.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return sv(0) / sv(sv.size() - 1);
}

double spectral_norm(const Matrix& A) {
    Eigen::JacobiSVD<Matrix> dec(A);
    return dec.singularValues().size() > 0 ? dec.singularValues()(0) : 0.0;
}

Matrix sqrtm_spd(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
    Vector vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix kron(const Matrix& A, const Matrix& B) {
    Matrix result(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            result.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
        }
    }
    return result;
}

Vector vec(const Matrix& X) {
    return Eigen::Map<const Vector>(X.data(), X.size());
}

Matrix unvec(const Vector& v, int rows, int cols) {
    if (v.size() != static_cast<Eigen::Index>(rows) * cols) {
        throw DimensionError("unvec: length does not match the requested shape");
    }
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace mjbd
