#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "mjbd/errors.hpp"

namespace mjbd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Ordered collection of m real dense d-by-d matrices. Immutable after
/// construction; safe to share across threads.
class MatrixSet {
public:
    MatrixSet() = default;
    explicit MatrixSet(std::vector<Matrix> matrices);

    int m() const { return static_cast<int>(matrices_.size()); }
    int d() const { return d_; }

    const Matrix& operator[](std::size_t i) const { return matrices_[i]; }
    const std::vector<Matrix>& matrices() const { return matrices_; }

    auto begin() const { return matrices_.begin(); }
    auto end() const { return matrices_.end(); }

private:
    std::vector<Matrix> matrices_;
    int d_ = 0;
};

/// Composition (p_1, ..., p_l) of p. Every part is at least 1.
class Partition {
public:
    Partition() = default;
    explicit Partition(std::vector<int> parts);

    int total() const { return total_; }
    int cardinality() const { return static_cast<int>(parts_.size()); }
    const std::vector<int>& parts() const { return parts_; }
    int part(std::size_t j) const { return parts_[j]; }

    /// Start index of block j in a vector of length total().
    int offset(std::size_t j) const { return offsets_[j]; }

    bool operator==(const Partition& other) const { return parts_ == other.parts_; }

private:
    std::vector<int> parts_;
    std::vector<int> offsets_;
    int total_ = 0;
};

/// A computed solution (tau, A, {Sigma_i}) with its residual.
struct BlockDiagonalization {
    Partition partition;
    Matrix diagonalizer;  // d x p, full column rank
    MatrixSet blocks;     // p x p, exactly partition-block-diagonal
    double residual = 0.0;
    int rank = 0;
};

}  // namespace mjbd
