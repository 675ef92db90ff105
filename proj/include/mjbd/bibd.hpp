#pragma once

#include <string>

#include "mjbd/core.hpp"
#include "mjbd/zeig.hpp"

namespace mjbd {

/// Two-cluster split of a spectrum by the largest gap in real parts.
/// Complex conjugate pairs share a real part and never straddle the cut.
struct SpectrumSplit {
    int q1 = 0;          // multiplicity of the cluster with larger real part
    int q2 = 0;
    double rho1 = 0.0;   // cluster centers (mean real parts)
    double rho2 = 0.0;
    double gap = 0.0;    // width of the separating gap
    double cut = 0.0;    // threshold between the clusters
    std::vector<int> group1;  // indices of cluster-1 eigenvalues
};

/// Throws NoReliableSplitError when the largest gap is below 1 (half the
/// theoretical gap of 2).
SpectrumSplit split_spectrum(const Eigen::VectorXcd& eigenvalues, double delta);
SpectrumSplit split_spectrum(const Matrix& x_star, double delta);

/// Real factorization X* = Y diag(Gamma1, Gamma2) Y^{-1} with the
/// cluster-1 eigenvalues in Gamma1: real Schur form, orthogonal
/// reordering of the diagonal blocks, then one Sylvester solve to zero
/// the coupling.
struct BlockFactorization {
    Matrix Y;
    Matrix Y_inv;
    Matrix gamma1;  // q1 x q1
    Matrix gamma2;  // q2 x q2
    double sep = 0.0;  // smallest singular value of the Sylvester operator
};

BlockFactorization block_factorize(const Matrix& x_star, const SpectrumSplit& split);

/// Output of one (approximate) bi-block diagonalization pass.
struct BiSplit {
    Partition partition;  // (q1, q2) or (q)
    Matrix Z;             // identity when unsplit
    Matrix Y;             // Z^{-T}; conjugation by Z^{-1} (.) Z^{-T} is Y^T (.) Y
    bool split = false;
    double rho1 = 0.0;
    double rho2 = 0.0;
    double split_residual = 0.0;  // sum_i ||OffBdiag(Z^-1 D_i Z^-T)||_F^2
    double z_condition = 1.0;
    double delta_used = 0.0;
    Eigen::VectorXcd x_star_eigenvalues;
    std::string warning;  // nonempty when a potential split was rejected
};

/// Algorithms BI-BD / A-BI-BD: declare the set irreducible or factor it
/// into two blocks through the spectrum of X*.
BiSplit bi_block_diagonalize(const MatrixSet& set, const DeltaSpec& delta,
                             const ZeigOptions& opts = {});

}  // namespace mjbd
