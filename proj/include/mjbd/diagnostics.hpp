#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mjbd/core.hpp"

namespace mjbd {

/// Operator of the within-block equations: the i-th p_j^2-row block maps
/// vec(G) to vec(S_i G - G^T S_i) for the block family {S_i}.
Matrix build_Gjj(const MatrixSet& blocks);

/// Operator of the cross-block equations, 2m p_j p_k x 2 p_j p_k, acting
/// on [vec(G_jk); -vec(G_kj^T)].
Matrix build_Gjk(const MatrixSet& blocks_j, const MatrixSet& blocks_k);

struct BoundConstants {
    double C = 1.0;      // illustrative stand-ins for the unquantified
    double kappa = 1.0;  // constants of the perturbation bound
};

/// Noise proxies measured from the observed set's spectral profile.
struct NoiseContext {
    double phi_p = 0.0;     // p-th singular value of the stacked set
    double phi_tail = 0.0;  // (p+1)-th, the noise-level estimate
    int d = 0;
};

struct IdentifiabilityReport {
    double omega_ir = std::numeric_limits<double>::infinity();
    double omega_neq = std::numeric_limits<double>::infinity();
    bool p1_holds = true;
    int p1_offending_block = -1;  // set when p1_holds is false
    bool p2_holds = true;
    std::pair<int, int> p2_offending_pair{-1, -1};
    bool unique() const { return p1_holds && p2_holds; }

    // Perturbation-bound ingredients; NaN until A and noise data are given.
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    double r = std::numeric_limits<double>::quiet_NaN();
    double g1 = std::numeric_limits<double>::quiet_NaN();
    double g2 = std::numeric_limits<double>::quiet_NaN();
    BoundConstants constants;
};

/// Uniqueness analysis of a solution given its block families.
/// P1 is checked through the strict null-space form (null space of every
/// G_jj with p_j > 1 is exactly the span of vec(I)); P2 through
/// sigma_min(G_jk) above 1e-10 relative. When A is supplied it is
/// block-normalized internally (together with the blocks) so that
/// Bdiag(A^T A) = I before anything is measured.
IdentifiabilityReport identifiability(const std::vector<MatrixSet>& sigma_blocks,
                                      const Partition& tau, const Matrix* A,
                                      const BoundConstants& constants = {},
                                      const NoiseContext* noise = nullptr);

struct SolutionComparison {
    bool equivalent = false;
    /// truth block j matched to candidate block permutation[j]; -1 if none.
    std::vector<int> permutation;
    double block_error = std::numeric_limits<double>::quiet_NaN();
    std::string note;
};

/// Match candidate blocks to truth blocks greedily by the mass of the
/// sub-blocks of |A^+ A_hat| over size-compatible pairs, then solve the
/// block-diagonal D by least squares and measure
/// ||A_hat_matched - A D||_F / ||A||_F.
SolutionComparison compare_solutions(const Partition& tau, const Matrix& A,
                                     const Partition& tau_hat, const Matrix& A_hat,
                                     double tol = 1e-6);

}  // namespace mjbd
