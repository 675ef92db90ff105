#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mjbd/bibd.hpp"
#include "mjbd/subspace.hpp"

namespace mjbd {

/// One worklist event: either a split of block `block_index` into
/// (q1, q2), or the block being closed (q1 = q2 = 0).
struct SplitRecord {
    int block_index = 0;  // position in the partition at event time
    int offset = 0;       // column offset of the block
    int q = 0;
    int q1 = 0;
    int q2 = 0;
    double rho1 = 0.0;
    double rho2 = 0.0;
    double split_residual = 0.0;
    double discarded_coupling = 0.0;  // norm zeroed out of B between the new blocks
    double delta_used = 0.0;
    double z_condition = 1.0;
    Eigen::VectorXcd x_star_spectrum;
    std::string note;
};

/// Mutable state of the recursive driver.
struct WorkState {
    Partition partition;
    std::vector<bool> done;
    std::vector<Matrix> B;  // projected p x p set
    Matrix A_hat;           // d x p
    std::vector<SplitRecord> history;
};

/// { V1^T C_i V1 }.
MatrixSet project(const MatrixSet& set, const Matrix& V1);

/// Index of the largest unfinished block, ties to the smallest index;
/// -1 when all blocks are done.
int select_work_block(const WorkState& state);

/// Applies a BiSplit outcome to block t: closes it, or replaces it by two
/// blocks, conjugates the B sub-blocks, zeroes the new off-diagonal
/// coupling (logging its norm) and post-multiplies the A_hat columns by Z.
void apply_split(WorkState& state, int t, const BiSplit& split);

struct SolveOptions {
    double xi = 0.1;
    std::optional<double> delta;  // fixed threshold; unset = automatic policy
    std::uint64_t seed = 0;
    int restarts = 16;
    int max_iterations = 5000;
    double zeig_tol = 1e-10;
    std::optional<int> rank;      // bypass the gap test when the rank is known
};

struct SolveResult {
    BlockDiagonalization solution;
    SpectralProfile profile;
    std::vector<SplitRecord> history;
    double a_condition = 1.0;
    std::vector<std::string> warnings;
};

/// The full pipeline: rank/range estimation, projection, worklist-driven
/// repeated bi-splitting, and assembly of (tau_hat, A_hat, Sigma_hat).
/// Deterministic given the seed. Per-block numerical failures close the
/// block with a warning instead of aborting.
SolveResult solve_bjbdp(const MatrixSet& set, const SolveOptions& opts = {});

}  // namespace mjbd
