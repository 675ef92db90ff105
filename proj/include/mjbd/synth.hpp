#pragma once

#include <cstdint>
#include <string>

#include "mjbd/rng.hpp"
#include "mjbd/types.hpp"

namespace mjbd {

/// A generated instance with its ground truth attached.
struct PlantedInstance {
    MatrixSet observed;      // possibly noisy C_i
    Matrix truth_A;          // d x p mixing matrix
    MatrixSet truth_blocks;  // p x p block-diagonal Sigma_i / D_i
    Partition partition;
    double sigma = 0.0;      // entrywise noise std; 0 for noiseless and ISA
    std::uint64_t seed = 0;
    std::string kind;        // "example1" or "isa"
};

/// sigma = 10^(-snr_db/20); +inf maps to 0.
double snr_to_sigma(double snr_db);

/// C_i = A D_i A^T + N_i with standard-normal A (n x p) and block entries,
/// and N(0, sigma^2) noise. Draw order: A row by row, then per i the D_i
/// blocks row by row, then N_i row by row (skipped entirely when sigma=0).
PlantedInstance gen_example1(int m, int n, int p, const Partition& tau, double snr_db,
                             std::uint64_t seed);

/// Piecewise-stationary ISA covariances: independent source groups with a
/// fresh within-group covariance W^T W + 0.1 I per domain, mixed by a
/// random d x p matrix; observed are the m empirical covariances.
PlantedInstance gen_isa_covariances(const Partition& group_dims, int d, int m,
                                    int samples_per_domain, std::uint64_t seed);

}  // namespace mjbd
