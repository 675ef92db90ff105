#include "mjbd/synth.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "mjbd/linalg.hpp"

namespace mjbd {

double snr_to_sigma(double snr_db) {
    if (std::isinf(snr_db)) return 0.0;
    return std::pow(10.0, -snr_db / 20.0);
}

namespace {

Matrix draw_matrix(CounterRng& rng, int rows, int cols) {
    Matrix out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            out(r, c) = rng.normal();
        }
    }
    return out;
}

}  // namespace

PlantedInstance gen_example1(int m, int n, int p, const Partition& tau, double snr_db,
                             std::uint64_t seed) {
    if (tau.total() != p) {
        throw PreconditionError("gen_example1: partition total must equal p");
    }
    if (p > n) {
        throw PreconditionError("gen_example1: p must not exceed n");
    }
    if (m < 1) {
        throw PreconditionError("gen_example1: need at least one matrix");
    }
    const double sigma = snr_to_sigma(snr_db);

    CounterRng rng(seed);
    Matrix A = draw_matrix(rng, n, p);

    std::vector<Matrix> blocks;
    std::vector<Matrix> observed;
    blocks.reserve(m);
    observed.reserve(m);
    for (int i = 0; i < m; ++i) {
        Matrix D = Matrix::Zero(p, p);
        for (int j = 0; j < tau.cardinality(); ++j) {
            int off = tau.offset(j);
            int size = tau.part(j);
            D.block(off, off, size, size) = draw_matrix(rng, size, size);
        }
        Matrix C = A * D * A.transpose();
        if (sigma > 0.0) {
            C += sigma * draw_matrix(rng, n, n);
        }
        blocks.push_back(std::move(D));
        observed.push_back(std::move(C));
    }

    PlantedInstance inst;
    inst.observed = MatrixSet(std::move(observed));
    inst.truth_A = std::move(A);
    inst.truth_blocks = MatrixSet(std::move(blocks));
    inst.partition = tau;
    inst.sigma = sigma;
    inst.seed = seed;
    inst.kind = "example1";
    return inst;
}

PlantedInstance gen_isa_covariances(const Partition& group_dims, int d, int m,
                                    int samples_per_domain, std::uint64_t seed) {
    const int p = group_dims.total();
    if (p > d) {
        throw PreconditionError("gen_isa_covariances: total group dimension exceeds d");
    }
    if (samples_per_domain < p) {
        throw PreconditionError("gen_isa_covariances: need at least p samples per domain");
    }
    if (m < 1) {
        throw PreconditionError("gen_isa_covariances: need at least one domain");
    }

    CounterRng rng(seed);
    // Redraw until the mixing is numerically full column rank; without a
    // conditioning floor the weakest source direction drowns in sampling
    // noise and the instance is unidentifiable at finite sample sizes.
    Matrix A = draw_matrix(rng, d, p);
    for (int tries = 0; tries < 64 && condition_number(A) > 50.0; ++tries) {
        A = draw_matrix(rng, d, p);
    }

    std::vector<Matrix> truth_blocks;
    std::vector<Matrix> observed;
    truth_blocks.reserve(m);
    observed.reserve(m);
    const int l = group_dims.cardinality();

    for (int i = 0; i < m; ++i) {
        // Per-domain within-group covariances and their Cholesky factors.
        Matrix C_ss = Matrix::Zero(p, p);
        std::vector<Matrix> chol(l);
        for (int g = 0; g < l; ++g) {
            int size = group_dims.part(g);
            Matrix W = draw_matrix(rng, size, size);
            Matrix cov = W.transpose() * W + 0.1 * Matrix::Identity(size, size);
            C_ss.block(group_dims.offset(g), group_dims.offset(g), size, size) = cov;
            chol[g] = Eigen::LLT<Matrix>(cov).matrixL();
        }

        Matrix accum = Matrix::Zero(d, d);
        Vector source(p);
        for (int t = 0; t < samples_per_domain; ++t) {
            for (int g = 0; g < l; ++g) {
                int size = group_dims.part(g);
                Vector z(size);
                for (int u = 0; u < size; ++u) z(u) = rng.normal();
                source.segment(group_dims.offset(g), size) = chol[g] * z;
            }
            Vector x = A * source;
            accum.noalias() += x * x.transpose();
        }
        observed.push_back(accum / static_cast<double>(samples_per_domain));
        truth_blocks.push_back(std::move(C_ss));
    }

    PlantedInstance inst;
    inst.observed = MatrixSet(std::move(observed));
    inst.truth_A = std::move(A);
    inst.truth_blocks = MatrixSet(std::move(truth_blocks));
    inst.partition = group_dims;
    inst.sigma = 0.0;
    inst.seed = seed;
    inst.kind = "isa";
    return inst;
}

}  // namespace mjbd
