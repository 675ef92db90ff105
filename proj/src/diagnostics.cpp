#include "mjbd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mjbd/commutant.hpp"
#include "mjbd/linalg.hpp"

namespace mjbd {

Matrix build_Gjj(const MatrixSet& blocks) {
    // Same Kronecker structure as the commutant operator.
    return build_L(blocks);
}

Matrix build_Gjk(const MatrixSet& blocks_j, const MatrixSet& blocks_k) {
    if (blocks_j.m() != blocks_k.m()) {
        throw DimensionError("build_Gjk: block families must share m");
    }
    const int m = blocks_j.m();
    const int pj = blocks_j.d();
    const int pk = blocks_k.d();
    const int cols = pj * pk;
    Matrix G = Matrix::Zero(2 * m * cols, 2 * cols);
    Matrix I_j = Matrix::Identity(pj, pj);
    Matrix I_k = Matrix::Identity(pk, pk);
    for (int i = 0; i < m; ++i) {
        const Matrix& Sj = blocks_j[i];
        const Matrix& Sk = blocks_k[i];
        G.block(2 * i * cols, 0, cols, cols) = kron(I_k, Sj);
        G.block(2 * i * cols, cols, cols, cols) = kron(Sk.transpose(), I_j);
        G.block((2 * i + 1) * cols, 0, cols, cols) = kron(I_k, Sj.transpose());
        G.block((2 * i + 1) * cols, cols, cols, cols) = kron(Sk, I_j);
    }
    return G;
}

namespace {

constexpr double kRankTol = 1e-10;

struct BlockSpectrum {
    Vector sv;
    int null_dim = 0;
};

BlockSpectrum gjj_spectrum(const MatrixSet& blocks) {
    Matrix G = build_Gjj(blocks);
    Eigen::JacobiSVD<Matrix> dec(G);
    BlockSpectrum out;
    out.sv = dec.singularValues();
    double cutoff = out.sv.size() > 0 ? kRankTol * out.sv(0) : 0.0;
    for (Eigen::Index i = 0; i < out.sv.size(); ++i) {
        if (out.sv(i) <= cutoff) ++out.null_dim;
    }
    return out;
}

}  // namespace

IdentifiabilityReport identifiability(const std::vector<MatrixSet>& sigma_blocks,
                                      const Partition& tau, const Matrix* A,
                                      const BoundConstants& constants,
                                      const NoiseContext* noise) {
    const int l = tau.cardinality();
    if (static_cast<int>(sigma_blocks.size()) != l) {
        throw DimensionError("identifiability: one block family per partition part expected");
    }
    for (int j = 0; j < l; ++j) {
        if (sigma_blocks[j].d() != tau.part(j)) {
            throw DimensionError("identifiability: block family size disagrees with partition");
        }
    }

    // Normalize A (and conjugate the blocks accordingly) so that
    // Bdiag(A^T A) = I; the moduli are defined in that gauge.
    std::vector<MatrixSet> blocks = sigma_blocks;
    Matrix A_norm;
    if (A != nullptr) {
        if (A->cols() != tau.total()) {
            throw DimensionError("identifiability: A columns disagree with partition total");
        }
        A_norm = *A;
        Matrix gram = A->transpose() * (*A);
        for (int j = 0; j < l; ++j) {
            int off = tau.offset(j);
            int size = tau.part(j);
            Matrix S = sqrtm_spd(gram.block(off, off, size, size));
            Matrix S_inv = S.fullPivLu().inverse();
            A_norm.middleCols(off, size) = A->middleCols(off, size) * S_inv;
            std::vector<Matrix> scaled;
            scaled.reserve(blocks[j].m());
            for (const Matrix& sigma : blocks[j].matrices()) {
                scaled.push_back(S * sigma * S.transpose());
            }
            blocks[j] = MatrixSet(std::move(scaled));
        }
    }

    IdentifiabilityReport report;
    report.constants = constants;

    // P1 and omega_ir from the within-block operators.
    bool any_nontrivial = false;
    for (int j = 0; j < l; ++j) {
        if (tau.part(j) <= 1) continue;
        any_nontrivial = true;
        BlockSpectrum spec = gjj_spectrum(blocks[j]);
        if (spec.null_dim != 1 && report.p1_holds) {
            report.p1_holds = false;
            report.p1_offending_block = j;
        }
        double cutoff = spec.sv.size() > 0 ? kRankTol * spec.sv(0) : 0.0;
        for (Eigen::Index i = spec.sv.size() - 1; i >= 0; --i) {
            if (spec.sv(i) > cutoff) {
                report.omega_ir = std::min(report.omega_ir, spec.sv(i));
                break;
            }
        }
    }
    if (!any_nontrivial) {
        report.omega_ir = std::numeric_limits<double>::infinity();  // tau = (1,...,1)
    }

    // P2 and omega_neq from the cross-block operators.
    for (int j = 0; j < l; ++j) {
        for (int k = j + 1; k < l; ++k) {
            Matrix G = build_Gjk(blocks[j], blocks[k]);
            Eigen::JacobiSVD<Matrix> dec(G);
            const Vector& sv = dec.singularValues();
            double smallest = sv(sv.size() - 1);
            report.omega_neq = std::min(report.omega_neq, smallest);
            if (smallest <= kRankTol * sv(0) && report.p2_holds) {
                report.p2_holds = false;
                report.p2_offending_pair = {j, k};
            }
        }
    }

    // Perturbation-bound ingredients when the inputs allow them.
    if (A != nullptr && noise != nullptr && noise->phi_p > 0.0) {
        double eps = noise->phi_tail / noise->phi_p;
        report.epsilon = eps;
        Eigen::JacobiSVD<Matrix> adec(A_norm);
        double sigma_min = adec.singularValues()(adec.singularValues().size() - 1);
        double denom = sigma_min * sigma_min * (1.0 - eps * eps);
        report.r = std::sqrt(2.0 * (noise->d + 2.0 * constants.C)) * noise->phi_p * eps / denom;
        if (l > 1) {
            double spread = std::max(constants.kappa / report.omega_neq, 1.0 / report.omega_ir);
            double base = constants.kappa * std::sqrt(static_cast<double>(tau.total())) * (l - 1);
            report.g1 = std::sqrt(2.0) / base - spread * report.r;
            report.g2 = 2.0 / base - spread * report.r;
        }
    }
    return report;
}

SolutionComparison compare_solutions(const Partition& tau, const Matrix& A,
                                     const Partition& tau_hat, const Matrix& A_hat,
                                     double tol) {
    SolutionComparison cmp;
    if (tau.total() != tau_hat.total()) {
        throw PreconditionError("compare_solutions: partitions have different totals");
    }
    PartitionMatch pm = partitions_equivalent(tau, tau_hat);

    const int l = tau.cardinality();
    const int l_hat = tau_hat.cardinality();
    Matrix mass_matrix = (pseudo_inverse(A) * A_hat).cwiseAbs();

    struct Pair {
        double mass;
        int j, k;
    };
    std::vector<Pair> pairs;
    for (int j = 0; j < l; ++j) {
        for (int k = 0; k < l_hat; ++k) {
            if (tau.part(j) != tau_hat.part(k)) continue;  // size-compatible only
            double mass = mass_matrix
                              .block(tau.offset(j), tau_hat.offset(k), tau.part(j),
                                     tau_hat.part(k))
                              .norm();
            pairs.push_back({mass, j, k});
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return a.mass > b.mass;
    });

    cmp.permutation.assign(l, -1);
    std::vector<bool> cand_used(l_hat, false);
    int matched = 0;
    for (const Pair& pair : pairs) {
        if (cmp.permutation[pair.j] >= 0 || cand_used[pair.k]) continue;
        cmp.permutation[pair.j] = pair.k;
        cand_used[pair.k] = true;
        ++matched;
    }
    if (matched < l || l != l_hat) {
        cmp.note = "no size-compatible matching of all blocks";
        cmp.equivalent = false;
        return cmp;
    }

    // Per-block least-squares D and the matched-block error.
    Matrix residual_target(A.rows(), A.cols());
    Matrix AD(A.rows(), A.cols());
    for (int j = 0; j < l; ++j) {
        int k = cmp.permutation[j];
        Matrix A_j = A.middleCols(tau.offset(j), tau.part(j));
        Matrix Ahat_k = A_hat.middleCols(tau_hat.offset(k), tau_hat.part(k));
        Matrix D_j = A_j.colPivHouseholderQr().solve(Ahat_k);
        AD.middleCols(tau.offset(j), tau.part(j)) = A_j * D_j;
        residual_target.middleCols(tau.offset(j), tau.part(j)) = Ahat_k;
    }
    cmp.block_error = (residual_target - AD).norm() / A.norm();
    cmp.equivalent = pm.equivalent && cmp.block_error <= tol;
    return cmp;
}

}  // namespace mjbd
