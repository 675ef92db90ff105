#include "mjbd/bibd.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mjbd/kernels.hpp"
#include "mjbd/linalg.hpp"

namespace mjbd {

SpectrumSplit split_spectrum(const Eigen::VectorXcd& eigenvalues, double delta) {
    const int q = static_cast<int>(eigenvalues.size());
    if (q < 2) {
        throw NoReliableSplitError("split_spectrum: need at least two eigenvalues");
    }
    std::vector<double> re(q);
    for (int i = 0; i < q; ++i) re[i] = eigenvalues(i).real();
    std::vector<int> order(q);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return re[a] > re[b]; });

    int cut_at = -1;
    double best_gap = -1.0;
    for (int i = 0; i + 1 < q; ++i) {
        double gap = re[order[i]] - re[order[i + 1]];
        if (gap > best_gap) {
            best_gap = gap;
            cut_at = i;
        }
    }
    if (best_gap < 1.0) {
        std::ostringstream msg;
        msg << "split_spectrum: largest real-part gap " << best_gap
            << " is below 1 (delta=" << delta << ")";
        throw NoReliableSplitError(msg.str());
    }

    SpectrumSplit split;
    split.q1 = cut_at + 1;
    split.q2 = q - split.q1;
    split.gap = best_gap;
    split.cut = 0.5 * (re[order[cut_at]] + re[order[cut_at + 1]]);
    double sum1 = 0.0, sum2 = 0.0;
    for (int i = 0; i < q; ++i) {
        if (i <= cut_at) {
            sum1 += re[order[i]];
            split.group1.push_back(order[i]);
        } else {
            sum2 += re[order[i]];
        }
    }
    split.rho1 = sum1 / split.q1;
    split.rho2 = sum2 / split.q2;
    return split;
}

SpectrumSplit split_spectrum(const Matrix& x_star, double delta) {
    Eigen::EigenSolver<Matrix> es(x_star);
    if (es.info() != Eigen::Success) {
        throw NumericalError("split_spectrum: eigenvalue computation failed");
    }
    return split_spectrum(es.eigenvalues(), delta);
}

namespace {

// Solves A X - X B = C through the Kronecker form. Returns the smallest
// singular value of the operator alongside the solution.
std::pair<Matrix, double> solve_sylvester(const Matrix& A, const Matrix& B, const Matrix& C) {
    const int p = static_cast<int>(A.rows());
    const int q = static_cast<int>(B.rows());
    Matrix op = kron(Matrix::Identity(q, q), A) - kron(B.transpose(), Matrix::Identity(p, p));
    Eigen::JacobiSVD<Matrix> dec(op, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = dec.singularValues();
    double sep = sv(sv.size() - 1);
    Vector x = dec.solve(vec(C));
    return {unvec(x, p, q), sep};
}

// Exchanges the adjacent diagonal blocks at `off` (sizes p then q) of the
// quasi-triangular T through an orthogonal similarity, accumulated into Q.
void swap_adjacent_blocks(Matrix& T, Matrix& Q, int off, int p, int q) {
    Matrix A11 = T.block(off, off, p, p);
    Matrix A22 = T.block(off + p, off + p, q, q);
    Matrix A12 = T.block(off, off + p, p, q);

    auto [X, sep] = solve_sylvester(A11, A22, -A12);
    if (!(sep > 1e-12 * (A11.norm() + A22.norm() + 1.0))) {
        throw SplitUnstableError("block reordering: adjacent eigenvalues too close to swap");
    }

    // [X; I] spans the invariant subspace of the 2x2 block body for A22.
    Matrix W(p + q, q);
    W.topRows(p) = X;
    W.bottomRows(q) = Matrix::Identity(q, q);
    Eigen::HouseholderQR<Matrix> qr(W);
    Matrix V = qr.householderQ();

    T.middleRows(off, p + q) = V.transpose() * T.middleRows(off, p + q);
    T.middleCols(off, p + q) = T.middleCols(off, p + q) * V;
    Q.middleCols(off, p + q) = Q.middleCols(off, p + q) * V;

    double residual = T.block(off + q, off, p, q).norm();
    if (residual > 1e-8 * std::max(1.0, T.norm())) {
        throw SplitUnstableError("block reordering: swap left a large subdiagonal residual");
    }
    T.block(off + q, off, p, q).setZero();
}

struct SchurBlock {
    int size = 1;
    double re = 0.0;  // shared real part of the block's eigenvalue(s)
};

}  // namespace

BlockFactorization block_factorize(const Matrix& x_star, const SpectrumSplit& split) {
    const int q = static_cast<int>(x_star.rows());
    Eigen::RealSchur<Matrix> schur(x_star);
    if (schur.info() != Eigen::Success) {
        throw SplitUnstableError("block_factorize: real Schur iteration did not converge");
    }
    Matrix T = schur.matrixT();
    Matrix Q = schur.matrixU();

    // Diagonal block structure; 2x2 bumps carry conjugate pairs.
    std::vector<SchurBlock> blocks;
    for (int i = 0; i < q;) {
        SchurBlock block;
        if (i + 1 < q && T(i + 1, i) != 0.0) {
            block.size = 2;
            block.re = 0.5 * (T(i, i) + T(i + 1, i + 1));
        } else {
            block.size = 1;
            block.re = T(i, i);
        }
        blocks.push_back(block);
        i += block.size;
    }

    // Bubble every cluster-1 block (real part above the cut) to the front.
    int insert = 0;
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
        if (blocks[b].re <= split.cut) continue;
        for (int k = b; k > insert; --k) {
            int off = 0;
            for (int j = 0; j < k - 1; ++j) off += blocks[j].size;
            swap_adjacent_blocks(T, Q, off, blocks[k - 1].size, blocks[k].size);
            std::swap(blocks[k - 1], blocks[k]);
        }
        ++insert;
    }

    int q1 = 0;
    for (int b = 0; b < insert; ++b) q1 += blocks[b].size;
    if (q1 != split.q1) {
        throw SplitUnstableError(
            "block_factorize: Schur block classification disagrees with the spectrum split");
    }
    const int q2 = q - q1;

    Matrix gamma1 = T.topLeftCorner(q1, q1);
    Matrix gamma2 = T.bottomRightCorner(q2, q2);
    auto [S, sep] = solve_sylvester(gamma1, gamma2, -T.topRightCorner(q1, q2));
    if (sep < 1e-10) {
        throw SplitUnstableError("block_factorize: Sylvester operator nearly singular");
    }

    Matrix right = Matrix::Identity(q, q);
    right.topRightCorner(q1, q2) = S;
    Matrix right_inv = Matrix::Identity(q, q);
    right_inv.topRightCorner(q1, q2) = -S;

    BlockFactorization out;
    out.Y = Q * right;
    out.Y_inv = right_inv * Q.transpose();
    out.gamma1 = std::move(gamma1);
    out.gamma2 = std::move(gamma2);
    out.sep = sep;

    Matrix block_diag = Matrix::Zero(q, q);
    block_diag.topLeftCorner(q1, q1) = out.gamma1;
    block_diag.bottomRightCorner(q2, q2) = out.gamma2;
    double recon = (x_star - out.Y * block_diag * out.Y_inv).norm();
    if (recon > 1e-8 * std::max(1.0, x_star.norm())) {
        throw SplitUnstableError("block_factorize: reconstruction residual too large");
    }
    return out;
}

BiSplit bi_block_diagonalize(const MatrixSet& set, const DeltaSpec& delta,
                             const ZeigOptions& opts) {
    const int q = set.d();

    OptSolution sol;
    DeltaSpec attempt = delta;
    for (int tries = 0;; ++tries) {
        try {
            sol = solve_opt(set, attempt, opts);
            break;
        } catch (const AmbiguousThresholdError&) {
            if (tries >= 3) throw;
            // nudge the threshold off the singular value and retry
            attempt.base = attempt.base * (1.0 + 1e-6) + 1e-14;
            attempt.floor_coeff *= (1.0 + 1e-6);
        }
    }

    BiSplit out;
    out.Z = Matrix::Identity(q, q);
    out.Y = Matrix::Identity(q, q);
    out.partition = Partition({q});
    out.delta_used = sol.delta_used;
    if (!sol.feasible) {
        return out;
    }
    out.x_star_eigenvalues = sol.eigenvalues;

    SpectrumSplit split;
    try {
        split = split_spectrum(sol.eigenvalues, sol.delta_used);
    } catch (const NoReliableSplitError& err) {
        out.warning = err.what();
        return out;
    }

    BlockFactorization factor = block_factorize(sol.x_star, split);

    Partition two({split.q1, split.q2});
    // Z^-1 D_i Z^-T = Y^T D_i Y
    double residual = kernels::par::offblock_sq_sum(set, factor.Y.transpose(), two);

    // delta-diagonalizer contract: a genuine split leaves only noise-order
    // off-block mass behind. A residual that is a sizable fraction of the
    // set's own mass marks the split as spurious.
    double mass = 0.0;
    for (const Matrix& D : set) mass += D.squaredNorm();
    const double residual_cap = 1e-3 * mass;
    if (residual > residual_cap) {
        std::ostringstream msg;
        msg << "split rejected: off-block residual " << residual << " exceeds 1e-3 of the set mass "
            << mass;
        out.warning = msg.str();
        return out;
    }

    out.split = true;
    out.partition = std::move(two);
    out.Z = factor.Y_inv.transpose();
    out.Y = factor.Y;
    out.rho1 = split.rho1;
    out.rho2 = split.rho2;
    out.z_condition = condition_number(out.Z);
    out.split_residual = residual;
    return out;
}

}  // namespace mjbd
