#include "mjbd/bjbdp.hpp"

#include <cmath>
#include <sstream>

#include "mjbd/kernels.hpp"
#include "mjbd/linalg.hpp"
#include "mjbd/rng.hpp"

namespace mjbd {

MatrixSet project(const MatrixSet& set, const Matrix& V1) {
    return MatrixSet(kernels::par::congruence_project(set, V1));
}

int select_work_block(const WorkState& state) {
    int best = -1;
    for (int i = 0; i < state.partition.cardinality(); ++i) {
        if (state.done[i]) continue;
        if (best < 0 || state.partition.part(i) > state.partition.part(best)) {
            best = i;
        }
    }
    return best;
}

void apply_split(WorkState& state, int t, const BiSplit& split) {
    const int offset = state.partition.offset(t);
    const int q = state.partition.part(t);

    SplitRecord record;
    record.block_index = t;
    record.offset = offset;
    record.q = q;
    record.delta_used = split.delta_used;
    record.x_star_spectrum = split.x_star_eigenvalues;
    record.note = split.warning;

    if (!split.split) {
        state.done[t] = true;
        state.history.push_back(std::move(record));
        return;
    }

    const int q1 = split.partition.part(0);
    const int q2 = split.partition.part(1);
    record.q1 = q1;
    record.q2 = q2;
    record.rho1 = split.rho1;
    record.rho2 = split.rho2;
    record.split_residual = split.split_residual;
    record.z_condition = split.z_condition;

    // Conjugate the diagonal sub-blocks and drop the coupling between the
    // two fresh blocks; its norm is the consistency check against
    // sqrt(split_residual).
    const Matrix& Y = split.Y;
    double discarded_sq = 0.0;
    for (Matrix& B_i : state.B) {
        Matrix conj = Y.transpose() * B_i.block(offset, offset, q, q) * Y;
        discarded_sq += conj.topRightCorner(q1, q2).squaredNorm() +
                        conj.bottomLeftCorner(q2, q1).squaredNorm();
        conj.topRightCorner(q1, q2).setZero();
        conj.bottomLeftCorner(q2, q1).setZero();
        B_i.block(offset, offset, q, q) = conj;
    }
    record.discarded_coupling = std::sqrt(discarded_sq);

    state.A_hat.middleCols(offset, q) = state.A_hat.middleCols(offset, q) * split.Z;

    std::vector<int> parts = state.partition.parts();
    parts[t] = q1;
    parts.insert(parts.begin() + t + 1, q2);
    state.partition = Partition(parts);

    state.done.insert(state.done.begin() + t + 1, false);
    state.done[t] = false;

    state.history.push_back(std::move(record));
}

namespace {

MatrixSet extract_block(const std::vector<Matrix>& B, int offset, int q) {
    std::vector<Matrix> sub;
    sub.reserve(B.size());
    for (const Matrix& B_i : B) {
        sub.push_back(B_i.block(offset, offset, q, q));
    }
    return MatrixSet(std::move(sub));
}

}  // namespace

SolveResult solve_bjbdp(const MatrixSet& set, const SolveOptions& opts) {
    SolveResult result;
    result.profile = spectral_profile(set);

    int p;
    if (opts.rank) {
        p = *opts.rank;
        if (p < 1 || p > set.d()) {
            throw PreconditionError("solve_bjbdp: explicit rank out of range");
        }
        result.profile.selected_rank = p;
    } else {
        p = estimate_rank(result.profile, opts.xi);
    }

    WorkState state;
    state.partition = Partition({p});
    state.done = {false};
    state.A_hat = range_basis(result.profile, p);
    {
        MatrixSet projected = project(set, state.A_hat);
        state.B.assign(projected.begin(), projected.end());
    }

    ZeigOptions zopts;
    zopts.restarts = opts.restarts;
    zopts.max_iterations = opts.max_iterations;
    zopts.tol = opts.zeig_tol;

    int block_counter = 0;
    for (int t = select_work_block(state); t >= 0; t = select_work_block(state)) {
        const int offset = state.partition.offset(t);
        const int q = state.partition.part(t);
        MatrixSet block_set = extract_block(state.B, offset, q);

        // Automatic policy: one threshold candidate per clear downward gap
        // in the spectrum of L, strongest first; a split must also pass the
        // delta-diagonalizer residual guard inside bi_block_diagonalize.
        std::vector<DeltaSpec> attempts;
        if (opts.delta) {
            attempts.push_back(DeltaSpec::exact(*opts.delta));
        } else {
            for (double delta : gap_candidates(block_set, 0.5, 4)) {
                attempts.push_back(DeltaSpec::exact(delta));
            }
        }

        // One deterministic substream per processed block.
        zopts.seed = CounterRng(opts.seed).substream(0x424C4F434Bu + block_counter).seed();
        ++block_counter;

        BiSplit split;
        bool failed = false;
        for (std::size_t a = 0; a < attempts.size(); ++a) {
            try {
                split = bi_block_diagonalize(block_set, attempts[a], zopts);
                failed = false;
            } catch (const NumericalError& err) {
                split = BiSplit{};
                split.warning = err.what();
                failed = true;
            }
            if (split.split) break;
        }
        if (failed) {
            // Failure containment: close the block, keep the decomposition.
            state.done[t] = true;
            SplitRecord record;
            record.block_index = t;
            record.offset = offset;
            record.q = q;
            record.note = std::string("closed after numerical failure: ") + split.warning;
            state.history.push_back(record);
            result.warnings.push_back(record.note);
            continue;
        }
        if (attempts.empty()) {
            split = BiSplit{};
            split.Z = Matrix::Identity(q, q);
            split.Y = Matrix::Identity(q, q);
            split.partition = Partition({q});
        }

        if (split.split && split.z_condition > 1e12) {
            state.done[t] = true;
            SplitRecord record;
            record.block_index = t;
            record.offset = offset;
            record.q = q;
            record.delta_used = split.delta_used;
            record.x_star_spectrum = split.x_star_eigenvalues;
            std::ostringstream note;
            note << "split rejected: conjugation condition " << split.z_condition << " above 1e12";
            record.note = note.str();
            state.history.push_back(record);
            result.warnings.push_back(record.note);
            continue;
        }

        if (!split.split && !split.warning.empty()) {
            result.warnings.push_back(split.warning);
        }
        apply_split(state, t, split);
    }

    // Assemble the solution: Sigma_i = Bdiag(A^+ C_i A^+T), exactly
    // block diagonal by construction.
    Matrix pinv = pseudo_inverse(state.A_hat);
    std::vector<Matrix> blocks;
    blocks.reserve(set.m());
    for (int i = 0; i < set.m(); ++i) {
        Matrix full = pinv * set[i] * pinv.transpose();
        blocks.push_back(block_diag_part(full, state.partition));
    }

    result.solution.partition = state.partition;
    result.solution.diagonalizer = state.A_hat;
    result.solution.blocks = MatrixSet(std::move(blocks));
    result.solution.rank = p;
    result.solution.residual = offblock_residual(set, state.A_hat, state.partition);
    result.a_condition = condition_number(state.A_hat);
    result.history = std::move(state.history);
    return result;
}

}  // namespace mjbd
