#include "mjbd/commutant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mjbd/kernels.hpp"
#include "mjbd/linalg.hpp"

namespace mjbd {

Matrix perfect_shuffle(int q) {
    if (q < 1) {
        throw PreconditionError("perfect_shuffle: q must be at least 1");
    }
    Matrix pi = Matrix::Zero(q * q, q * q);
    // Entry (i, j) of X sits at position j*q + i of vec(X) and at i*q + j
    // of vec(X^T).
    for (int i = 0; i < q; ++i) {
        for (int j = 0; j < q; ++j) {
            pi(j * q + i, i * q + j) = 1.0;
        }
    }
    return pi;
}

Matrix build_L(const MatrixSet& set) {
    return kernels::par::commutant_operator(set);
}

NullBasis null_basis(const MatrixSet& set, const DeltaSpec& delta) {
    const int q = set.d();
    const int q2 = q * q;
    Matrix L = build_L(set);
    Svd dec = svd(L);

    const int total = static_cast<int>(dec.singular_values.size());
    const double sigma_max = total > 0 ? dec.singular_values(0) : 0.0;

    int kept = 0;
    double threshold = 0.0;
    if (delta.mode == DeltaSpec::Mode::fixed) {
        if (delta.base < 0.0) {
            throw PreconditionError("null_basis: delta must be nonnegative");
        }
        threshold = delta.resolve(sigma_max);
        // A threshold within rounding distance of a singular value makes
        // membership irreproducible. Exact ties are kept deterministically
        // by the <= rule, so only near-misses are ambiguous.
        const double ambiguity = 1e-12 * sigma_max;
        for (Eigen::Index i = 0; i < total; ++i) {
            double sv = dec.singular_values(i);
            if (sv != threshold && std::abs(sv - threshold) <= ambiguity) {
                std::ostringstream msg;
                msg << "null_basis: delta=" << threshold << " falls on singular value " << sv
                    << "; perturb delta";
                throw AmbiguousThresholdError(msg.str());
            }
        }
        for (Eigen::Index i = 0; i < total; ++i) {
            if (dec.singular_values(i) <= threshold) ++kept;
        }
    } else {
        // Largest leading group separated from the bulk by gap_ratio.
        // Values ascend as sigma(total-1), sigma(total-2), ...
        for (int k = 1; k < total; ++k) {
            double low = dec.singular_values(total - k);
            double high = dec.singular_values(total - k - 1);
            if (low < delta.gap_ratio * high) kept = k;
        }
        if (kept > 0) {
            double low = dec.singular_values(total - kept);
            double high = dec.singular_values(total - kept - 1);
            threshold = std::max(low, delta.floor_coeff * sigma_max);
            if (threshold >= high) threshold = 0.5 * (low + high);
        } else {
            threshold = delta.floor_coeff * sigma_max;
        }
    }

    NullBasis result;
    result.delta = threshold;
    result.sigma_kept.resize(kept);
    result.basis.reserve(kept);
    for (int k = 0; k < kept; ++k) {
        int col = total - 1 - k;  // ascending singular values
        result.sigma_kept(k) = dec.singular_values(col);
        result.basis.push_back(unvec(dec.V.col(col), q, q));
    }
    if (kept < q2) {
        result.sigma_next = dec.singular_values(total - 1 - kept);
    }
    return result;
}

NullBasis null_basis(const MatrixSet& set, double delta) {
    return null_basis(set, DeltaSpec::exact(delta));
}

std::vector<double> gap_candidates(const MatrixSet& set, double max_ratio, int max_candidates) {
    Svd dec = svd(build_L(set));
    const int total = static_cast<int>(dec.singular_values.size());
    auto ascending = [&](int k) { return dec.singular_values(total - k); };  // k in 1..total

    struct Candidate {
        double ratio;
        double delta;
    };
    std::vector<Candidate> found;
    for (int k = 2; k < total; ++k) {
        double low = ascending(k);
        double high = ascending(k + 1);
        double ratio = high > 0.0 ? low / high : 1.0;
        if (ratio < max_ratio) {
            double delta = low > 0.0 ? std::sqrt(low * high) : 0.5 * high;
            found.push_back({ratio, delta});
        }
    }
    std::stable_sort(found.begin(), found.end(),
                     [](const Candidate& a, const Candidate& b) { return a.ratio < b.ratio; });
    if (static_cast<int>(found.size()) > max_candidates) found.resize(max_candidates);

    std::vector<double> deltas;
    deltas.reserve(found.size());
    for (const Candidate& c : found) deltas.push_back(c.delta);
    return deltas;
}

}  // namespace mjbd
