#include "mjbd/zeig.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "mjbd/linalg.hpp"
#include "mjbd/rng.hpp"

namespace mjbd {

NullBasis deflate_identity(const NullBasis& basis) {
    const int s = basis.size();
    if (s == 0) {
        throw PreconditionError("deflate_identity: basis is empty");
    }
    const int q = basis.q();

    Vector traces(s);
    for (int j = 0; j < s; ++j) traces(j) = basis.basis[j].trace();

    NullBasis out;
    out.sigma_kept = basis.sigma_kept;
    out.sigma_next = basis.sigma_next;
    out.delta = basis.delta;

    if (traces.norm() <= 1e-8 * std::sqrt(static_cast<double>(q))) {
        out.basis = basis.basis;  // already traceless
        return out;
    }

    // Orthonormal basis of traces^perp, mapped back to matrices. The basis
    // matrices are orthonormal, so orthonormality survives the mixing.
    Eigen::HouseholderQR<Matrix> qr(traces);
    Matrix Q = qr.householderQ();  // first column is traces / ||traces||
    out.basis.reserve(s - 1);
    for (int k = 1; k < s; ++k) {
        Matrix combined = Matrix::Zero(q, q);
        for (int j = 0; j < s; ++j) {
            combined += Q(j, k) * basis.basis[j];
        }
        out.basis.push_back(std::move(combined));
    }
    return out;
}

QuarticForm build_quartic(const NullBasis& basis) {
    const int s = basis.size();
    if (s == 0) {
        throw PreconditionError("build_quartic: basis is empty");
    }

    Matrix K(s, s);
    for (int i = 0; i < s; ++i) {
        for (int j = i; j < s; ++j) {
            double value = (basis.basis[i] * basis.basis[j]).trace();
            K(i, j) = value;
            K(j, i) = value;
        }
    }

    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) {
        throw DegenerateInputError("build_quartic: trace Gram K is not positive definite");
    }
    Matrix G = llt.matrixU();  // K = G^T G

    kernels::Tensor4 M = kernels::par::quartic_trace_tensor(basis.basis);
    Matrix G_inv_t = G.triangularView<Eigen::Upper>()
                         .solve(Matrix::Identity(s, s))
                         .transpose();
    kernels::Tensor4 N = kernels::par::mode_transform4(M, G_inv_t);

    return {std::move(N), std::move(K), std::move(G), basis};
}

namespace {

// T[beta^2]: the s x s matrix sum_{kl} T_{ijkl} beta_k beta_l.
Matrix tensor_contract2(const kernels::Tensor4& T, const Vector& beta) {
    const int s = T.s;
    Matrix M(s, s);
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            double acc = 0.0;
            for (int k = 0; k < s; ++k) {
                double bk = beta(k);
                for (int l = 0; l < s; ++l) {
                    acc += T(i, j, k, l) * bk * beta(l);
                }
            }
            M(i, j) = acc;
        }
    }
    return M;
}

// Riemannian Newton steps on the sphere for the stationarity condition
// N beta^3 = lambda beta. Quadratic near a nondegenerate point, which
// the shifted power iteration approaches only linearly.
bool newton_polish(const kernels::Tensor4& N, Vector& beta, double& lambda, double tol,
                   int steps) {
    const int s = static_cast<int>(beta.size());
    for (int it = 0; it < steps; ++it) {
        Vector g = kernels::par::tensor_apply3(N, beta);
        lambda = beta.dot(g);
        Vector residual = g - lambda * beta;
        if (residual.norm() <= tol) return true;

        Matrix P = Matrix::Identity(s, s) - beta * beta.transpose();
        Matrix H = P * (3.0 * tensor_contract2(N, beta) - lambda * Matrix::Identity(s, s)) * P +
                   beta * beta.transpose();
        Vector step = H.fullPivLu().solve(-(P * residual));
        if (!step.allFinite()) return false;
        Vector candidate = (beta + step).normalized();
        Vector g_new = kernels::par::tensor_apply3(N, candidate);
        double lambda_new = candidate.dot(g_new);
        if ((g_new - lambda_new * candidate).norm() >= residual.norm()) return false;
        beta = candidate;
    }
    Vector g = kernels::par::tensor_apply3(N, beta);
    lambda = beta.dot(g);
    return (g - lambda * beta).norm() <= tol;
}

}  // namespace

ZeigResult min_z_eigen(const QuarticForm& form, const ZeigOptions& opts) {
    if (opts.restarts < 1) {
        throw PreconditionError("min_z_eigen: need at least one restart");
    }
    const kernels::Tensor4& N = form.order4;
    const int s = N.s;

    if (s == 1) {
        ZeigResult result;
        result.lambda = N(0, 0, 0, 0);
        result.beta = Vector::Ones(1);
        result.converged = true;
        return result;
    }

    // Maximize -N beta^4 with a shift large enough for monotone ascent.
    const double shift = 1.0 + N.abs_sum();
    // Newton polish cadence: the power iteration's linear rate can stall
    // near flat optima, so the quadratic step finishes the job.
    const int polish_every = 250;

    struct Attempt {
        double lambda = std::numeric_limits<double>::infinity();
        Vector beta;
        int iterations = 0;
        bool converged = false;
    };
    std::vector<Attempt> attempts(opts.restarts);

    CounterRng seeder(opts.seed);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < opts.restarts; ++r) {
        CounterRng rng = seeder.substream(static_cast<std::uint64_t>(r));
        Vector beta(s);
        for (int j = 0; j < s; ++j) beta(j) = rng.normal();
        beta.normalize();

        Attempt& attempt = attempts[r];
        for (int it = 0; it < opts.max_iterations; ++it) {
            Vector g = kernels::par::tensor_apply3(N, beta);
            double lambda = beta.dot(g);
            if ((g - lambda * beta).norm() <= opts.tol) {
                attempt.lambda = lambda;
                attempt.beta = beta;
                attempt.iterations = it;
                attempt.converged = true;
                break;
            }
            if (it > 0 && it % polish_every == 0) {
                Vector polished = beta;
                double lambda_p = lambda;
                // accept only a descent-side stationary point
                if (newton_polish(N, polished, lambda_p, opts.tol, 25) &&
                    lambda_p <= lambda + 1e-8 * (1.0 + std::abs(lambda))) {
                    attempt.lambda = lambda_p;
                    attempt.beta = polished;
                    attempt.iterations = it;
                    attempt.converged = true;
                    break;
                }
            }
            Vector next = -g + shift * beta;
            beta = next / next.norm();
        }
        if (!attempt.converged) {
            Vector g = kernels::par::tensor_apply3(N, beta);
            attempt.lambda = beta.dot(g);
            attempt.beta = beta;
            attempt.iterations = opts.max_iterations;
        }
    }

    // Deterministic reduction: best objective, ties to the lowest index.
    int best = -1;
    for (int r = 0; r < opts.restarts; ++r) {
        if (!attempts[r].converged) continue;
        if (best < 0 || attempts[r].lambda < attempts[best].lambda) best = r;
    }
    if (best < 0) {
        double best_seen = std::numeric_limits<double>::infinity();
        for (const Attempt& attempt : attempts) best_seen = std::min(best_seen, attempt.lambda);
        std::ostringstream msg;
        msg << "min_z_eigen: no restart converged within " << opts.max_iterations
            << " iterations (best objective " << best_seen << ")";
        throw ConvergenceError(msg.str(), best_seen);
    }
    const Attempt& chosen = attempts[best];
    return {chosen.lambda, chosen.beta, chosen.iterations, true};
}

OptSolution solve_opt(const MatrixSet& set, const DeltaSpec& delta, const ZeigOptions& opts) {
    const int q = set.d();

    NullBasis null = null_basis(set, delta);
    OptSolution solution;
    solution.null_dimension = null.size();
    solution.delta_used = null.delta;
    if (null.size() == 0) {
        return solution;  // infeasible: not even the identity direction kept
    }

    NullBasis deflated = deflate_identity(null);
    if (deflated.size() == 0) {
        return solution;  // feasible set empty
    }

    Matrix K(deflated.size(), deflated.size());
    for (int i = 0; i < deflated.size(); ++i) {
        for (int j = i; j < deflated.size(); ++j) {
            double value = (deflated.basis[i] * deflated.basis[j]).trace();
            K(i, j) = value;
            K(j, i) = value;
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
    solution.gram_min_eigenvalue = eig.eigenvalues()(0);
    if (eig.eigenvalues()(0) <= 1e-10 * K.trace() / deflated.size()) {
        return solution;  // tr(X^2) is not positive on the span
    }

    QuarticForm form;
    try {
        form = build_quartic(deflated);
    } catch (const DegenerateInputError&) {
        return solution;  // Cholesky failed despite the eigenvalue margin
    }
    ZeigResult zres = min_z_eigen(form, opts);

    Vector alpha = form.chol.triangularView<Eigen::Upper>().solve(zres.beta);
    Matrix x_star = Matrix::Zero(q, q);
    for (int j = 0; j < deflated.size(); ++j) {
        x_star += alpha(j) * deflated.basis[j];
    }
    // beta is unit-norm so tr(X^2) = 1 up to rounding; rescale to exactly q.
    double tr2 = (x_star * x_star).trace();
    x_star *= std::sqrt(static_cast<double>(q) / tr2);

    solution.x_star = std::move(x_star);
    solution.objective =
        (solution.x_star * solution.x_star * solution.x_star * solution.x_star).trace();
    Eigen::EigenSolver<Matrix> es(solution.x_star);
    if (es.info() != Eigen::Success) {
        throw NumericalError("solve_opt: eigenvalue computation for X* failed");
    }
    solution.eigenvalues = es.eigenvalues();
    solution.feasible = true;
    return solution;
}

}  // namespace mjbd
