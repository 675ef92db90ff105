#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "mjbd/linalg.hpp"
#include "mjbd/synth.hpp"
#include "mjbd/zeig.hpp"
#include "support.hpp"

using namespace mjbd;
using testsupport::random_matrix;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

NullBasis basis_from(std::vector<Matrix> mats) {
    NullBasis nb;
    nb.basis = std::move(mats);
    nb.sigma_kept = Vector::Zero(nb.basis.size());
    return nb;
}

Matrix traceless_unit() {
    Matrix X(2, 2);
    X << 1, 0, 0, -1;
    return X / X.norm();
}

}  // namespace

TEST_CASE("identity deflation drops exactly the traced direction") {
    const int q = 3;
    Matrix id = Matrix::Identity(q, q) / std::sqrt(3.0);

    SUBCASE("pure identity basis becomes empty") {
        auto out = deflate_identity(basis_from({id}));
        CHECK(out.size() == 0);
    }
    SUBCASE("a traceless basis passes through") {
        Matrix X1 = traceless_unit();
        Matrix id2 = Matrix::Identity(2, 2) / std::sqrt(2.0);
        auto out = deflate_identity(basis_from({id2, X1}));
        REQUIRE(out.size() == 1);
        CHECK(std::abs(std::abs((out.basis[0].transpose() * X1).trace()) - 1.0) <= 1e-12);
    }
    SUBCASE("a random span containing the identity loses one dimension") {
        CounterRng rng(3);
        // orthonormalize three directions, the first being vec(I)
        Matrix raw(q * q, 3);
        raw.col(0) = vec(Matrix::Identity(q, q));
        raw.col(1) = vec(random_matrix(rng, q, q));
        raw.col(2) = vec(random_matrix(rng, q, q));
        Eigen::HouseholderQR<Matrix> qr(raw);
        Matrix Q = Matrix(qr.householderQ()).leftCols(3);
        auto out = deflate_identity(
            basis_from({unvec(Q.col(0), q, q), unvec(Q.col(1), q, q), unvec(Q.col(2), q, q)}));
        REQUIRE(out.size() == 2);
        for (const Matrix& X : out.basis) {
            CHECK(std::abs(X.trace()) <= 1e-12);
            CHECK(X.norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
        // still orthonormal
        CHECK(std::abs((out.basis[0].transpose() * out.basis[1]).trace()) <= 1e-12);
    }
}

TEST_CASE("the reduced quartic reproduces tr(X^4)") {
    SUBCASE("one traceless element") {
        auto form = build_quartic(basis_from({traceless_unit()}));
        CHECK(form.gram(0, 0) == doctest::Approx(1.0));
        double direct = (traceless_unit() * traceless_unit() * traceless_unit() *
                         traceless_unit()).trace();
        CHECK(form.order4(0, 0, 0, 0) == doctest::Approx(direct).epsilon(1e-12));
        CHECK(direct == doctest::Approx(0.5));
    }
    SUBCASE("random spans evaluate consistently") {
        CounterRng rng(5);
        const int q = 4;
        // traceless orthonormal triple of symmetric matrices, so the trace
        // form stays positive definite on the span
        Matrix raw(q * q, 4);
        raw.col(0) = vec(Matrix::Identity(q, q));
        for (int c = 1; c < 4; ++c) {
            Matrix g = random_matrix(rng, q, q);
            raw.col(c) = vec(Matrix(0.5 * (g + g.transpose())));
        }
        Eigen::HouseholderQR<Matrix> qr(raw);
        Matrix Q = Matrix(qr.householderQ()).leftCols(4);
        std::vector<Matrix> mats;
        for (int c = 1; c < 4; ++c) mats.push_back(unvec(Q.col(c), q, q));
        auto form = build_quartic(basis_from(mats));

        for (int trial = 0; trial < 20; ++trial) {
            Vector beta = random_matrix(rng, 3, 1).col(0).normalized();
            Vector alpha = form.chol.triangularView<Eigen::Upper>().solve(beta);
            Matrix X = Matrix::Zero(q, q);
            for (int j = 0; j < 3; ++j) X += alpha(j) * mats[j];
            double direct = (X * X * X * X).trace();
            double reduced = kernels::tensor_quad(form.order4, beta);
            CHECK(reduced == doctest::Approx(direct).epsilon(1e-8));
            // the constraint carries over: beta unit <=> tr(X^2) = 1
            CHECK((X * X).trace() == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
    SUBCASE("cholesky factor reproduces the gram matrix") {
        CounterRng rng(6);
        auto inst = gen_example1(6, 5, 5, Partition({2, 3}), kInf, 12);
        auto nb = deflate_identity(null_basis(inst.observed, DeltaSpec::fixed(0.0, 1e-10)));
        auto form = build_quartic(nb);
        CHECK((form.chol.transpose() * form.chol - form.gram).norm() <=
              1e-12 * (1.0 + form.gram.norm()));
    }
}

TEST_CASE("minimum Z-eigenpairs") {
    SUBCASE("one-dimensional sphere") {
        auto form = build_quartic(basis_from({traceless_unit()}));
        auto res = min_z_eigen(form);
        CHECK(res.converged);
        CHECK(res.lambda == doctest::Approx(0.5));
        CHECK(std::abs(res.beta(0)) == doctest::Approx(1.0));
    }
    SUBCASE("diagonal tensors with a negative axis minimum") {
        // KKT points of diagonal quartics include the axes; with a negative
        // entry the global minimum sits on that axis.
        kernels::Tensor4 T = kernels::Tensor4::zeros(3);
        Vector c(3);
        c << 2.0, -1.0, 0.5;
        for (int i = 0; i < 3; ++i) T(i, i, i, i) = c(i);
        QuarticForm form{T, Matrix::Identity(3, 3), Matrix::Identity(3, 3), {}};
        auto res = min_z_eigen(form, {16, 5000, 1e-10, 1});
        CHECK(res.converged);
        CHECK(res.lambda == doctest::Approx(-1.0).epsilon(1e-8));
        CHECK(std::abs(res.beta(1)) == doctest::Approx(1.0).epsilon(1e-6));
        // grid oracle agrees
        CHECK(testsupport::sphere_grid_min(T) == doctest::Approx(res.lambda).epsilon(1e-6));
    }
    SUBCASE("grid oracle agreement on whitened quartics, s <= 3") {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            auto inst = gen_example1(8, 6, 6, Partition({2, 4}), kInf, 50 + seed);
            auto nb = deflate_identity(null_basis(inst.observed, DeltaSpec::fixed(0.0, 1e-10)));
            REQUIRE(nb.size() == 1);
            auto form = build_quartic(nb);
            auto res = min_z_eigen(form, {16, 5000, 1e-10, seed});
            CHECK(res.converged);
            double oracle = testsupport::sphere_grid_min(form.order4);
            CHECK(res.lambda == doctest::Approx(oracle).epsilon(1e-6));
        }
        // a three-block instance leaves a two-dimensional deflated basis
        auto inst = gen_example1(8, 7, 7, Partition({2, 2, 3}), kInf, 60);
        auto nb = deflate_identity(null_basis(inst.observed, DeltaSpec::fixed(0.0, 1e-10)));
        REQUIRE(nb.size() == 2);
        auto form = build_quartic(nb);
        auto res = min_z_eigen(form, {16, 5000, 1e-10, 4});
        CHECK(res.converged);
        double oracle = testsupport::sphere_grid_min(form.order4);
        CHECK(res.lambda == doctest::Approx(oracle).epsilon(1e-6));
    }
}

TEST_CASE("solve_opt recovers the planted two-cluster spectrum") {
    auto check_spectrum = [](const OptSolution& sol, int q1, int q2, double tol) {
        REQUIRE(sol.feasible);
        double g1 = std::sqrt(double(q2) / q1);
        double g2 = -std::sqrt(double(q1) / q2);
        std::vector<double> re;
        for (int i = 0; i < sol.eigenvalues.size(); ++i) re.push_back(sol.eigenvalues(i).real());
        std::sort(re.begin(), re.end(), std::greater<>());
        int hits_direct = 0, hits_flipped = 0;
        for (double value : re) {
            if (std::abs(value - g1) <= tol || std::abs(value - g2) <= tol) ++hits_direct;
            if (std::abs(value + g1) <= tol || std::abs(value + g2) <= tol) ++hits_flipped;
        }
        // X* and -X* are equally optimal; accept either orientation
        CHECK(std::max(hits_direct, hits_flipped) == q1 + q2);
    };

    SUBCASE("equal blocks give the unit pair") {
        auto inst = gen_example1(10, 4, 4, Partition({2, 2}), kInf, 70);
        auto sol = solve_opt(inst.observed, DeltaSpec::fixed(0.0, 1e-10), {16, 5000, 1e-10, 5});
        check_spectrum(sol, 2, 2, 1e-6);
        CHECK(std::abs(sol.x_star.trace()) <= 1e-8 * 4);
        CHECK(std::abs((sol.x_star * sol.x_star).trace() - 4.0) <= 1e-8 * 4);
        CHECK(sol.objective == doctest::Approx(4.0).epsilon(1e-8));
    }
    SUBCASE("unequal blocks give the asymmetric pair") {
        auto inst = gen_example1(10, 4, 4, Partition({1, 3}), kInf, 71);
        auto sol = solve_opt(inst.observed, DeltaSpec::fixed(0.0, 1e-10), {16, 5000, 1e-10, 5});
        check_spectrum(sol, 1, 3, 1e-6);
    }
    SUBCASE("irreducible sets are infeasible") {
        auto inst = gen_example1(6, 3, 3, Partition({3}), kInf, 72);
        // irreducibility: the oracle null space is one dimensional
        CHECK(testsupport::null_space_oracle(inst.observed).cols() == 1);
        auto sol = solve_opt(inst.observed, DeltaSpec::fixed(0.0, 1e-10), {});
        CHECK_FALSE(sol.feasible);
        CHECK(sol.null_dimension == 1);
    }
}

TEST_CASE("noisy solutions keep near-real two-cluster spectra") {
    // imaginary parts stay within O(delta / mu), clusters stay separated
    CounterRng zrng(123);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        auto inst = gen_example1(10, 5, 5, Partition({2, 3}), 60.0, 80 + seed);
        Matrix E = testsupport::stacked_error(inst);
        double delta = 2.0 * spectral_norm(E);
        auto sol = solve_opt(inst.observed, DeltaSpec::exact(delta), {16, 5000, 1e-10, seed});
        REQUIRE(sol.feasible);

        // mu estimate over 200 random complex unit vectors
        double mu = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < 200; ++trial) {
            Eigen::VectorXcd z(5);
            for (int i = 0; i < 5; ++i) {
                z(i) = std::complex<double>(zrng.normal(), zrng.normal());
            }
            z /= z.norm();
            double acc = 0.0;
            for (const Matrix& D : inst.observed) {
                std::complex<double> quad = (z.adjoint() * D * z)(0);
                acc += std::norm(quad);
            }
            mu = std::min(mu, std::sqrt(acc));
        }

        double max_imag = 0.0;
        for (int i = 0; i < sol.eigenvalues.size(); ++i) {
            max_imag = std::max(max_imag, std::abs(sol.eigenvalues(i).imag()));
        }
        CHECK(max_imag <= 10.0 * delta / mu);

        // two clusters with gap near 2
        std::vector<double> re;
        for (int i = 0; i < sol.eigenvalues.size(); ++i) re.push_back(sol.eigenvalues(i).real());
        std::sort(re.begin(), re.end(), std::greater<>());
        double best_gap = 0.0;
        for (std::size_t i = 0; i + 1 < re.size(); ++i) {
            best_gap = std::max(best_gap, re[i] - re[i + 1]);
        }
        CHECK(best_gap >= 2.0 - 20.0 * delta);
    }
}

TEST_CASE("feasibility surrogate rejects degenerate trace Grams") {
    // a basis whose tr(X^2) form is indefinite: a skew direction
    Matrix skew(2, 2);
    skew << 0, 1, -1, 0;
    skew /= skew.norm();
    auto sol_basis = basis_from({skew});
    CHECK((skew * skew).trace() < 0.0);
    CHECK_THROWS_AS(build_quartic(sol_basis), DegenerateInputError);
}
