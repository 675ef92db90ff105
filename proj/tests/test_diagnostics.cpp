#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mjbd/bjbdp.hpp"
#include "mjbd/diagnostics.hpp"
#include "mjbd/linalg.hpp"
#include "mjbd/subspace.hpp"
#include "mjbd/synth.hpp"
#include "support.hpp"

using namespace mjbd;
using testsupport::random_matrix;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

/// The two 2x2 families of coupled symmetric blocks sharing off-diagonal
/// entries; their direct sum admits a non-block-diagonal diagonalizer.
std::pair<MatrixSet, MatrixSet> coupled_pair_families(std::uint64_t seed, int m = 5) {
    CounterRng rng(seed);
    std::vector<Matrix> first, second;
    for (int i = 0; i < m; ++i) {
        double a = rng.normal(), b = rng.normal(), c = rng.normal();
        Matrix f(2, 2), s(2, 2);
        f << 0, a, a, b;
        s << 0, a, a, c;
        first.push_back(f);
        second.push_back(s);
    }
    return {MatrixSet(first), MatrixSet(second)};
}

}  // namespace

TEST_CASE("within-block operator realizes its defining equations") {
    CounterRng rng(1);
    auto blocks = testsupport::random_set(rng, 3, 4);
    Matrix G = build_Gjj(blocks);
    REQUIRE(G.rows() == 3 * 16);
    REQUIRE(G.cols() == 16);

    CHECK((G * vec(Matrix::Identity(4, 4))).cwiseAbs().maxCoeff() <= 1e-14 * G.norm());

    for (int trial = 0; trial < 10; ++trial) {
        Matrix gamma = random_matrix(rng, 4, 4);
        Vector image = G * vec(gamma);
        for (int i = 0; i < 3; ++i) {
            Matrix expected = blocks[i] * gamma - gamma.transpose() * blocks[i];
            CHECK((image.segment(16 * i, 16) - vec(expected)).norm() <= 1e-12 * (1 + expected.norm()));
        }
    }

    SUBCASE("scalar blocks commute with everything") {
        CounterRng rng2(2);
        std::vector<Matrix> scalars;
        for (int i = 0; i < 4; ++i) scalars.push_back(random_matrix(rng2, 1, 1));
        Matrix G1 = build_Gjj(MatrixSet(scalars));
        CHECK(G1.norm() == 0.0);
    }
    SUBCASE("generic irreducible blocks have a one-dimensional null space") {
        CounterRng rng3(3);
        auto generic = testsupport::random_set(rng3, 3, 2);
        CHECK(testsupport::null_space_oracle(generic).cols() == 1);
    }
}

TEST_CASE("cross-block operator realizes the coupled equations") {
    CounterRng rng(4);
    const int pj = 2, pk = 3, m = 4;
    std::vector<Matrix> bj, bk;
    for (int i = 0; i < m; ++i) {
        bj.push_back(random_matrix(rng, pj, pj));
        bk.push_back(random_matrix(rng, pk, pk));
    }
    MatrixSet fam_j(bj), fam_k(bk);
    Matrix G = build_Gjk(fam_j, fam_k);
    REQUIRE(G.rows() == 2 * m * pj * pk);
    REQUIRE(G.cols() == 2 * pj * pk);

    for (int trial = 0; trial < 10; ++trial) {
        Matrix gamma_jk = random_matrix(rng, pj, pk);
        Matrix gamma_kj = random_matrix(rng, pk, pj);
        Vector arg(2 * pj * pk);
        arg << vec(gamma_jk), -vec(gamma_kj.transpose());
        Vector image = G * arg;
        for (int i = 0; i < m; ++i) {
            Matrix r1 = bj[i] * gamma_jk - gamma_kj.transpose() * bk[i];
            Matrix r2 = bk[i] * gamma_kj - gamma_jk.transpose() * bj[i];
            Vector expected(2 * pj * pk);
            expected << vec(r1), vec(Matrix(-r2.transpose()));
            CHECK((image.segment(2 * i * pj * pk, 2 * pj * pk) - expected).norm() <=
                  1e-12 * (1.0 + expected.norm()));
        }
    }

    SUBCASE("coupled families are rank deficient") {
        auto [f1, f2] = coupled_pair_families(7);
        Matrix Gc = build_Gjk(f1, f2);
        Eigen::JacobiSVD<Matrix> dec(Gc);
        CHECK(dec.singularValues()(dec.singularValues().size() - 1) <= 1e-10);
    }
    SUBCASE("generic unequal families have full column rank") {
        Eigen::JacobiSVD<Matrix> dec(G);
        const Vector& sv = dec.singularValues();
        CHECK(sv(sv.size() - 1) > 1e-6 * sv(0));
    }
    SUBCASE("identical equal-size families are deficient") {
        Matrix Gs = build_Gjk(fam_k, fam_k);
        Eigen::JacobiSVD<Matrix> dec(Gs);
        const Vector& sv = dec.singularValues();
        // Gamma_jk = Gamma_kj = I solves the coupled equations
        CHECK(sv(sv.size() - 1) <= 1e-12 * sv(0));
    }
}

TEST_CASE("identifiability verdicts") {
    SUBCASE("all-scalar partitions are infinitely irreducible") {
        CounterRng rng(5);
        std::vector<MatrixSet> families;
        for (int j = 0; j < 3; ++j) {
            std::vector<Matrix> scalars;
            for (int i = 0; i < 4; ++i) scalars.push_back(random_matrix(rng, 1, 1));
            families.push_back(MatrixSet(scalars));
        }
        auto report = identifiability(families, Partition({1, 1, 1}), nullptr);
        CHECK(std::isinf(report.omega_ir));
        CHECK(report.p1_holds);
    }
    SUBCASE("coupled families violate the cross-block condition") {
        auto [f1, f2] = coupled_pair_families(8);
        auto report = identifiability({f1, f2}, Partition({2, 2}), nullptr);
        CHECK_FALSE(report.p2_holds);
        CHECK(report.omega_neq <= 1e-10);
        CHECK(report.p2_offending_pair == std::pair<int, int>{0, 1});
    }
    SUBCASE("generic planted instances are unique") {
        int unique_count = 0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            auto inst = gen_example1(10, 15, 12, Partition({2, 3, 3, 4}), kInf, 60 + seed);
            std::vector<MatrixSet> families;
            for (int j = 0; j < 4; ++j) {
                std::vector<Matrix> mats;
                for (const Matrix& sigma : inst.truth_blocks) {
                    mats.push_back(sigma.block(inst.partition.offset(j), inst.partition.offset(j),
                                               inst.partition.part(j), inst.partition.part(j)));
                }
                families.push_back(MatrixSet(mats));
            }
            auto report = identifiability(families, inst.partition, &inst.truth_A);
            if (report.unique()) ++unique_count;
        }
        CHECK(unique_count >= 4);
    }
    SUBCASE("moduli are invariant under orthogonal block gauges") {
        CounterRng rng(9);
        auto inst = gen_example1(8, 7, 5, Partition({2, 3}), kInf, 70);
        std::vector<MatrixSet> families;
        for (int j = 0; j < 2; ++j) {
            std::vector<Matrix> mats;
            for (const Matrix& sigma : inst.truth_blocks) {
                mats.push_back(sigma.block(inst.partition.offset(j), inst.partition.offset(j),
                                           inst.partition.part(j), inst.partition.part(j)));
            }
            families.push_back(MatrixSet(mats));
        }
        auto base = identifiability(families, inst.partition, &inst.truth_A);

        Matrix Q2 = testsupport::random_orthonormal(rng, 2, 2);
        Matrix Q3 = testsupport::random_orthonormal(rng, 3, 3);
        Matrix A_gauged = inst.truth_A;
        A_gauged.leftCols(2) = inst.truth_A.leftCols(2) * Q2;
        A_gauged.rightCols(3) = inst.truth_A.rightCols(3) * Q3;
        std::vector<MatrixSet> gauged;
        {
            std::vector<Matrix> m1, m2;
            for (const Matrix& sigma : families[0]) m1.push_back(Q2.transpose() * sigma * Q2);
            for (const Matrix& sigma : families[1]) m2.push_back(Q3.transpose() * sigma * Q3);
            gauged.push_back(MatrixSet(m1));
            gauged.push_back(MatrixSet(m2));
        }
        auto moved = identifiability(gauged, inst.partition, &A_gauged);
        CHECK(moved.omega_ir == doctest::Approx(base.omega_ir).epsilon(1e-8));
        CHECK(moved.omega_neq == doctest::Approx(base.omega_neq).epsilon(1e-8));
    }
    SUBCASE("bound ingredients appear only with the diagonalizer and noise data") {
        auto inst = gen_example1(8, 7, 5, Partition({2, 3}), 60.0, 71);
        std::vector<MatrixSet> families;
        for (int j = 0; j < 2; ++j) {
            std::vector<Matrix> mats;
            for (const Matrix& sigma : inst.truth_blocks) {
                mats.push_back(sigma.block(inst.partition.offset(j), inst.partition.offset(j),
                                           inst.partition.part(j), inst.partition.part(j)));
            }
            families.push_back(MatrixSet(mats));
        }
        auto partial = identifiability(families, inst.partition, nullptr);
        CHECK(std::isnan(partial.epsilon));

        SpectralProfile profile = spectral_profile(inst.observed);
        NoiseContext noise{profile.singular_values(4), profile.singular_values(5), 7};
        BoundConstants constants{2.0, 1.5};
        auto full = identifiability(families, inst.partition, &inst.truth_A, constants, &noise);
        CHECK(full.epsilon == doctest::Approx(noise.phi_tail / noise.phi_p));
        CHECK(full.r > 0.0);
        CHECK(std::isfinite(full.g1));
        CHECK(std::isfinite(full.g2));
        CHECK(full.g2 > full.g1);  // sqrt(2j) grows with j
    }
}

TEST_CASE("solution comparison up to the gauge group") {
    auto inst = gen_example1(6, 9, 5, Partition({2, 3}), kInf, 80);
    Partition tau = inst.partition;

    SUBCASE("a solution matches itself exactly") {
        auto cmp = compare_solutions(tau, inst.truth_A, tau, inst.truth_A);
        CHECK(cmp.equivalent);
        CHECK(cmp.block_error <= 1e-14);
        CHECK(cmp.permutation == std::vector<int>{0, 1});
    }
    SUBCASE("block scaling and permutation are trivial indeterminacies") {
        CounterRng rng(11);
        Matrix D = Matrix::Zero(5, 5);
        D.block(0, 0, 2, 2) = random_matrix(rng, 2, 2) + 2.0 * Matrix::Identity(2, 2);
        D.block(2, 2, 3, 3) = random_matrix(rng, 3, 3) + 2.0 * Matrix::Identity(3, 3);
        Matrix P = Matrix::Zero(5, 5);
        P.block(0, 3, 2, 2) = Matrix::Identity(2, 2);
        P.block(2, 0, 3, 3) = Matrix::Identity(3, 3);
        Matrix candidate = inst.truth_A * D * P;
        auto cmp = compare_solutions(tau, inst.truth_A, Partition({3, 2}), candidate);
        CHECK(cmp.equivalent);
        CHECK(cmp.block_error <= 1e-10);
        CHECK(cmp.permutation == std::vector<int>{1, 0});
    }
    SUBCASE("solver output at moderate noise stays close to the planted mixing") {
        auto noisy = gen_example1(10, 15, 12, Partition({2, 3, 3, 4}), 40.0, 81);
        SolveOptions opts;
        opts.seed = 81;
        auto res = solve_bjbdp(noisy.observed, opts);
        REQUIRE(partitions_equivalent(noisy.partition, res.solution.partition).equivalent);
        auto cmp = compare_solutions(noisy.partition, noisy.truth_A, res.solution.partition,
                                     res.solution.diagonalizer, 0.1);
        CHECK(cmp.equivalent);
        // error scales with the noise-to-signal ratio
        SpectralProfile profile = spectral_profile(noisy.observed);
        double eps = profile.singular_values(12) / profile.singular_values(11);
        CHECK(cmp.block_error <= 30.0 * eps);

        // the matched cross-Gram is block diagonal up to permutation: the
        // mass outside the matched blocks is noise-order
        Matrix cross = (pseudo_inverse(noisy.truth_A) * res.solution.diagonalizer).cwiseAbs();
        double off_mass = 0.0, total_mass = cross.squaredNorm();
        for (int j = 0; j < 4; ++j) {
            int k = cmp.permutation[j];
            Matrix block = cross.block(noisy.partition.offset(j),
                                       res.solution.partition.offset(k),
                                       noisy.partition.part(j), res.solution.partition.part(k));
            off_mass += block.squaredNorm();
        }
        off_mass = total_mass - off_mass;
        CHECK(off_mass <= 1e-2 * total_mass);
    }
    SUBCASE("size-incompatible partitions cannot match") {
        CounterRng rng(12);
        Matrix other = random_matrix(rng, 9, 5);
        auto cmp = compare_solutions(tau, inst.truth_A, Partition({1, 4}), other);
        CHECK_FALSE(cmp.equivalent);
        CHECK_FALSE(cmp.note.empty());
    }
    SUBCASE("mismatched totals are rejected") {
        CHECK_THROWS_AS(compare_solutions(tau, inst.truth_A, Partition({2, 2}),
                                          inst.truth_A.leftCols(4)),
                        PreconditionError);
    }
}
