#include "weaktomo/matrix_core.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace weaktomo;

TEST(HermitianEig, identity) {
    const EigenDecomposition e = hermitian_eig(ComplexMatrix::Identity(2, 2));
    EXPECT_NEAR(e.eigenvalues(0), 1.0, 1e-14);
    EXPECT_NEAR(e.eigenvalues(1), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(e.eigenvectors[0].inner(e.eigenvectors[1])), 0.0, 1e-14);
}

TEST(HermitianEig, pauli_z_is_diagonal) {
    const EigenDecomposition e = hermitian_eig(pauli_z());
    EXPECT_NEAR(e.eigenvalues(0), 1.0, 1e-14);
    EXPECT_NEAR(e.eigenvalues(1), -1.0, 1e-14);
    // Phase canonicalization makes the eigenvectors exactly e_1, e_2.
    EXPECT_TRUE(approx_equal(e.eigenvectors[0].amplitudes(), PureState::basis(2, 0).amplitudes(), 1e-14));
    EXPECT_TRUE(approx_equal(e.eigenvectors[1].amplitudes(), PureState::basis(2, 1).amplitudes(), 1e-14));
}

TEST(HermitianEig, random_reassembly_and_orthonormality) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const ComplexMatrix g = ginibre(5, 5, rng);
        const ComplexMatrix h = g + g.adjoint();
        const EigenDecomposition e = hermitian_eig(h);
        EXPECT_LE(max_abs_diff(e.reassemble(), h), 1e-10);
        EXPECT_LE(orthonormality_error(e.eigenvectors), 1e-10);
        for (int k = 0; k + 1 < 5; ++k) EXPECT_GE(e.eigenvalues(k), e.eigenvalues(k + 1));
    }
}

TEST(HermitianEig, canonical_phase_largest_component_real_positive) {
    Rng rng(3);
    const ComplexMatrix g = ginibre(4, 4, rng);
    const EigenDecomposition e = hermitian_eig(g + g.adjoint());
    for (const auto &v : e.eigenvectors) {
        Eigen::Index idx;
        v.amplitudes().cwiseAbs().maxCoeff(&idx);
        EXPECT_NEAR(v[static_cast<int>(idx)].imag(), 0.0, 1e-14);
        EXPECT_GT(v[static_cast<int>(idx)].real(), 0.0);
    }
}

TEST(HermitianEig, rejects_non_hermitian) {
    ComplexMatrix a = pauli_x();
    a(0, 1) = 2.0;
    try {
        hermitian_eig(a);
        FAIL() << "expected NonHermitianInput";
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::NonHermitianInput);
    }
}

TEST(RandomDensity, rank_one_is_pure) {
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        const DensityMatrix rho = random_density(2, 1, seed);
        EXPECT_LE(max_abs_diff(rho.matrix() * rho.matrix(), rho.matrix()), 1e-10);
    }
}

TEST(RandomDensity, deterministic) {
    const DensityMatrix a = random_density(3, 3, 7);
    const DensityMatrix b = random_density(3, 3, 7);
    // bitwise
    EXPECT_EQ(0, std::memcmp(a.matrix().data(), b.matrix().data(), sizeof(cplx) * 9));
}

TEST(RandomDensity, rank_two_has_two_nonzero_eigenvalues) {
    const DensityMatrix rho = random_density(4, 2, 1);
    const EigenDecomposition e = hermitian_eig(rho.matrix());
    int above = 0;
    for (int k = 0; k < 4; ++k) above += e.eigenvalues(k) > 1e-10;
    EXPECT_EQ(above, 2);
}

TEST(RandomDensity, invalid_rank) {
    EXPECT_THROW(random_density(3, 0, 1), Error);
    try {
        random_density(3, 4, 1);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidRank);
    }
}

TEST(RandomDensity, purity_range_over_many_seeds) {
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const DensityMatrix rho = random_density(2, 1 + static_cast<int>(seed % 2), seed);
        const double purity = rho.purity();
        ASSERT_GE(purity, 0.5 - 1e-12);
        ASSERT_LE(purity, 1.0 + 1e-12);
    }
}

TEST(DensityMatrix, shared_validator_and_eigenvalue_sum) {
    for (int n = 1; n <= 6; ++n) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const DensityMatrix rho = random_density(n, 1 + static_cast<int>(seed % n), seed);
            EXPECT_TRUE(check_density(rho.matrix()).ok());
            EXPECT_NEAR(hermitian_eig(rho.matrix()).eigenvalues.sum(), 1.0, 1e-10);
        }
    }
}

TEST(DensityMatrix, rejects_invalid) {
    EXPECT_THROW(DensityMatrix(ComplexMatrix::Identity(2, 2)), Error);     // trace 2
    EXPECT_THROW(DensityMatrix(pauli_x() * 0.5), Error);                    // trace 0
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = 1.5;
    m(1, 1) = -0.5;
    EXPECT_THROW(DensityMatrix{m}, Error);                                  // negative eigenvalue
    m = ComplexMatrix::Identity(2, 2) * 0.5;
    m(0, 1) = 0.1;
    EXPECT_THROW(DensityMatrix{m}, Error);                                  // not Hermitian
}

TEST(PureState, norm_invariant) {
    ComplexVector v(2);
    v << 1.0, 1.0;
    EXPECT_THROW(PureState{v}, Error);
    EXPECT_NEAR(PureState::normalized(v).amplitudes().squaredNorm(), 1.0, 1e-15);
}

TEST(FrobeniusInner, examples) {
    EXPECT_NEAR(std::abs(frobenius_inner(ComplexMatrix::Identity(4, 4), ComplexMatrix::Identity(4, 4)) - cplx(4.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(frobenius_inner(pauli_x(), pauli_y())), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(frobenius_inner(pauli_z(), pauli_z()) - cplx(2.0)), 0.0, 1e-15);
}

TEST(FrobeniusInner, shape_mismatch) {
    try {
        frobenius_inner(ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(3, 3));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
    }
}

TEST(RandomUnitary, is_unitary) {
    for (int n = 1; n <= 6; ++n) {
        const ComplexMatrix u = random_unitary(n, 11 + n);
        EXPECT_LE(max_abs_diff(u.adjoint() * u, ComplexMatrix::Identity(n, n)), 1e-12);
    }
}

TEST(Rng, derived_seeds_differ_and_sequence_is_fixed) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
    Rng c(9);
    double mean = 0.0, m2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = c.normal();
        mean += z;
        m2 += z * z;
    }
    mean /= n;
    m2 /= n;
    EXPECT_NEAR(mean, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(m2, 1.0, 5.0 * std::sqrt(2.0 / n));
}
