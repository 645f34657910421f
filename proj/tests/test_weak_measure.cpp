#include "weaktomo/weak_measure.hpp"

#include <gtest/gtest.h>

#include "weaktomo/statistics.hpp"

using namespace weaktomo;

namespace {
DensityMatrix ket0() { return DensityMatrix::from_pure(PureState::basis(2, 0)); }
PureState plus() {
    ComplexVector v(2);
    v << 1.0, 1.0;
    return PureState::normalized(v);
}
}  // namespace

TEST(WeakExpectation, identity_observable) {
    const NoiseModel noise{3.0, 40000, 17};
    const MeasurementRecord r = weak_expectation(random_density(3, 2, 4), ComplexMatrix::Identity(3, 3), noise);
    EXPECT_NEAR(r.estimate, 1.0, 5.0 * 3.0 / 200.0);
    EXPECT_NEAR(r.std_error, 3.0 / 200.0, 0.02 * 3.0 / 200.0);
    EXPECT_EQ(r.raw_mean_count, 40000u);
}

TEST(WeakExpectation, mixed_state_sigma_z) {
    const NoiseModel noise{10.0, 1000000, 2024};
    const MeasurementRecord r = weak_expectation(DensityMatrix::maximally_mixed(2), pauli_z(), noise);
    EXPECT_NEAR(r.estimate, 0.0, 5.0 * std::sqrt(101.0) / 1000.0);
    EXPECT_NEAR(r.per_trial_variance / 101.0, 1.0, 0.02);
}

TEST(WeakExpectation, eigenstate_variance_is_pointer_only) {
    const NoiseModel noise{10.0, 1000000, 5};
    const MeasurementRecord r = weak_expectation(ket0(), pauli_z(), noise);
    EXPECT_NEAR(r.estimate, 1.0, 5.0 * r.std_error);
    EXPECT_NEAR(r.per_trial_variance / 100.0, 1.0, 0.02);
    ASSERT_TRUE(r.truth_hint.has_value());
    EXPECT_DOUBLE_EQ(*r.truth_hint, 1.0);
}

TEST(WeakExpectation, std_error_bookkeeping) {
    const MeasurementRecord r = weak_expectation(ket0(), pauli_x(), {2.0, 5000, 1});
    EXPECT_NEAR(r.std_error, std::sqrt(r.per_trial_variance / 5000.0), 1e-15);
    EXPECT_GE(r.std_error, 0.0);
}

TEST(WeakExpectation, deterministic) {
    const NoiseModel noise{1.5, 1000, 99};
    const DensityMatrix rho = random_density(3, 3, 1);
    const ComplexMatrix a = rho.matrix() + ComplexMatrix::Identity(3, 3);
    const MeasurementRecord r1 = weak_expectation(rho, a, noise);
    const MeasurementRecord r2 = weak_expectation(rho, a, noise);
    EXPECT_EQ(r1.estimate, r2.estimate);
    EXPECT_EQ(r1.std_error, r2.std_error);
}

TEST(WeakExpectation, errors) {
    try {
        weak_expectation(ket0(), ComplexMatrix::Identity(3, 3), {1.0, 10, 0});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
    ComplexMatrix bad = pauli_x();
    bad(0, 1) = 3.0;
    try {
        weak_expectation(ket0(), bad, {1.0, 10, 0});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::NonHermitianObservable);
    }
    EXPECT_THROW(weak_expectation(ket0(), pauli_z(), {0.0, 10, 0}), Error);
    EXPECT_THROW(weak_expectation(ket0(), pauli_z(), {1.0, 0, 0}), Error);
}

TEST(WeakExpectation, unbiased_over_repetitions) {
    const DensityMatrix rho = random_density(2, 2, 31);
    const ComplexMatrix a = pauli_x() + 0.5 * pauli_z();
    const double truth = rho.expectation(a).real();
    std::vector<double> estimates;
    const NoiseModel base{4.0, 2000, 8};
    for (std::uint64_t r = 0; r < 200; ++r) estimates.push_back(weak_expectation(rho, a, base.derived(r)).estimate);
    const MeanAndError me = mean_and_error(estimates);
    EXPECT_LT(std::abs(me.mean - truth), 5.0 * me.std_error);
}

TEST(WeakExpectation, variance_law) {
    const DensityMatrix rho = random_density(3, 3, 12);
    ComplexMatrix a = ComplexMatrix::Zero(3, 3);
    a(0, 0) = 1.0;
    a(2, 2) = -1.0;
    a(0, 1) = a(1, 0) = 0.3;
    for (double delta : {0.5, 5.0}) {
        const MeasurementRecord r = weak_expectation(rho, a, {delta, 1000000, 77});
        const double expected = delta * delta + observable_variance(rho.matrix(), a);
        EXPECT_NEAR(r.per_trial_variance / expected, 1.0, 0.03) << delta;
    }
}

TEST(StrongExpectation, eigenstate_reads_eigenvalue) {
    const MeasurementRecord r = strong_expectation(ket0(), pauli_z(), 1000, 3);
    EXPECT_EQ(r.estimate, 1.0);
    EXPECT_EQ(r.per_trial_variance, 0.0);
}

TEST(StrongExpectation, mixed_state_variance) {
    const MeasurementRecord r = strong_expectation(DensityMatrix::maximally_mixed(2), pauli_z(), 1000000, 4);
    EXPECT_NEAR(r.per_trial_variance, 1.0, 0.02);
}

TEST(StrongExpectation, identity_has_zero_variance) {
    const MeasurementRecord r = strong_expectation(random_density(4, 3, 2), ComplexMatrix::Identity(4, 4), 500, 1);
    EXPECT_EQ(r.per_trial_variance, 0.0);
    EXPECT_EQ(r.estimate, 1.0);
}

TEST(ExactWeakValue, identity_gives_one) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const cplx w = exact_weak_value(random_density(3, 2, seed), ComplexMatrix::Identity(3, 3), random_pure_state(3, seed + 9));
        EXPECT_NEAR(std::abs(w - cplx(1.0)), 0.0, 1e-12);
    }
}

TEST(ExactWeakValue, state_equal_to_postselection) {
    const PureState b = random_pure_state(3, 5);
    Rng rng(6);
    const ComplexMatrix s = ginibre(3, 3, rng);
    const cplx w = exact_weak_value(DensityMatrix::from_pure(b), s, b);
    EXPECT_NEAR(std::abs(w - b.amplitudes().dot(s * b.amplitudes())), 0.0, 1e-12);
}

TEST(ExactWeakValue, direct_trace_oracle) {
    ComplexMatrix s = ComplexMatrix::Zero(2, 2);
    s(0, 0) = 1.0;
    // tr(I/2 Pi_+ |0><0|) / tr(I/2 Pi_+) = (1/4) / (1/2)
    const cplx w = exact_weak_value(DensityMatrix::maximally_mixed(2), s, plus());
    EXPECT_NEAR(std::abs(w - cplx(0.5)), 0.0, 1e-15);
}

TEST(ExactWeakValue, postselection_impossible) {
    try {
        exact_weak_value(ket0(), pauli_x(), PureState::basis(2, 1));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::PostSelectionImpossible);
    }
}

TEST(WeakValueEstimate, noise_scale_and_truth) {
    const DensityMatrix rho = random_density(2, 2, 3);
    const PureState b = plus();
    const double pb = postselection_probability(rho, b);
    const NoiseModel noise{2.0, 10000, 4};
    const WeakValueRecord r = weak_value_estimate(rho, pauli_z(), b, noise);
    EXPECT_NEAR(r.std_error_re, 2.0 / std::sqrt(10000.0 * pb), 1e-15);
    EXPECT_EQ(r.std_error_re, r.std_error_im);
    ASSERT_TRUE(r.truth_hint.has_value());
    EXPECT_NEAR(std::abs(*r.truth_hint - exact_weak_value(rho, pauli_z(), b)), 0.0, 1e-15);
}

TEST(WeakValueEstimate, unbiased_complex_noise) {
    const DensityMatrix rho = random_density(2, 2, 3);
    const PureState b = plus();
    const cplx truth = exact_weak_value(rho, pauli_y(), b);
    std::vector<double> re, im;
    const NoiseModel base{1.0, 100, 21};
    for (std::uint64_t r = 0; r < 4000; ++r) {
        const WeakValueRecord rec = weak_value_estimate(rho, pauli_y(), b, base.derived(r));
        re.push_back(rec.estimate.real());
        im.push_back(rec.estimate.imag());
    }
    const MeanAndError mre = mean_and_error(re), mim = mean_and_error(im);
    EXPECT_LT(std::abs(mre.mean - truth.real()), 5.0 * mre.std_error);
    EXPECT_LT(std::abs(mim.mean - truth.imag()), 5.0 * mim.std_error);
}
