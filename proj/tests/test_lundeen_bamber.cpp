#include "weaktomo/lundeen_bamber.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "weaktomo/mub.hpp"

using namespace weaktomo;

namespace {

PureState plus() {
    ComplexVector v(2);
    v << 1.0, 1.0;
    return PureState::normalized(v);
}

LBConfiguration random_config(int n, std::uint64_t seed) {
    return LBConfiguration(random_orthonormal_basis(n, seed), random_pure_state(n, seed + 1000));
}

LBConfiguration mub_config(int n) { return LBConfiguration(computational_basis(n), fourier_basis(n)[0]); }

}  // namespace

TEST(LBConfiguration, overlaps_and_constraint) {
    const LBConfiguration cfg = random_config(4, 3);
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(std::abs(cfg.c()(i) - cfg.b().amplitudes().dot(cfg.a_basis()[i].amplitudes())), 0.0, 1e-15);
        total += std::norm(cfg.c()(i));
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(LBConfiguration, vanishing_overlap_rejected) {
    try {
        LBConfiguration(computational_basis(2), PureState::basis(2, 0));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::VanishingOverlap);
    }
}

TEST(LBConfiguration, from_weights) {
    const LBConfiguration cfg = LBConfiguration::from_weights(computational_basis(2), {0.8, 0.2});
    EXPECT_NEAR(cfg.weights()[0], 0.8, 1e-15);
    EXPECT_NEAR(cfg.weights()[1], 0.2, 1e-15);
}

TEST(LBOperators, n2_plus_probe) {
    const LBConfiguration cfg(computational_basis(2), plus());
    ComplexMatrix expected = ComplexMatrix::Zero(2, 2);
    expected(0, 1) = 0.5;
    EXPECT_TRUE(approx_equal(lb_operator(cfg, 0, 1), expected, 1e-15));
}

TEST(LBOperators, adjoint_and_resolution_identities) {
    for (int n = 2; n <= 5; ++n) {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const LBConfiguration cfg = random_config(n, 100 * n + seed);
            const auto ops = lb_operators(cfg);
            ComplexMatrix sum = ComplexMatrix::Zero(n, n);
            for (int i = 0; i < n; ++i) {
                EXPECT_LE(hermiticity_error(ops[i * n + i]), 1e-14);
                sum += ops[i * n + i] / std::norm(cfg.c()(i));
                for (int j = 0; j < n; ++j) ASSERT_LE(max_abs_diff(ops[i * n + j].adjoint(), ops[j * n + i]), 1e-14);
            }
            ASSERT_LE(max_abs_diff(sum, ComplexMatrix::Identity(n, n)), 1e-12) << n << " " << seed;
        }
    }
}

TEST(LBExactWeakData, maximally_mixed) {
    const LBConfiguration cfg = random_config(3, 8);
    const LBWeakData d = lb_exact_weak_data(DensityMatrix::maximally_mixed(3), cfg);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double expected = i == j ? std::norm(cfg.c()(i)) / 3.0 : 0.0;
            EXPECT_NEAR(std::abs(d.w(i, j) - cplx(expected)), 0.0, 1e-15);
        }
}

TEST(LBExactWeakData, probe_state) {
    const LBConfiguration cfg = random_config(3, 9);
    const LBWeakData d = lb_exact_weak_data(DensityMatrix::from_pure(cfg.b()), cfg);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            EXPECT_NEAR(std::abs(d.w(i, j) - cplx(std::norm(cfg.c()(i)) * std::norm(cfg.c()(j)))), 0.0, 1e-14);
}

TEST(LBExactWeakData, transpose_times_overlap_outer_product) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const LBConfiguration cfg = random_config(3, 20 + seed);
        const DensityMatrix rho = random_density(3, 3, seed);
        const LBWeakData d = lb_exact_weak_data(rho, cfg);
        const ComplexMatrix in_a = rho.in_basis(cfg.a_basis());
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                EXPECT_NEAR(std::abs(d.w(i, j) - in_a(j, i) * std::conj(cfg.c()(i)) * cfg.c()(j)), 0.0, 1e-12);
    }
}

TEST(LBExactWeakData, dimension_mismatch) {
    EXPECT_THROW(lb_exact_weak_data(DensityMatrix::maximally_mixed(3), mub_config(2)), Error);
}

TEST(LBSimulatedWeakData, small_pointer_noise) {
    const LBConfiguration cfg = random_config(2, 4);
    const DensityMatrix rho = random_density(2, 2, 4);
    const LBWeakData exact = lb_exact_weak_data(rho, cfg);
    // At n = 1e4 the Born shot noise of the H/K readouts dominates a 1e-6 pointer; check within 5 sigma.
    const LBWeakData sim = lb_simulated_weak_data(rho, cfg, {1e-6, 10000, 3});
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            EXPECT_LE(std::abs((sim.w(i, j) - exact.w(i, j)).real()), 5.0 * sim.std_re(i, j) + 1e-12);
            EXPECT_LE(std::abs((sim.w(i, j) - exact.w(i, j)).imag()), 5.0 * sim.std_im(i, j) + 1e-12);
        }
    // Larger ensembles bring every entry within 1e-3.
    const LBWeakData big = lb_simulated_weak_data(rho, cfg, {1e-6, 4000000, 3});
    EXPECT_LE((big.w - exact.w).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(LBSimulatedWeakData, mub_diagonal_entry) {
    const LBConfiguration cfg = mub_config(2);
    const LBWeakData sim = lb_simulated_weak_data(DensityMatrix::maximally_mixed(2), cfg, {5.0, 1000000, 12});
    EXPECT_NEAR(sim.w(0, 0).real(), 0.25, 5.0 * sim.std_re(0, 0));
    EXPECT_NEAR(sim.std_re(0, 0), 5.0 / 1000.0, 0.05 * 5.0 / 1000.0);
}

TEST(LBSimulatedWeakData, deterministic) {
    const LBConfiguration cfg = random_config(3, 1);
    const DensityMatrix rho = random_density(3, 2, 1);
    const LBWeakData a = lb_simulated_weak_data(rho, cfg, {1.0, 500, 42});
    const LBWeakData b = lb_simulated_weak_data(rho, cfg, {1.0, 500, 42});
    EXPECT_TRUE(approx_equal(a.w, b.w, 0.0));
    const LBWeakData c = lb_simulated_weak_data(rho, cfg, {1.0, 500, 43});
    EXPECT_FALSE(approx_equal(a.w, c.w, 0.0));
}

TEST(LBReconstruct, exact_round_trip) {
    for (int n : {2, 3, 5, 7}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const LBConfiguration cfg = random_config(n, 7 * n + seed);
            const DensityMatrix rho = random_density(n, 1 + static_cast<int>(seed % n), seed);
            const StateEstimate est = lb_reconstruct(lb_exact_weak_data(rho, cfg), cfg);
            ASSERT_LE(max_abs_diff(est.rho, rho.matrix()), 1e-10) << n << " " << seed;
            EXPECT_TRUE(est.valid());
        }
    }
}

TEST(LBReconstruct, diagonal_data_gives_maximally_mixed) {
    const LBConfiguration cfg = random_config(3, 5);
    LBWeakData d;
    d.w = ComplexMatrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i) d.w(i, i) = std::norm(cfg.c()(i)) / 3.0;
    const StateEstimate est = lb_reconstruct(d, cfg);
    EXPECT_TRUE(approx_equal(est.rho, DensityMatrix::maximally_mixed(3).matrix(), 1e-14));
}

TEST(LBReconstruct, noisy_within_propagated_band) {
    const LBConfiguration cfg = mub_config(2);
    const DensityMatrix rho = random_density(2, 2, 6);
    const LBWeakData sim = lb_simulated_weak_data(rho, cfg, {1.0, 1000000, 6});
    double bound2 = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            bound2 += (sim.std_re(i, j) * sim.std_re(i, j) + sim.std_im(i, j) * sim.std_im(i, j)) /
                      (std::norm(cfg.c()(i)) * std::norm(cfg.c()(j)));
    const StateEstimate est = lb_reconstruct(sim, cfg);
    EXPECT_LE(frobenius_distance(est.rho, rho.matrix()), 5.0 * std::sqrt(bound2));
    EXPECT_NEAR(est.rho.trace().real(), 1.0, 1e-14);
    EXPECT_LE(hermiticity_error(est.rho), 1e-15);
}

TEST(LBReconstruct, hermiticity_violation_flagged) {
    const LBConfiguration cfg = mub_config(2);
    LBWeakData d = lb_exact_weak_data(DensityMatrix::maximally_mixed(2), cfg);
    d.w(0, 1) += 0.1;  // exact data (zero std) with an anti-Hermitian defect
    const StateEstimate est = lb_reconstruct(d, cfg);
    EXPECT_FALSE(est.valid());
    EXPECT_EQ(est.flags.front(), "hermiticity_violation");
}

TEST(LBMetricDet, mub_n2) {
    const FlatMetric flat = flat_metric(2);
    EXPECT_NEAR(lb_metric_det(mub_config(2), flat), 1024.0, 1e-9);
}

TEST(LBMetricDet, diverges_as_overlap_vanishes) {
    const FlatMetric flat = flat_metric(2);
    double previous = 0.0;
    for (double p : {0.5, 0.1, 1e-2, 1e-4, 1e-8}) {
        const double g = lb_metric_det(LBConfiguration::from_weights(computational_basis(2), {p, 1.0 - p}), flat);
        EXPECT_GT(g, previous);
        previous = g;
    }
    EXPECT_GT(previous, 1e17);
}

TEST(LBMetricDet, dimension_mismatch) {
    EXPECT_THROW(lb_metric_det(mub_config(2), flat_metric(3)), Error);
}

// The explicit pushforward of the flat metric through the coordinate change
// rho -> independent w-coordinates, against an independently derived closed
// form of the Jacobian determinant.
TEST(LBMetricDet, pushforward_matches_jacobian_closed_form) {
    for (int n : {2, 3}) {
        const FlatMetric flat = flat_metric(n);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const LBConfiguration cfg = random_config(n, 300 + seed);
            const double jac = oracle::lb_jacobian_closed_form(cfg.weights());
            const double expected = oracle::determinant(oracle::flat_gram_by_trace(n)) / (jac * jac);
            EXPECT_NEAR(lb_pushforward_metric_det(cfg, flat) / expected, 1.0, 1e-8) << n;
            EXPECT_NEAR(std::abs(lb_coordinate_jacobian(cfg).determinant()) / jac, 1.0, 1e-8);
        }
    }
}

// Cross-check of the closed form g = d(N)^2 / (prod |c_i|^2)^2 against the
// Jacobian pushforward, to relative 1e-8 at N = 2 and N = 3.
TEST(LBMetricDet, closed_form_matches_jacobian_pushforward) {
    for (int n : {2, 3}) {
        const FlatMetric flat = flat_metric(n);
        for (const LBConfiguration &cfg : {mub_config(n), random_config(n, 11)}) {
            const double closed = lb_metric_det(cfg, flat);
            const double pushed = lb_pushforward_metric_det(cfg, flat);
            EXPECT_NEAR(closed / pushed, 1.0, 1e-8) << "N=" << n << " closed=" << closed << " pushforward=" << pushed;
        }
    }
}

TEST(LBErrorVolume, mub_n2) {
    EXPECT_NEAR(lb_error_volume(mub_config(2), 1.0, flat_metric(2)), 32.0, 1e-12);
}

TEST(LBErrorVolume, power_law_in_delta) {
    for (int n : {2, 3}) {
        const FlatMetric flat = flat_metric(n);
        const LBConfiguration cfg = random_config(n, 2);
        const double ratio = lb_error_volume(cfg, 2.6, flat) / lb_error_volume(cfg, 1.3, flat);
        EXPECT_NEAR(ratio / std::pow(2.0, n * n - 1), 1.0, 1e-12);
    }
}

TEST(LBErrorVolume, skewed_probe) {
    const FlatMetric flat = flat_metric(2);
    const double skew = lb_error_volume(LBConfiguration::from_weights(computational_basis(2), {0.8, 0.2}), 1.0, flat);
    EXPECT_NEAR(skew, 50.0, 1e-12);
    EXPECT_NEAR(skew / lb_error_volume(mub_config(2), 1.0, flat), 25.0 / 16.0, 1e-14);
}

TEST(LBErrorVolume, rejects_nonpositive_delta) {
    EXPECT_THROW(lb_error_volume(mub_config(2), 0.0, flat_metric(2)), Error);
}

TEST(LBOptimalityScan, argmin_is_unbiased) {
    for (int n : {2, 3}) {
        const OptimalityReport r = lb_optimality_scan(n, random_orthonormal_basis(n, 5));
        ASSERT_EQ(static_cast<int>(r.argmin.size()), n);
        for (double p : r.argmin) EXPECT_NEAR(p, 1.0 / n, 1e-4);
        EXPECT_TRUE(r.certified);
        EXPECT_NEAR(r.min_volume, flat_metric(n).det_sqrt * std::pow(static_cast<double>(n), n), 1e-6 * r.min_volume);
    }
}

TEST(LBOptimalityScan, boundary_volume_dominates) {
    const FlatMetric flat = flat_metric(2);
    const double edge = lb_error_volume(LBConfiguration::from_weights(computational_basis(2), {1e-6, 1.0 - 1e-6}), 1.0, flat);
    EXPECT_GE(edge / lb_error_volume(mub_config(2), 1.0, flat), 1e4);
}

TEST(LBOptimalityScan, composition_count) {
    int count = 0;
    for_each_interior_composition(3, 6, [&](const std::vector<int> &parts) {
        EXPECT_EQ(parts[0] + parts[1] + parts[2], 6);
        ++count;
    });
    EXPECT_EQ(count, 10);  // C(5, 2)
}

TEST(LBMonteCarlo, thread_count_does_not_change_result) {
    const LBConfiguration cfg = mub_config(2);
    const DensityMatrix rho = random_density(2, 2, 2);
    const NoiseModel noise{1.0, 50, 9};
    const EmpiricalErrorVolume a = lb_monte_carlo_error_volume(rho, cfg, noise, 200, 4, 1);
    const EmpiricalErrorVolume b = lb_monte_carlo_error_volume(rho, cfg, noise, 200, 4, 3);
    EXPECT_EQ(a.weak_box_volume, b.weak_box_volume);
    EXPECT_EQ(a.state_space_volume, b.state_space_volume);
    EXPECT_GT(a.weak_box_volume_error, 0.0);
}
