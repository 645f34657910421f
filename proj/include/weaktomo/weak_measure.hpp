#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "weaktomo/matrix_core.hpp"
#include "weaktomo/rng.hpp"

namespace weaktomo {

/// Gaussian pointer of spread delta_w, read out over ensemble_size trials.
struct NoiseModel {
    double delta_w = 1.0;
    std::uint64_t ensemble_size = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(delta_w > 0.0) || !std::isfinite(delta_w)) fail(ErrorCode::ConfigError, "delta_w must be positive");
        if (ensemble_size < 1) fail(ErrorCode::ConfigError, "ensemble_size must be at least 1");
    }

    /// Same spread and size, seed replaced by the counter-derived sub-seed.
    NoiseModel derived(std::uint64_t counter) const { return {delta_w, ensemble_size, derive_seed(seed, counter)}; }
};

struct MeasurementRecord {
    double estimate = 0.0;
    double std_error = 0.0;             // sample std / sqrt(n)
    double per_trial_variance = 0.0;    // unbiased sample variance of the readings
    std::uint64_t raw_mean_count = 0;
    std::optional<double> truth_hint;   // tr(rho A)
};

struct WeakValueRecord {
    cplx estimate;
    double std_error_re = 0.0;
    double std_error_im = 0.0;
    double postselection_probability = 0.0;
    std::uint64_t raw_mean_count = 0;
    std::optional<cplx> truth_hint;
};

inline double observable_variance(const ComplexMatrix &rho, const ComplexMatrix &a) {
    const double m1 = (rho * a).trace().real();
    const double m2 = (rho * a * a).trace().real();
    return std::max(0.0, m2 - m1 * m1);
}

namespace detail {

struct OutcomeTable {
    std::vector<double> values;
    std::vector<double> cumulative;
};

inline OutcomeTable born_outcomes(const DensityMatrix &rho, const ComplexMatrix &a) {
    if (a.rows() != rho.dim() || a.cols() != rho.dim()) {
        fail(ErrorCode::DimensionMismatch, "observable is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                               ", state has dimension " + std::to_string(rho.dim()));
    }
    if (hermiticity_error(a) > tol::kExact) fail(ErrorCode::NonHermitianObservable, "observable must be Hermitian");
    const EigenDecomposition eig = hermitian_eig(a);
    OutcomeTable t;
    double total = 0.0;
    std::vector<double> probs;
    for (std::size_t k = 0; k < eig.eigenvectors.size(); ++k) {
        const auto &v = eig.eigenvectors[k].amplitudes();
        const double p = std::max(0.0, v.dot(rho.matrix() * v).real());
        probs.push_back(p);
        t.values.push_back(eig.eigenvalues(static_cast<Eigen::Index>(k)));
        total += p;
    }
    double acc = 0.0;
    for (double p : probs) {
        acc += p / total;
        t.cumulative.push_back(acc);
    }
    t.cumulative.back() = 1.0;
    return t;
}

// Per trial: one uniform for the Born outcome, then (if delta > 0) one
// Box-Muller normal for the pointer. Welford accumulation in trial order.
inline MeasurementRecord pointer_run(const OutcomeTable &t, double delta, std::uint64_t n, std::uint64_t seed) {
    Rng rng(seed);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::uint64_t trial = 1; trial <= n; ++trial) {
        const double u = rng.uniform();
        std::size_t k = 0;
        while (k + 1 < t.cumulative.size() && u >= t.cumulative[k]) ++k;
        double reading = t.values[k];
        if (delta > 0.0) reading += delta * rng.normal();
        const double d = reading - mean;
        mean += d / static_cast<double>(trial);
        m2 += d * (reading - mean);
    }
    MeasurementRecord rec;
    rec.estimate = mean;
    rec.raw_mean_count = n;
    rec.per_trial_variance = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    rec.std_error = std::sqrt(rec.per_trial_variance / static_cast<double>(n));
    return rec;
}

}  // namespace detail

/// Weak (von Neumann) measurement of A: each trial reads a Born-sampled
/// eigenvalue of A blurred by Gaussian pointer noise of width delta_w. The
/// estimate is the mean reading; per-trial variance is delta_w^2 + Var_rho(A).
inline MeasurementRecord weak_expectation(const DensityMatrix &rho, const ComplexMatrix &a, const NoiseModel &noise) {
    noise.validate();
    MeasurementRecord rec = detail::pointer_run(detail::born_outcomes(rho, a), noise.delta_w, noise.ensemble_size, noise.seed);
    rec.truth_hint = rho.expectation(a).real();
    return rec;
}

/// Projective measurement: Born-sampled eigenvalues without pointer noise.
inline MeasurementRecord strong_expectation(const DensityMatrix &rho, const ComplexMatrix &a, std::uint64_t ensemble_size,
                                            std::uint64_t seed) {
    if (ensemble_size < 1) fail(ErrorCode::ConfigError, "ensemble_size must be at least 1");
    MeasurementRecord rec = detail::pointer_run(detail::born_outcomes(rho, a), 0.0, ensemble_size, seed);
    rec.truth_hint = rho.expectation(a).real();
    return rec;
}

inline double postselection_probability(const DensityMatrix &rho, const PureState &b) {
    if (b.dim() != rho.dim()) fail(ErrorCode::DimensionMismatch, "post-selection state has wrong dimension");
    return b.amplitudes().dot(rho.matrix() * b.amplitudes()).real();
}

/// w_S = tr(rho Pi_b S) / tr(rho Pi_b).
inline cplx exact_weak_value(const DensityMatrix &rho, const ComplexMatrix &s, const PureState &b) {
    if (s.rows() != rho.dim() || s.cols() != rho.dim()) fail(ErrorCode::DimensionMismatch, "operator has wrong dimension");
    const double pb = postselection_probability(rho, b);
    if (!(pb > tol::kOverlap)) {
        fail(ErrorCode::PostSelectionImpossible, "tr(rho Pi_b) = " + std::to_string(pb));
    }
    return (rho.matrix() * b.projector() * s).trace() / pb;
}

/// Exact weak value plus independent Gaussian noise on the real and
/// imaginary parts, each of width delta_w / sqrt(n p_b) where n p_b is the
/// post-selected sub-ensemble size.
inline WeakValueRecord weak_value_estimate(const DensityMatrix &rho, const ComplexMatrix &s, const PureState &b,
                                           const NoiseModel &noise) {
    noise.validate();
    const cplx w = exact_weak_value(rho, s, b);
    const double pb = postselection_probability(rho, b);
    const double sigma = noise.delta_w / std::sqrt(static_cast<double>(noise.ensemble_size) * pb);
    Rng rng(noise.seed);
    const double zr = rng.normal();
    const double zi = rng.normal();
    WeakValueRecord rec;
    rec.estimate = w + cplx(sigma * zr, sigma * zi);
    rec.std_error_re = sigma;
    rec.std_error_im = sigma;
    rec.postselection_probability = pb;
    rec.raw_mean_count = noise.ensemble_size;
    rec.truth_hint = w;
    return rec;
}

}  // namespace weaktomo
