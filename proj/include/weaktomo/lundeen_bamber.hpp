#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "weaktomo/matrix_core.hpp"
#include "weaktomo/operator_basis.hpp"
#include "weaktomo/parallel.hpp"
#include "weaktomo/statistics.hpp"
#include "weaktomo/weak_measure.hpp"

namespace weaktomo {

/// Eigenbasis {|a_i>} of the measured observable, the probe state |b>, and
/// the overlaps c_i = <b|a_i>.
class LBConfiguration {
public:
    LBConfiguration(StateBasis a_basis, PureState b) : a_(std::move(a_basis)), b_(std::move(b)) {
        if (a_.empty()) fail(ErrorCode::InvalidDimension, "empty eigenbasis");
        const int n = b_.dim();
        if (static_cast<int>(a_.size()) != n) fail(ErrorCode::DimensionMismatch, "eigenbasis size must equal dimension");
        for (const auto &s : a_) {
            if (s.dim() != n) fail(ErrorCode::DimensionMismatch, "eigenbasis state has wrong dimension");
        }
        if (orthonormality_error(a_) > tol::kHermitian) fail(ErrorCode::NotOrthonormal, "eigenbasis is not orthonormal");
        c_.resize(n);
        for (int i = 0; i < n; ++i) {
            c_(i) = b_.inner(a_[i]);
            if (!(std::abs(c_(i)) > tol::kOverlap)) {
                fail(ErrorCode::VanishingOverlap, "|<b|a_" + std::to_string(i) + ">| = " + std::to_string(std::abs(c_(i))));
            }
        }
        const double total = c_.squaredNorm();
        if (std::abs(total - 1.0) > tol::kNorm) {
            fail(ErrorCode::InvalidState, "sum |c_i|^2 = " + std::to_string(total));
        }
    }

    /// Probe |b> = sum_i sqrt(p_i) |a_i> for a point p of the open simplex.
    static LBConfiguration from_weights(StateBasis a_basis, const std::vector<double> &weights) {
        if (weights.size() != a_basis.size()) fail(ErrorCode::DimensionMismatch, "weights and eigenbasis sizes differ");
        double total = 0.0;
        for (double p : weights) {
            if (!(p > 0.0)) fail(ErrorCode::VanishingOverlap, "simplex weights must be strictly positive");
            total += p;
        }
        ComplexVector b = ComplexVector::Zero(a_basis.front().dim());
        for (std::size_t i = 0; i < weights.size(); ++i) b += std::sqrt(weights[i] / total) * a_basis[i].amplitudes();
        return LBConfiguration(std::move(a_basis), PureState::normalized(b));
    }

    int dim() const { return b_.dim(); }
    const StateBasis &a_basis() const { return a_; }
    const PureState &b() const { return b_; }
    const ComplexVector &c() const { return c_; }

    /// |c_i|^2
    std::vector<double> weights() const {
        std::vector<double> out;
        for (Eigen::Index i = 0; i < c_.size(); ++i) out.push_back(std::norm(c_(i)));
        return out;
    }

    double log_weight_product() const {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < c_.size(); ++i) acc += std::log(std::norm(c_(i)));
        return acc;
    }

private:
    StateBasis a_;
    PureState b_;
    ComplexVector c_;
};

/// w(i, j) = w_{rho,ij} = tr(rho O_ij). std_re / std_im hold the per-entry
/// standard errors of simulated data and are zero for exact data.
struct LBWeakData {
    ComplexMatrix w;
    RealMatrix std_re;
    RealMatrix std_im;
};

/// O_ij = Pi_i Pi_b Pi_j
inline ComplexMatrix lb_operator(const LBConfiguration &config, int i, int j) {
    return config.a_basis()[i].projector() * config.b().projector() * config.a_basis()[j].projector();
}

/// All N^2 operators, entry i * N + j holding O_ij.
inline std::vector<ComplexMatrix> lb_operators(const LBConfiguration &config) {
    const int n = config.dim();
    std::vector<ComplexMatrix> ops;
    ops.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ops.push_back(lb_operator(config, i, j));
    return ops;
}

inline LBWeakData lb_exact_weak_data(const DensityMatrix &rho, const LBConfiguration &config) {
    if (rho.dim() != config.dim()) fail(ErrorCode::DimensionMismatch, "state and configuration dimensions differ");
    const int n = config.dim();
    LBWeakData data;
    data.w.resize(n, n);
    data.std_re = RealMatrix::Zero(n, n);
    data.std_im = RealMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) data.w(i, j) = rho.expectation(lb_operator(config, i, j));
    return data;
}

/// Weak measurement of every <O_ij>: diagonal entries measure the Hermitian
/// O_ii directly; off-diagonal entries measure H = (O_ij + O_ji)/2 and
/// K = (O_ij - O_ji)/(2i) and combine <H> + i<K>. Each measurement uses its
/// own counter-derived sub-seed of noise.seed.
inline LBWeakData lb_simulated_weak_data(const DensityMatrix &rho, const LBConfiguration &config, const NoiseModel &noise) {
    if (rho.dim() != config.dim()) fail(ErrorCode::DimensionMismatch, "state and configuration dimensions differ");
    noise.validate();
    const int n = config.dim();
    LBWeakData data;
    data.w.resize(n, n);
    data.std_re = RealMatrix::Zero(n, n);
    data.std_im = RealMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const auto counter = static_cast<std::uint64_t>(3 * (i * n + j));
            const ComplexMatrix oij = lb_operator(config, i, j);
            if (i == j) {
                const MeasurementRecord r = weak_expectation(rho, hermitian_part(oij), noise.derived(counter));
                data.w(i, j) = r.estimate;
                data.std_re(i, j) = r.std_error;
                continue;
            }
            const ComplexMatrix oji = oij.adjoint();
            const ComplexMatrix h = 0.5 * (oij + oji);
            const ComplexMatrix k = (oij - oji) / (2.0 * kI);
            const MeasurementRecord rh = weak_expectation(rho, hermitian_part(h), noise.derived(counter + 1));
            const MeasurementRecord rk = weak_expectation(rho, hermitian_part(k), noise.derived(counter + 2));
            data.w(i, j) = cplx(rh.estimate, rk.estimate);
            data.std_re(i, j) = rh.std_error;
            data.std_im(i, j) = rk.std_error;
        }
    }
    return data;
}

/// rho_ji = w_ij / (c_i^* c_j) in the a-basis, Hermitized, trace
/// renormalized and returned in the computational basis. Flags:
/// "hermiticity_violation" when the Hermitization correction exceeds 10x the
/// propagated noise, "not_positive" when an eigenvalue is below -5x.
inline StateEstimate lb_reconstruct(const LBWeakData &data, const LBConfiguration &config) {
    const int n = config.dim();
    if (data.w.rows() != n || data.w.cols() != n) fail(ErrorCode::DimensionMismatch, "weak data has wrong shape");
    const ComplexVector &c = config.c();
    ComplexMatrix in_a(n, n);
    double noise_scale = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const cplx scale = std::conj(c(i)) * c(j);
            if (!(std::abs(scale) > tol::kOverlap * tol::kOverlap)) fail(ErrorCode::VanishingOverlap, "c_i^* c_j vanishes");
            in_a(j, i) = data.w(i, j) / scale;
            if (data.std_re.size() == n * n && data.std_im.size() == n * n) {
                noise_scale = std::max(noise_scale, std::hypot(data.std_re(i, j), data.std_im(i, j)) / std::abs(scale));
            }
        }
    }
    noise_scale = std::max(noise_scale, tol::kExact);
    const ComplexMatrix herm = hermitian_part(in_a);
    const double correction = max_abs_diff(in_a, herm);
    const ComplexMatrix a = basis_matrix(config.a_basis());
    StateEstimate est;
    est.rho = hermitian_part(a * herm * a.adjoint());
    const double trace = est.rho.trace().real();
    if (std::abs(trace) > 0.0) est.rho /= trace;
    est.min_eigenvalue = hermitian_eigenvalues(est.rho).minCoeff();
    if (correction > 10.0 * noise_scale) est.flags.emplace_back("hermiticity_violation");
    if (est.min_eigenvalue < -5.0 * noise_scale) est.flags.emplace_back("not_positive");
    return est;
}

// ---------------------------------------------------------------------------
// Error-volume geometry in the weak coordinates.

namespace detail {
inline void check_metric_dim(const LBConfiguration &config, const FlatMetric &flat) {
    if (flat.dim != config.dim()) fail(ErrorCode::DimensionMismatch, "flat metric built for a different dimension");
}
}  // namespace detail

/// g = d(N)^2 / (prod_i |c_i|^2)^2
inline double lb_metric_det(const LBConfiguration &config, const FlatMetric &flat) {
    detail::check_metric_dim(config, flat);
    double prod = 1.0;
    for (double p : config.weights()) prod *= p;
    const double g = flat.det_sqrt * flat.det_sqrt / (prod * prod);
    return std::isfinite(g) ? g : std::exp(2.0 * flat.log_det_sqrt - 2.0 * config.log_weight_product());
}

inline double lb_log_error_volume(const LBConfiguration &config, double delta_w, const FlatMetric &flat) {
    detail::check_metric_dim(config, flat);
    if (!(delta_w > 0.0)) fail(ErrorCode::ConfigError, "delta_w must be positive");
    return flat.log_det_sqrt + state_space_dim(config.dim()) * std::log(delta_w) - config.log_weight_product();
}

/// Delta V_err = d(N) delta_w^{N^2-1} / prod_i |c_i|^2
inline double lb_error_volume(const LBConfiguration &config, double delta_w, const FlatMetric &flat) {
    const double log_v = lb_log_error_volume(config, delta_w, flat);
    double prod = 1.0;
    for (double p : config.weights()) prod *= p;
    const double v = flat.det_sqrt * std::pow(delta_w, state_space_dim(config.dim())) / prod;
    return std::isfinite(v) && v > 0.0 ? v : std::exp(log_v);
}

/// Independent weak coordinates: w_ii for i < N-1, then (Re w_ij, Im w_ij)
/// for i < j. They mirror the ordering of flat_coordinates.
inline RealVector lb_weak_coordinates(const ComplexMatrix &w) {
    return flat_coordinates(w);
}

/// Real-linear Jacobian d(weak coordinates)/d(flat coordinates of rho in
/// the a-basis), assembled column by column from tr(rho O_ij) evaluated on
/// the tangent directions.
inline RealMatrix lb_coordinate_jacobian(const LBConfiguration &config) {
    const int n = config.dim();
    const int k = state_space_dim(n);
    const ComplexMatrix a = basis_matrix(config.a_basis());
    const std::vector<ComplexMatrix> ops = lb_operators(config);
    RealMatrix jac(k, k);
    for (int col = 0; col < k; ++col) {
        const ComplexMatrix direction = a * flat_tangent(n, col) * a.adjoint();
        ComplexMatrix dw(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dw(i, j) = (direction * ops[static_cast<std::size_t>(i * n + j)]).trace();
        jac.col(col) = lb_weak_coordinates(dw);
    }
    return jac;
}

/// Determinant of the flat metric pushed forward into the weak coordinates,
/// det(J^{-T} G J^{-1}).
inline double lb_pushforward_metric_det(const LBConfiguration &config, const FlatMetric &flat) {
    detail::check_metric_dim(config, flat);
    const RealMatrix jac = lb_coordinate_jacobian(config);
    const RealMatrix jinv = jac.inverse();
    const RealMatrix g = jinv.transpose() * flat.gram * jinv;
    return g.determinant();
}

// ---------------------------------------------------------------------------

struct OptimalityScanSettings {
    int initial_divisions = 24;   // first grid: compositions of this integer
    int refinement_radius = 4;    // offsets per axis on each refined grid
    double tolerance = 1e-4;      // certification radius around 1/N
    double delta_w = 1.0;
};

struct OptimalityReport {
    std::vector<double> argmin;   // |c_i|^2 profile
    double min_volume = 0.0;
    double distance_to_uniform = 0.0;  // max-norm
    bool certified = false;
    std::size_t evaluations = 0;
};

/// Visits every composition of `divisions` into `parts` positive integers.
inline void for_each_interior_composition(int parts, int divisions, const std::function<void(const std::vector<int> &)> &visit) {
    std::vector<int> current(static_cast<std::size_t>(parts), 1);
    std::function<void(int, int)> rec = [&](int index, int remaining) {
        if (index == parts - 1) {
            if (remaining >= 1) {
                current[static_cast<std::size_t>(index)] = remaining;
                visit(current);
            }
            return;
        }
        for (int v = 1; v <= remaining - (parts - 1 - index); ++v) {
            current[static_cast<std::size_t>(index)] = v;
            rec(index + 1, remaining - v);
        }
    };
    if (parts >= 1 && divisions >= parts) rec(0, divisions);
}

/// Minimizes the error volume over the open simplex sum |c_i|^2 = 1 with a
/// deterministic nested grid followed by pairwise mass-transfer descent.
inline OptimalityReport lb_optimality_scan(int dim, const StateBasis &a_basis, const OptimalityScanSettings &settings = {}) {
    if (dim < 2) fail(ErrorCode::InvalidDimension, "optimality scan needs N >= 2");
    if (static_cast<int>(a_basis.size()) != dim) fail(ErrorCode::DimensionMismatch, "eigenbasis size must equal N");
    const FlatMetric flat = flat_metric(dim);
    OptimalityReport report;
    auto objective = [&](const std::vector<double> &p) {
        ++report.evaluations;
        for (double x : p) {
            if (!(x > 0.0)) return std::numeric_limits<double>::infinity();
        }
        return lb_log_error_volume(LBConfiguration::from_weights(a_basis, p), settings.delta_w, flat);
    };

    std::vector<double> best;
    double best_value = std::numeric_limits<double>::infinity();
    const int divisions = std::max(settings.initial_divisions, dim);
    for_each_interior_composition(dim, divisions, [&](const std::vector<int> &parts) {
        std::vector<double> p(parts.begin(), parts.end());
        for (double &x : p) x /= divisions;
        const double v = objective(p);
        if (v < best_value) {
            best_value = v;
            best = p;
        }
    });

    // Nested refinement: offsets o in [-r, r]^{N-1}, last coordinate absorbs -sum(o).
    const int r = std::max(1, settings.refinement_radius);
    double step = 1.0 / divisions;
    while (step > settings.tolerance * 1e-2) {
        step /= 2.0 * r;
        const std::vector<double> center = best;
        std::vector<int> offset(static_cast<std::size_t>(dim - 1), -r);
        while (true) {
            std::vector<double> p = center;
            int sum = 0;
            for (int i = 0; i + 1 < dim; ++i) {
                p[static_cast<std::size_t>(i)] += step * offset[static_cast<std::size_t>(i)];
                sum += offset[static_cast<std::size_t>(i)];
            }
            p.back() -= step * sum;
            const double v = objective(p);
            if (v < best_value) {
                best_value = v;
                best = p;
            }
            int axis = 0;
            while (axis < dim - 1 && ++offset[static_cast<std::size_t>(axis)] > r) offset[static_cast<std::size_t>(axis++)] = -r;
            if (axis == dim - 1) break;
        }
    }

    // Local descent by pairwise transfers.
    for (double s = step; s > 1e-13; s /= 2.0) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (int i = 0; i < dim; ++i) {
                for (int j = 0; j < dim; ++j) {
                    if (i == j) continue;
                    std::vector<double> p = best;
                    p[static_cast<std::size_t>(i)] += s;
                    p[static_cast<std::size_t>(j)] -= s;
                    const double v = objective(p);
                    if (v < best_value) {
                        best_value = v;
                        best = p;
                        improved = true;
                    }
                }
            }
        }
    }

    report.argmin = best;
    report.min_volume = std::exp(best_value);
    for (double x : best) report.distance_to_uniform = std::max(report.distance_to_uniform, std::abs(x - 1.0 / dim));
    report.certified = report.distance_to_uniform <= settings.tolerance;
    return report;
}

// ---------------------------------------------------------------------------
// Monte Carlo error volumes.

struct EmpiricalErrorVolume {
    std::size_t repetitions = 0;
    RealMatrix weak_covariance;        // covariance of the independent weak coordinates
    RealMatrix state_covariance;       // covariance of the flat coordinates of the reconstructed rho (a-basis)
    double weak_box_volume = 0.0;      // sqrt(g) sqrt(det weak_covariance), g from lb_metric_det
    double weak_box_volume_error = 0.0;  // batch-means standard error of weak_box_volume
    double pushforward_volume = 0.0;   // same with g from lb_pushforward_metric_det
    double state_space_volume = 0.0;   // d(N) sqrt(det state_covariance)
    double mean_frobenius_error = 0.0;
};

/// Repeats simulate -> reconstruct `repetitions` times, repetition r using
/// noise.derived(r). `batches` splits the repetitions for the standard error.
inline EmpiricalErrorVolume lb_monte_carlo_error_volume(const DensityMatrix &rho, const LBConfiguration &config,
                                                        const NoiseModel &noise, std::size_t repetitions,
                                                        std::size_t batches = 20, unsigned threads = 0) {
    const int n = config.dim();
    const int k = state_space_dim(n);
    if (repetitions < static_cast<std::size_t>(k) + 2) {
        fail(ErrorCode::ConfigError, "need at least N^2 + 1 repetitions for a covariance volume");
    }
    const FlatMetric flat = flat_metric(n);
    RealMatrix weak(static_cast<Eigen::Index>(repetitions), k);
    RealMatrix state(static_cast<Eigen::Index>(repetitions), k);
    std::vector<double> frob(repetitions);
    const ComplexMatrix a = basis_matrix(config.a_basis());
    parallel_for(
        repetitions,
        [&](std::size_t r) {
            const LBWeakData data = lb_simulated_weak_data(rho, config, noise.derived(r));
            const StateEstimate est = lb_reconstruct(data, config);
            weak.row(static_cast<Eigen::Index>(r)) = lb_weak_coordinates(data.w).transpose();
            state.row(static_cast<Eigen::Index>(r)) = flat_coordinates(a.adjoint() * est.rho * a).transpose();
            frob[r] = frobenius_distance(est.rho, rho.matrix());
        },
        threads);

    EmpiricalErrorVolume out;
    out.repetitions = repetitions;
    out.weak_covariance = sample_covariance(weak);
    out.state_covariance = sample_covariance(state);
    const double log_g_half = 0.5 * std::log(lb_metric_det(config, flat));
    out.weak_box_volume = std::exp(log_g_half + log_sqrt_det(out.weak_covariance));
    out.pushforward_volume =
        std::exp(0.5 * std::log(lb_pushforward_metric_det(config, flat)) + log_sqrt_det(out.weak_covariance));
    out.state_space_volume = std::exp(flat.log_det_sqrt + log_sqrt_det(out.state_covariance));
    out.mean_frobenius_error = mean_and_error(frob).mean;

    batches = std::max<std::size_t>(1, std::min(batches, repetitions / static_cast<std::size_t>(k + 2)));
    if (batches >= 2) {
        std::vector<double> per_batch;
        const std::size_t size = repetitions / batches;
        for (std::size_t b = 0; b < batches; ++b) {
            const RealMatrix block = weak.middleRows(static_cast<Eigen::Index>(b * size), static_cast<Eigen::Index>(size));
            per_batch.push_back(std::exp(log_g_half + log_sqrt_det(sample_covariance(block))));
        }
        const MeanAndError me = mean_and_error(per_batch);
        out.weak_box_volume_error = me.std_error;
    }
    return out;
}

}  // namespace weaktomo
