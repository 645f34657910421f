#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "weaktomo/matrix_core.hpp"
#include "weaktomo/weak_measure.hpp"

namespace weaktomo {

/// Projectors onto the orthonormal a-basis, post-selected on M states |b_k>.
/// beta(k, j) = <b_k|a_j>.
class WuConfiguration {
public:
    WuConfiguration(StateBasis a_basis, StateBasis post_states) : a_(std::move(a_basis)), b_(std::move(post_states)) {
        if (a_.empty()) fail(ErrorCode::InvalidDimension, "empty a-basis");
        if (b_.empty()) fail(ErrorCode::IncompletePostSelectionFamily, "at least one post-selection state is required");
        const int n = a_.front().dim();
        if (static_cast<int>(a_.size()) != n) fail(ErrorCode::DimensionMismatch, "a-basis size must equal dimension");
        for (const auto &s : a_) {
            if (s.dim() != n) fail(ErrorCode::DimensionMismatch, "a-basis state has wrong dimension");
        }
        for (const auto &s : b_) {
            if (s.dim() != n) fail(ErrorCode::DimensionMismatch, "post-selection state has wrong dimension");
        }
        if (orthonormality_error(a_) > tol::kHermitian) fail(ErrorCode::NotOrthonormal, "a-basis is not orthonormal");
        beta_ = basis_matrix(b_).adjoint() * basis_matrix(a_);
    }

    int dim() const { return a_.front().dim(); }
    int post_count() const { return static_cast<int>(b_.size()); }
    const StateBasis &a_basis() const { return a_; }
    const StateBasis &post_states() const { return b_; }
    const ComplexMatrix &beta() const { return beta_; }

    /// M = N and the post-selection states are orthonormal.
    bool post_family_complete() const { return post_count() == dim() && is_orthonormal_basis(b_); }

private:
    StateBasis a_;
    StateBasis b_;
    ComplexMatrix beta_;
};

/// w(j, i) = weak value of Pi_i post-selected on |b_j>; p(j) = <b_j|rho|b_j>.
struct WuWeakData {
    ComplexMatrix w;
    std::optional<RealVector> p;
    std::optional<ComplexMatrix> x;
    RealMatrix w_std;  // per-component standard error, zero when exact
};

inline WuWeakData wu_exact_data(const DensityMatrix &rho, const WuConfiguration &config) {
    if (rho.dim() != config.dim()) fail(ErrorCode::DimensionMismatch, "state and configuration dimensions differ");
    const int n = config.dim();
    const int m = config.post_count();
    WuWeakData data;
    data.w.resize(m, n);
    data.w_std = RealMatrix::Zero(m, n);
    RealVector p(m);
    for (int j = 0; j < m; ++j) {
        const PureState &b = config.post_states()[static_cast<std::size_t>(j)];
        p(j) = postselection_probability(rho, b);
        for (int i = 0; i < n; ++i) data.w(j, i) = exact_weak_value(rho, config.a_basis()[static_cast<std::size_t>(i)].projector(), b);
    }
    data.p = p;
    return data;
}

/// Noisy weak values via weak_value_estimate; P_j estimated as Born
/// frequencies of a projective measurement of Pi_{b_j} on the same ensemble size.
inline WuWeakData wu_simulated_data(const DensityMatrix &rho, const WuConfiguration &config, const NoiseModel &noise) {
    if (rho.dim() != config.dim()) fail(ErrorCode::DimensionMismatch, "state and configuration dimensions differ");
    noise.validate();
    const int n = config.dim();
    const int m = config.post_count();
    WuWeakData data;
    data.w.resize(m, n);
    data.w_std.resize(m, n);
    RealVector p(m);
    for (int j = 0; j < m; ++j) {
        const PureState &b = config.post_states()[static_cast<std::size_t>(j)];
        const MeasurementRecord pr =
            strong_expectation(rho, b.projector(), noise.ensemble_size, noise.derived(static_cast<std::uint64_t>(j) * (n + 1)).seed);
        p(j) = pr.estimate;
        for (int i = 0; i < n; ++i) {
            const auto counter = static_cast<std::uint64_t>(j) * (n + 1) + 1 + i;
            const WeakValueRecord r =
                weak_value_estimate(rho, config.a_basis()[static_cast<std::size_t>(i)].projector(), b, noise.derived(counter));
            data.w(j, i) = r.estimate;
            data.w_std(j, i) = r.std_error_re;
        }
    }
    data.p = p;
    return data;
}

namespace detail {
inline cplx checked_ratio(cplx num, cplx den) {
    if (!(std::abs(den) > tol::kOverlap)) fail(ErrorCode::DivisorUnderflow, "|beta| = " + std::to_string(std::abs(den)));
    return num / den;
}

inline const RealVector &require_p(const WuWeakData &data) {
    if (!data.p) fail(ErrorCode::InvalidState, "post-selection probabilities are absent");
    return *data.p;
}

inline StateEstimate finish_estimate(ComplexMatrix m, double noise_scale) {
    StateEstimate est;
    est.rho = hermitian_part(m);
    est.min_eigenvalue = hermitian_eigenvalues(est.rho).minCoeff();
    if (est.min_eigenvalue < -5.0 * std::max(noise_scale, tol::kExact)) est.flags.emplace_back("not_positive");
    return est;
}
}  // namespace detail

/// sum_k P_k (beta_kj / beta_ki) w_ki over the supplied post-selection
/// states, without any completeness check. Equals <a_i|rho|a_j> only when
/// sum_k |b_k><b_k| = I.
inline ComplexMatrix wu_a_basis_sum(const WuWeakData &data, const WuConfiguration &config) {
    const RealVector &p = detail::require_p(data);
    const int n = config.dim();
    const int m = config.post_count();
    if (data.w.rows() != m || data.w.cols() != n || p.size() != m) fail(ErrorCode::DimensionMismatch, "weak data has wrong shape");
    const ComplexMatrix &beta = config.beta();
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < m; ++k) out(i, j) += p(k) * detail::checked_ratio(beta(k, j), beta(k, i)) * data.w(k, i);
    return out;
}

/// Matrix elements <a_i|rho|a_j> (the returned estimate is expressed in the
/// a-basis). Requires a complete orthonormal post-selection family.
inline StateEstimate wu_reconstruct_in_a(const WuWeakData &data, const WuConfiguration &config) {
    if (!config.post_family_complete()) {
        fail(ErrorCode::IncompletePostSelectionFamily, "post-selection states must form an orthonormal basis (M = N = " +
                                                           std::to_string(config.dim()) + ", got M = " +
                                                           std::to_string(config.post_count()) + ")");
    }
    return detail::finish_estimate(wu_a_basis_sum(data, config), data.w_std.size() ? data.w_std.maxCoeff() : 0.0);
}

/// <b_i|rho|b_j> = P_j sum_k (beta_ik / beta_jk) w_jk, an M x M matrix. Holds
/// for any post-selection states since only completeness of the a-basis is used.
inline ComplexMatrix wu_reconstruct_in_b(const WuWeakData &data, const WuConfiguration &config) {
    const RealVector &p = detail::require_p(data);
    const int n = config.dim();
    const int m = config.post_count();
    if (data.w.rows() != m || data.w.cols() != n || p.size() != m) fail(ErrorCode::DimensionMismatch, "weak data has wrong shape");
    const ComplexMatrix &beta = config.beta();
    ComplexMatrix out = ComplexMatrix::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < n; ++k) out(i, j) += p(j) * detail::checked_ratio(beta(i, k), beta(j, k)) * data.w(j, k);
    return out;
}

/// x_ij = <b_i|rho|b_j> / P_j = sum_k (beta_ik / beta_jk) w_jk, computed from
/// weak values alone.
inline ComplexMatrix wu_x_matrix(const WuWeakData &data, const WuConfiguration &config) {
    const int n = config.dim();
    const int m = config.post_count();
    if (data.w.rows() != m || data.w.cols() != n) fail(ErrorCode::DimensionMismatch, "weak data has wrong shape");
    const ComplexMatrix &beta = config.beta();
    ComplexMatrix x = ComplexMatrix::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < n; ++k) x(i, j) += detail::checked_ratio(beta(i, k), beta(j, k)) * data.w(j, k);
    return x;
}

struct PFreeSolution {
    RealVector p;          // recovered P_j
    ComplexMatrix in_b;    // <b_i|rho|b_j> = x_ij P_j
    StateEstimate estimate;  // computational basis
    double residual = 0.0;   // max |x_ji P_i - conj(x_ij) P_j|
};

/// Recovers P from the Hermiticity relations x_ji P_i = conj(x_ij) P_j and
/// sum_j P_j = 1 (minimum-norm least squares), then reassembles rho. When
/// the relations leave P undetermined (e.g. x = identity) the minimum-norm
/// solution spreads the weight uniformly.
inline PFreeSolution wu_p_free_solve(const ComplexMatrix &x, const WuConfiguration &config) {
    if (!config.post_family_complete()) {
        fail(ErrorCode::IncompletePostSelectionFamily, "P-free reconstruction needs a complete orthonormal post family");
    }
    const int m = config.post_count();
    if (x.rows() != m || x.cols() != m) fail(ErrorCode::DimensionMismatch, "x must be M x M");
    const int pairs = m * (m - 1) / 2;
    RealMatrix a = RealMatrix::Zero(2 * pairs + 1, m);
    RealVector rhs = RealVector::Zero(2 * pairs + 1);
    int row = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const cplx lhs = x(j, i);
            const cplx rhs_coef = std::conj(x(i, j));
            a(row, i) = lhs.real();
            a(row, j) = -rhs_coef.real();
            a(row + 1, i) = lhs.imag();
            a(row + 1, j) = -rhs_coef.imag();
            row += 2;
        }
    }
    a.row(row).setOnes();
    rhs(row) = 1.0;
    PFreeSolution out;
    out.p = a.completeOrthogonalDecomposition().solve(rhs);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            out.residual = std::max(out.residual, std::abs(x(j, i) * out.p(i) - std::conj(x(i, j)) * out.p(j)));
    out.in_b.resize(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out.in_b(i, j) = x(i, j) * out.p(j);
    const ComplexMatrix bm = basis_matrix(config.post_states());
    ComplexMatrix rho = bm * out.in_b * bm.adjoint();
    const double trace = rho.trace().real();
    if (std::abs(trace) > 0.0) rho /= trace;
    out.estimate = detail::finish_estimate(rho, out.residual);
    if (out.residual > tol::kExact) out.estimate.flags.emplace_back("inconsistent_ratios");
    return out;
}

/// P-free reconstruction from x (taken from data.x, or computed from the
/// weak values when absent). Throws InconsistentRatios if the Hermiticity
/// residual exceeds `tolerance`.
inline StateEstimate wu_p_free_reconstruct(const WuWeakData &data, const WuConfiguration &config, double tolerance = 1e-8) {
    const ComplexMatrix x = data.x ? *data.x : wu_x_matrix(data, config);
    PFreeSolution sol = wu_p_free_solve(x, config);
    if (sol.residual > tolerance) {
        fail(ErrorCode::InconsistentRatios, "Hermiticity residual " + std::to_string(sol.residual) + " exceeds " +
                                                std::to_string(tolerance));
    }
    return sol.estimate;
}

enum class Feasibility { ExactMatch, UnderDetermined, OverDetermined };

constexpr std::string_view feasibility_name(Feasibility f) {
    switch (f) {
        case Feasibility::ExactMatch: return "exact-match";
        case Feasibility::UnderDetermined: return "under-determined";
        case Feasibility::OverDetermined: return "over-determined";
    }
    return "unknown";
}

struct FeasibilityVerdict {
    Feasibility verdict = Feasibility::UnderDetermined;
    long real_data = 0;      // 2 M (N - 1): M post-selections, N - 1 independent complex weak values each
    long required = 0;       // N^2 - 1
    bool match_possible_for_dim = false;  // some M matches this N (N odd)
};

inline FeasibilityVerdict wu_feasibility(int dim, int post_count) {
    if (dim < 2) fail(ErrorCode::InvalidDimension, "N must be at least 2");
    if (post_count < 1) fail(ErrorCode::ConfigError, "M must be at least 1");
    FeasibilityVerdict v;
    v.real_data = 2L * post_count * (dim - 1);
    v.required = static_cast<long>(dim) * dim - 1;
    v.verdict = v.real_data == v.required  ? Feasibility::ExactMatch
                : v.real_data < v.required ? Feasibility::UnderDetermined
                                           : Feasibility::OverDetermined;
    v.match_possible_for_dim = dim % 2 == 1;
    return v;
}

}  // namespace weaktomo
