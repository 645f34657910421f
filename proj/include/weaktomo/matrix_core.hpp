#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "weaktomo/error.hpp"
#include "weaktomo/rng.hpp"

namespace weaktomo {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

namespace tol {
inline constexpr double kExact = 1e-10;       // default for exact-arithmetic identities
inline constexpr double kHermitian = 1e-12;   // DensityMatrix / basis Hermiticity
inline constexpr double kTrace = 1e-12;
inline constexpr double kNegativeEigen = 1e-10;
inline constexpr double kNorm = 1e-12;
inline constexpr double kOverlap = 1e-8;      // smallest admissible |<b|a_i>| or tr(rho Pi_b)
}  // namespace tol

// ---------------------------------------------------------------------------
// Tolerance-based comparison helpers. Floating matrices are never compared
// with operator==.

template <typename DerivedA, typename DerivedB>
double max_abs_diff(const Eigen::MatrixBase<DerivedA> &a, const Eigen::MatrixBase<DerivedB> &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail(ErrorCode::ShapeMismatch, "max_abs_diff: operand shapes differ");
    }
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

template <typename DerivedA, typename DerivedB>
bool approx_equal(const Eigen::MatrixBase<DerivedA> &a, const Eigen::MatrixBase<DerivedB> &b,
                  double tolerance = tol::kExact) {
    return a.rows() == b.rows() && a.cols() == b.cols() && max_abs_diff(a, b) <= tolerance;
}

inline double hermiticity_error(const ComplexMatrix &a) {
    if (a.rows() != a.cols()) return INFINITY;
    return max_abs_diff(a, a.adjoint());
}

inline bool is_hermitian(const ComplexMatrix &a, double tolerance = tol::kExact) {
    return a.rows() == a.cols() && hermiticity_error(a) <= tolerance;
}

inline ComplexMatrix hermitian_part(const ComplexMatrix &a) { return 0.5 * (a + a.adjoint()); }

/// tr(A^dagger B).
inline cplx frobenius_inner(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail(ErrorCode::ShapeMismatch, "frobenius_inner: shapes " + std::to_string(a.rows()) + "x" +
                                           std::to_string(a.cols()) + " and " + std::to_string(b.rows()) +
                                           "x" + std::to_string(b.cols()));
    }
    return (a.adjoint() * b).trace();
}

inline double frobenius_distance(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail(ErrorCode::ShapeMismatch, "frobenius_distance: shapes differ");
    }
    return (a - b).norm();
}

inline ComplexMatrix pauli_x() { return (ComplexMatrix(2, 2) << 0, 1, 1, 0).finished(); }
inline ComplexMatrix pauli_y() { return (ComplexMatrix(2, 2) << 0, -kI, kI, 0).finished(); }
inline ComplexMatrix pauli_z() { return (ComplexMatrix(2, 2) << 1, 0, 0, -1).finished(); }

// ---------------------------------------------------------------------------

/// Unit vector in C^N.
class PureState {
public:
    explicit PureState(ComplexVector amplitudes) : amp_(std::move(amplitudes)) {
        if (amp_.size() < 1) fail(ErrorCode::InvalidDimension, "PureState needs at least one amplitude");
        const double norm2 = amp_.squaredNorm();
        if (std::abs(norm2 - 1.0) > tol::kNorm) {
            fail(ErrorCode::InvalidState, "PureState amplitudes have squared norm " + std::to_string(norm2));
        }
    }

    /// Normalizes `v` before construction.
    static PureState normalized(const ComplexVector &v) {
        const double n = v.norm();
        if (!(n > 0.0)) fail(ErrorCode::InvalidState, "cannot normalize a zero vector");
        return PureState(v / n);
    }

    static PureState basis(int dim, int k) {
        if (k < 0 || k >= dim) fail(ErrorCode::DimensionMismatch, "basis index out of range");
        ComplexVector v = ComplexVector::Zero(dim);
        v(k) = 1.0;
        return PureState(std::move(v));
    }

    int dim() const { return static_cast<int>(amp_.size()); }
    const ComplexVector &amplitudes() const { return amp_; }
    cplx operator[](int k) const { return amp_(k); }

    /// <this|other>
    cplx inner(const PureState &other) const {
        if (other.dim() != dim()) fail(ErrorCode::DimensionMismatch, "inner product of states of different dimension");
        return amp_.dot(other.amp_);
    }

    ComplexMatrix projector() const { return amp_ * amp_.adjoint(); }

private:
    ComplexVector amp_;
};

using StateBasis = std::vector<PureState>;

/// Columns are the basis states.
inline ComplexMatrix basis_matrix(const StateBasis &basis) {
    if (basis.empty()) return {};
    ComplexMatrix m(basis.front().dim(), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = basis[k].amplitudes();
    return m;
}

inline StateBasis computational_basis(int dim) {
    StateBasis out;
    out.reserve(dim);
    for (int k = 0; k < dim; ++k) out.push_back(PureState::basis(dim, k));
    return out;
}

inline double orthonormality_error(const StateBasis &basis) {
    if (basis.empty()) return 0.0;
    const ComplexMatrix m = basis_matrix(basis);
    return max_abs_diff(m.adjoint() * m, ComplexMatrix::Identity(m.cols(), m.cols()));
}

/// Orthonormal and complete (N states in dimension N).
inline bool is_orthonormal_basis(const StateBasis &basis, double tolerance = tol::kExact) {
    if (basis.empty()) return false;
    const int n = basis.front().dim();
    if (static_cast<int>(basis.size()) != n) return false;
    for (const auto &s : basis) {
        if (s.dim() != n) return false;
    }
    return orthonormality_error(basis) <= tolerance;
}

// ---------------------------------------------------------------------------

struct EigenDecomposition {
    RealVector eigenvalues;  // descending
    StateBasis eigenvectors;

    ComplexMatrix reassemble() const {
        const int n = static_cast<int>(eigenvalues.size());
        ComplexMatrix a = ComplexMatrix::Zero(n, n);
        for (int k = 0; k < n; ++k) a += eigenvalues(k) * eigenvectors[k].projector();
        return a;
    }
};

namespace detail {

// Largest-magnitude component made real positive; first index wins ties.
inline ComplexVector canonical_phase(ComplexVector v) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        const double a = std::abs(v(k));
        if (a > best_abs + 1e-12) {
            best_abs = a;
            best = k;
        }
    }
    if (best_abs > 0.0) v *= std::conj(v(best)) / best_abs;
    return v;
}

}  // namespace detail

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending and each
/// eigenvector phase-canonicalized.
inline EigenDecomposition hermitian_eig(const ComplexMatrix &a) {
    if (a.rows() != a.cols() || a.rows() == 0) fail(ErrorCode::ShapeMismatch, "hermitian_eig needs a square matrix");
    const double herr = hermiticity_error(a);
    if (herr > tol::kExact) {
        fail(ErrorCode::NonHermitianInput, "max |A - A^dagger| = " + std::to_string(herr));
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(a));
    const Eigen::Index n = a.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    // Eigen returns ascending values; reverse with a stable tie order.
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index l, Eigen::Index r) {
        return solver.eigenvalues()(l) > solver.eigenvalues()(r);
    });
    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        out.eigenvalues(k) = solver.eigenvalues()(src);
        out.eigenvectors.push_back(PureState::normalized(detail::canonical_phase(solver.eigenvectors().col(src))));
    }
    return out;
}

inline RealVector hermitian_eigenvalues(const ComplexMatrix &a) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(a), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().reverse();
}

// ---------------------------------------------------------------------------

struct DensityCheck {
    double hermiticity_error = 0.0;
    double trace_error = 0.0;
    double min_eigenvalue = 0.0;

    bool ok() const {
        return hermiticity_error <= tol::kHermitian && trace_error <= tol::kTrace &&
               min_eigenvalue >= -tol::kNegativeEigen;
    }
};

inline DensityCheck check_density(const ComplexMatrix &m) {
    DensityCheck c;
    if (m.rows() != m.cols() || m.rows() == 0) {
        c.hermiticity_error = INFINITY;
        return c;
    }
    c.hermiticity_error = hermiticity_error(m);
    c.trace_error = std::abs(m.trace() - cplx(1.0));
    c.min_eigenvalue = hermitian_eigenvalues(m).minCoeff();
    return c;
}

/// Hermitian, unit-trace, positive semidefinite N x N matrix. Construction
/// validates all three invariants; an instance is never invalid.
class DensityMatrix {
public:
    explicit DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
        const DensityCheck c = check_density(m_);
        if (!c.ok()) {
            fail(ErrorCode::InvalidState, "hermiticity error " + std::to_string(c.hermiticity_error) +
                                              ", trace error " + std::to_string(c.trace_error) +
                                              ", min eigenvalue " + std::to_string(c.min_eigenvalue));
        }
    }

    static DensityMatrix maximally_mixed(int dim) {
        if (dim < 1) fail(ErrorCode::InvalidDimension, "dimension must be positive");
        return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
    }

    static DensityMatrix from_pure(const PureState &psi) { return DensityMatrix(psi.projector()); }

    int dim() const { return static_cast<int>(m_.rows()); }
    const ComplexMatrix &matrix() const { return m_; }
    cplx operator()(int i, int j) const { return m_(i, j); }

    double purity() const { return (m_ * m_).trace().real(); }

    /// tr(rho O)
    cplx expectation(const ComplexMatrix &op) const {
        if (op.rows() != m_.rows() || op.cols() != m_.cols()) {
            fail(ErrorCode::DimensionMismatch, "observable dimension does not match state");
        }
        return (m_ * op).trace();
    }

    /// Matrix elements <u_i|rho|u_j> in the given basis.
    ComplexMatrix in_basis(const StateBasis &basis) const {
        const ComplexMatrix u = basis_matrix(basis);
        return u.adjoint() * m_ * u;
    }

private:
    ComplexMatrix m_;
};

/// Result of a reconstruction. Noisy data may yield a matrix that is not a
/// valid state; it is reported as-is together with flags.
struct StateEstimate {
    ComplexMatrix rho;
    double min_eigenvalue = 0.0;
    std::vector<std::string> flags;

    bool valid() const { return flags.empty(); }
    int dim() const { return static_cast<int>(rho.rows()); }
    DensityMatrix to_density() const { return DensityMatrix(rho); }
};

// ---------------------------------------------------------------------------

/// Standard complex normal: E|z|^2 = 1.
inline cplx complex_normal(Rng &rng) {
    constexpr double s = 0.70710678118654752440;
    const double re = rng.normal();
    const double im = rng.normal();
    return {s * re, s * im};
}

inline ComplexMatrix ginibre(int rows, int cols, Rng &rng) {
    ComplexMatrix g(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) g(i, j) = complex_normal(rng);
    return g;
}

/// Ginibre-induced random state rho = G G^dagger / tr(G G^dagger), G of size N x rank.
inline DensityMatrix random_density(int dim, int rank, std::uint64_t seed) {
    if (dim < 1) fail(ErrorCode::InvalidDimension, "dimension must be positive");
    if (rank < 1 || rank > dim) {
        fail(ErrorCode::InvalidRank, "rank " + std::to_string(rank) + " not in [1, " + std::to_string(dim) + "]");
    }
    Rng rng(seed);
    const ComplexMatrix g = ginibre(dim, rank, rng);
    ComplexMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return DensityMatrix(hermitian_part(rho));
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix
/// with the diagonal phases of R removed.
inline ComplexMatrix random_unitary(int dim, std::uint64_t seed) {
    Rng rng(seed);
    const ComplexMatrix g = ginibre(dim, dim, rng);
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(dim, dim);
    const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < dim; ++k) {
        const double a = std::abs(r(k, k));
        if (a > 0.0) q.col(k) *= r(k, k) / a;
    }
    return q;
}

inline PureState random_pure_state(int dim, std::uint64_t seed) {
    Rng rng(seed);
    ComplexVector v(dim);
    for (int k = 0; k < dim; ++k) v(k) = complex_normal(rng);
    return PureState::normalized(v);
}

/// Columns of a Haar unitary as a basis.
inline StateBasis random_orthonormal_basis(int dim, std::uint64_t seed) {
    const ComplexMatrix u = random_unitary(dim, seed);
    StateBasis out;
    out.reserve(dim);
    for (int k = 0; k < dim; ++k) out.push_back(PureState::normalized(u.col(k)));
    return out;
}

}  // namespace weaktomo
