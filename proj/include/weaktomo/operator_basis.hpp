#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "weaktomo/matrix_core.hpp"

namespace weaktomo {

/// Ordered set of N^2 - 1 traceless Hermitian operators with their Gram
/// matrix gram(i, j) = tr(T_i T_j).
class OperatorBasis {
public:
    OperatorBasis(int dim, std::vector<ComplexMatrix> ops) : dim_(dim), ops_(std::move(ops)) {
        if (dim_ < 2) fail(ErrorCode::InvalidDimension, "operator basis needs N >= 2");
        const std::size_t expected = static_cast<std::size_t>(dim_) * dim_ - 1;
        if (ops_.size() != expected) {
            fail(ErrorCode::DimensionMismatch,
                 "expected " + std::to_string(expected) + " operators, got " + std::to_string(ops_.size()));
        }
        for (const auto &t : ops_) {
            if (t.rows() != dim_ || t.cols() != dim_) fail(ErrorCode::DimensionMismatch, "operator has wrong shape");
            if (hermiticity_error(t) > tol::kHermitian) fail(ErrorCode::NonHermitianInput, "basis operator not Hermitian");
            if (std::abs(t.trace()) > tol::kHermitian) fail(ErrorCode::InvalidState, "basis operator not traceless");
        }
        const auto k = static_cast<Eigen::Index>(ops_.size());
        gram_.resize(k, k);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j) gram_(i, j) = (ops_[i] * ops_[j]).trace().real();
        solver_.compute(gram_);
        if (solver_.info() != Eigen::Success || (solver_.vectorD().array() <= 0.0).any()) {
            fail(ErrorCode::InvalidState, "Gram matrix is not positive definite");
        }
    }

    int dim() const { return dim_; }
    std::size_t size() const { return ops_.size(); }
    const std::vector<ComplexMatrix> &ops() const { return ops_; }
    const ComplexMatrix &operator[](std::size_t i) const { return ops_[i]; }
    const RealMatrix &gram() const { return gram_; }

    RealVector solve_gram(const RealVector &x) const { return solver_.solve(x); }

private:
    int dim_;
    std::vector<ComplexMatrix> ops_;
    RealMatrix gram_;
    Eigen::LDLT<RealMatrix> solver_;
};

/// Generalized Gell-Mann matrices normalized to tr(T_i T_j) = 2 delta_ij.
/// Order: symmetric |j><k| + |k><j| for j < k (lexicographic), then
/// antisymmetric -i|j><k| + i|k><j| in the same order, then the N - 1
/// diagonal matrices. For N = 2 this is (sigma_x, sigma_y, sigma_z).
inline OperatorBasis gell_mann_basis(int dim) {
    if (dim < 2) fail(ErrorCode::InvalidDimension, "gell_mann_basis needs N >= 2, got " + std::to_string(dim));
    std::vector<ComplexMatrix> ops;
    ops.reserve(static_cast<std::size_t>(dim) * dim - 1);
    for (int j = 0; j < dim; ++j) {
        for (int k = j + 1; k < dim; ++k) {
            ComplexMatrix t = ComplexMatrix::Zero(dim, dim);
            t(j, k) = 1.0;
            t(k, j) = 1.0;
            ops.push_back(std::move(t));
        }
    }
    for (int j = 0; j < dim; ++j) {
        for (int k = j + 1; k < dim; ++k) {
            ComplexMatrix t = ComplexMatrix::Zero(dim, dim);
            t(j, k) = -kI;
            t(k, j) = kI;
            ops.push_back(std::move(t));
        }
    }
    for (int l = 1; l < dim; ++l) {
        ComplexMatrix t = ComplexMatrix::Zero(dim, dim);
        const double scale = std::sqrt(2.0 / (static_cast<double>(l) * (l + 1)));
        for (int j = 0; j < l; ++j) t(j, j) = scale;
        t(l, l) = -scale * l;
        ops.push_back(std::move(t));
    }
    return OperatorBasis(dim, std::move(ops));
}

struct BlochCoordinates {
    int dim = 0;
    RealVector c;  // expansion coefficients of rho - I/N
    RealVector x;  // expectations tr(rho T_j)
};

/// I/N + sum_i c_i T_i
inline ComplexMatrix assemble_from_coefficients(const RealVector &c, const OperatorBasis &basis) {
    if (static_cast<std::size_t>(c.size()) != basis.size()) {
        fail(ErrorCode::DimensionMismatch, "coefficient vector length does not match basis size");
    }
    const int n = basis.dim();
    ComplexMatrix rho = ComplexMatrix::Identity(n, n) / static_cast<double>(n);
    for (std::size_t i = 0; i < basis.size(); ++i) rho += c(static_cast<Eigen::Index>(i)) * basis[i];
    return rho;
}

inline RealVector expectation_vector(const ComplexMatrix &rho, const OperatorBasis &basis) {
    if (rho.rows() != basis.dim() || rho.cols() != basis.dim()) {
        fail(ErrorCode::DimensionMismatch, "state and basis dimensions differ");
    }
    RealVector x(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t j = 0; j < basis.size(); ++j) x(static_cast<Eigen::Index>(j)) = (rho * basis[j]).trace().real();
    return x;
}

inline BlochCoordinates bloch_decompose(const DensityMatrix &rho, const OperatorBasis &basis) {
    if (rho.dim() != basis.dim()) {
        fail(ErrorCode::DimensionMismatch, "state dimension " + std::to_string(rho.dim()) + " vs basis dimension " +
                                               std::to_string(basis.dim()));
    }
    BlochCoordinates out;
    out.dim = rho.dim();
    out.x = expectation_vector(rho.matrix(), basis);
    out.c = basis.solve_gram(out.x);
    return out;
}

/// Linear inversion c = M^{-1} x, rho = I/N + sum c_i T_i. No positivity
/// projection; an indefinite result is returned with flag "not_positive".
inline StateEstimate standard_reconstruct(const RealVector &x, const OperatorBasis &basis) {
    if (static_cast<std::size_t>(x.size()) != basis.size()) {
        fail(ErrorCode::DimensionMismatch, "expectation vector has length " + std::to_string(x.size()) + ", expected " +
                                               std::to_string(basis.size()));
    }
    StateEstimate est;
    est.rho = hermitian_part(assemble_from_coefficients(basis.solve_gram(x), basis));
    est.min_eigenvalue = hermitian_eigenvalues(est.rho).minCoeff();
    if (est.min_eigenvalue < -tol::kNegativeEigen) est.flags.emplace_back("not_positive");
    return est;
}

// ---------------------------------------------------------------------------
// Flat metric dl^2 = 2 tr(d rho d rho) on the independent components of rho.
// Coordinates: rho_11 .. rho_{N-1,N-1} (rho_NN eliminated through the trace
// constraint), then (Re rho_ij, Im rho_ij) for i < j in lexicographic order.

inline int state_space_dim(int dim) { return dim * dim - 1; }

inline std::vector<std::string> flat_coordinate_labels(int dim) {
    std::vector<std::string> labels;
    for (int i = 0; i + 1 < dim; ++i) labels.push_back("rho_" + std::to_string(i) + std::to_string(i));
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
            labels.push_back("Re rho_" + std::to_string(i) + std::to_string(j));
            labels.push_back("Im rho_" + std::to_string(i) + std::to_string(j));
        }
    }
    return labels;
}

/// Coordinates of a Hermitian matrix (in whatever basis it is expressed).
inline RealVector flat_coordinates(const ComplexMatrix &rho) {
    const int n = static_cast<int>(rho.rows());
    RealVector q(n * n - 1);
    int a = 0;
    for (int i = 0; i + 1 < n; ++i) q(a++) = rho(i, i).real();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            q(a++) = rho(i, j).real();
            q(a++) = rho(i, j).imag();
        }
    }
    return q;
}

/// Traceless Hermitian direction d rho / d q_a.
inline ComplexMatrix flat_tangent(int dim, int coordinate) {
    ComplexMatrix e = ComplexMatrix::Zero(dim, dim);
    if (coordinate < dim - 1) {
        e(coordinate, coordinate) = 1.0;
        e(dim - 1, dim - 1) = -1.0;
        return e;
    }
    int a = dim - 1;
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j, a += 2) {
            if (a == coordinate) {
                e(i, j) = 1.0;
                e(j, i) = 1.0;
                return e;
            }
            if (a + 1 == coordinate) {
                e(i, j) = kI;
                e(j, i) = -kI;
                return e;
            }
        }
    }
    fail(ErrorCode::DimensionMismatch, "coordinate index out of range");
}

struct FlatMetric {
    int dim = 0;
    std::vector<std::string> coordinate_labels;
    RealMatrix gram;
    double log_det_sqrt = 0.0;  // log d(N); finite even where d(N) overflows
    double det_sqrt = 0.0;      // d(N)

    /// dl^2 for a coordinate displacement.
    double line_element(const RealVector &dq) const { return dq.dot(gram * dq); }
};

inline FlatMetric flat_metric(int dim) {
    if (dim < 2) fail(ErrorCode::InvalidDimension, "flat_metric needs N >= 2, got " + std::to_string(dim));
    const int k = state_space_dim(dim);
    FlatMetric m;
    m.dim = dim;
    m.coordinate_labels = flat_coordinate_labels(dim);
    m.gram = RealMatrix::Zero(k, k);
    // 2 sum_i d rho_ii^2 with d rho_NN = -sum_{i<N} d rho_ii gives 2 (I + 1 1^T)
    for (int i = 0; i + 1 < dim; ++i)
        for (int j = 0; j + 1 < dim; ++j) m.gram(i, j) = (i == j) ? 4.0 : 2.0;
    // each off-diagonal pair enters twice: 2 * 2 (dRe^2 + dIm^2)
    for (int a = dim - 1; a < k; ++a) m.gram(a, a) = 4.0;
    Eigen::LDLT<RealMatrix> ldlt(m.gram);
    m.log_det_sqrt = 0.5 * ldlt.vectorD().array().log().sum();
    const double det = ldlt.vectorD().prod();
    m.det_sqrt = std::isfinite(det) ? std::sqrt(det) : std::exp(m.log_det_sqrt);
    return m;
}

}  // namespace weaktomo
