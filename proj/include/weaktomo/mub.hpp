#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "weaktomo/matrix_core.hpp"

namespace weaktomo {

struct BasisFamily {
    int dim = 0;
    std::vector<StateBasis> bases;
    bool mutually_unbiased = false;
};

constexpr bool is_prime(int n) {
    if (n < 2) return false;
    for (int d = 2; d * d <= n; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

/// max over (u in A, v in B) of | |<u|v>|^2 - 1/N |. Zero iff A and B are
/// mutually unbiased.
inline double unbiasedness_deviation(const StateBasis &a, const StateBasis &b) {
    if (a.empty() || b.empty() || a.front().dim() != b.front().dim()) {
        fail(ErrorCode::DimensionMismatch, "bases must be non-empty and of equal dimension");
    }
    if (!is_orthonormal_basis(a) || !is_orthonormal_basis(b)) {
        fail(ErrorCode::NotOrthonormal, "unbiasedness_deviation requires orthonormal bases");
    }
    const ComplexMatrix overlaps = basis_matrix(a).adjoint() * basis_matrix(b);
    const double inv_n = 1.0 / a.front().dim();
    return (overlaps.cwiseAbs2().array() - inv_n).abs().maxCoeff();
}

/// Largest deviation over all pairs of distinct bases in the family.
inline double max_pairwise_deviation(const BasisFamily &family) {
    double worst = 0.0;
    for (std::size_t p = 0; p < family.bases.size(); ++p)
        for (std::size_t q = p + 1; q < family.bases.size(); ++q)
            worst = std::max(worst, unbiasedness_deviation(family.bases[p], family.bases[q]));
    return worst;
}

/// Fourier basis |f_t> = N^{-1/2} sum_j w^{jt} |j>, w = exp(2 pi i / N).
inline StateBasis fourier_basis(int dim) {
    StateBasis out;
    out.reserve(dim);
    const double amp = 1.0 / std::sqrt(static_cast<double>(dim));
    for (int t = 0; t < dim; ++t) {
        ComplexVector v(dim);
        for (int j = 0; j < dim; ++j) v(j) = std::polar(amp, 2.0 * std::numbers::pi * ((j * t) % dim) / dim);
        out.push_back(PureState::normalized(v));
    }
    return out;
}

namespace detail {
inline ComplexVector vec2(cplx a, cplx b) {
    ComplexVector v(2);
    v << a, b;
    return v;
}
}  // namespace detail

/// Complete set of N + 1 mutually unbiased bases for prime N: the
/// computational basis followed by the bases
///   |v_{s,t}>_j = N^{-1/2} w^{s j^2 + t j},  s, t = 0 .. N-1
/// (odd N), or the sigma_x and sigma_y eigenbases for N = 2. The first
/// component of every state is real and non-negative.
inline BasisFamily mub_prime(int dim) {
    if (!is_prime(dim)) fail(ErrorCode::NotPrime, "mub_prime needs a prime dimension, got " + std::to_string(dim));
    BasisFamily family;
    family.dim = dim;
    family.bases.push_back(computational_basis(dim));
    const double amp = 1.0 / std::sqrt(static_cast<double>(dim));
    if (dim == 2) {
        using detail::vec2;
        family.bases.push_back({PureState::normalized(vec2(amp, amp)),
                                PureState::normalized(vec2(amp, -amp))});
        family.bases.push_back({PureState::normalized(vec2(amp, amp * kI)),
                                PureState::normalized(vec2(amp, -amp * kI))});
    } else {
        for (int s = 0; s < dim; ++s) {
            StateBasis basis;
            basis.reserve(dim);
            for (int t = 0; t < dim; ++t) {
                ComplexVector v(dim);
                for (int j = 0; j < dim; ++j) {
                    const int exponent = (s * j * j + t * j) % dim;
                    v(j) = std::polar(amp, 2.0 * std::numbers::pi * exponent / dim);
                }
                basis.push_back(PureState::normalized(v));
            }
            family.bases.push_back(std::move(basis));
        }
    }
    family.mutually_unbiased = max_pairwise_deviation(family) <= tol::kExact;
    return family;
}

}  // namespace weaktomo
