#pragma once

#include <cmath>
#include <vector>

#include "weaktomo/matrix_core.hpp"

namespace weaktomo {

/// Unbiased sample covariance of the rows of `samples` (one sample per row).
inline RealMatrix sample_covariance(const RealMatrix &samples) {
    const Eigen::Index n = samples.rows();
    if (n < 2) fail(ErrorCode::DimensionMismatch, "sample_covariance needs at least two samples");
    const RealVector mean = samples.colwise().mean();
    const RealMatrix centered = samples.rowwise() - mean.transpose();
    return centered.transpose() * centered / static_cast<double>(n - 1);
}

/// log sqrt(det C) for a symmetric positive semidefinite C; -inf if singular.
inline double log_sqrt_det(const RealMatrix &c) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(c, Eigen::EigenvaluesOnly);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
        const double ev = solver.eigenvalues()(k);
        if (!(ev > 0.0)) return -INFINITY;
        acc += std::log(ev);
    }
    return 0.5 * acc;
}

struct MeanAndError {
    double mean = 0.0;
    double std_error = 0.0;
};

inline MeanAndError mean_and_error(const std::vector<double> &v) {
    MeanAndError out;
    if (v.empty()) return out;
    for (double x : v) out.mean += x;
    out.mean /= static_cast<double>(v.size());
    if (v.size() < 2) return out;
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return out;
}

}  // namespace weaktomo
