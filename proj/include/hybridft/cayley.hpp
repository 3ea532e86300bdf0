#pragma once

#include <cmath>
#include <cstddef>

#include "hybridft/error.hpp"
#include "hybridft/matrix.hpp"

namespace hybridft::num {

// m - m^T.  Exact skewness: IEEE subtraction gives (a-b) == -(b-a).
inline Matrix skew_project(const Matrix& m) {
    if (!is_square(m)) throw shape_error("skew_project: matrix must be square");
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) - m(j, i);
    return out;
}

inline double skewness_defect(const Matrix& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i)
        for (std::size_t j = 0; j < q.cols(); ++j) {
            const double d = q(i, j) + q(j, i);
            s += d * d;
        }
    return std::sqrt(s);
}

// Cayley transform (I + eta q)(I - eta q)^{-1}.  Maps skew-symmetric q into
// the rotation group; the result is orthonormal up to solve accuracy.
inline Matrix cayley(const Matrix& q, double eta) {
    if (!is_square(q)) throw shape_error("cayley: matrix must be square");
    const double defect = skewness_defect(q);
    if (defect > 1e-10 * std::max(1.0, frobenius_norm(q)))
        throw invalid_input_error("cayley: input is not skew-symmetric");

    const std::size_t n = q.rows();
    Matrix plus = Matrix::identity(n);
    Matrix minus = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            plus(i, j) += eta * q(i, j);
            minus(i, j) -= eta * q(i, j);
        }
    // (I+eq)(I-eq)^{-1} = [ (I-eq)^{-T} (I+eq)^T ]^T, so one transposed solve
    // keeps the factor order literal.
    return transpose(solve(transpose(minus), transpose(plus)));
}

}  // namespace hybridft::num
