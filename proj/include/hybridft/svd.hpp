#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "hybridft/error.hpp"
#include "hybridft/matrix.hpp"

namespace hybridft::num {

struct SvdResult {
    Matrix u;                   // d x r, orthonormal columns
    std::vector<double> sigma;  // r non-negative values, descending
    Matrix v;                   // k x r, orthonormal columns
};

namespace detail {

// One-sided Jacobi on the columns of `b` (rows >= cols assumed by caller),
// accumulating right rotations into `v`.  Deterministic cyclic sweep order
// (p, q) with p < q; converges quadratically for desk-scale matrices.
inline void one_sided_jacobi(Matrix& b, Matrix& v) {
    const std::size_t n = b.cols();
    const std::size_t m = b.rows();
    const double eps = 1e-15;
    const std::size_t max_sweeps = 64;

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    app += b(i, p) * b(i, p);
                    aqq += b(i, q) * b(i, q);
                    apq += b(i, p) * b(i, q);
                }
                if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;

                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;

                for (std::size_t i = 0; i < m; ++i) {
                    const double bp = b(i, p);
                    const double bq = b(i, q);
                    b(i, p) = c * bp - s * bq;
                    b(i, q) = s * bp + c * bq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p);
                    const double vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }
}

// Replace zero-norm columns of u by canonical basis vectors orthogonalized
// against the existing columns, so u always has orthonormal columns even for
// rank-deficient input.
inline void complete_orthonormal_columns(Matrix& u, const std::vector<std::size_t>& dead) {
    const std::size_t m = u.rows();
    const std::size_t n = u.cols();
    std::size_t next_axis = 0;
    for (std::size_t col : dead) {
        for (; next_axis < m; ++next_axis) {
            std::vector<double> cand(m, 0.0);
            cand[next_axis] = 1.0;
            // two rounds of Gram-Schmidt for numerical safety
            for (int round = 0; round < 2; ++round) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == col) continue;
                    double dot = 0.0;
                    for (std::size_t i = 0; i < m; ++i) dot += u(i, j) * cand[i];
                    for (std::size_t i = 0; i < m; ++i) cand[i] -= dot * u(i, j);
                }
            }
            double nrm = 0.0;
            for (double x : cand) nrm += x * x;
            nrm = std::sqrt(nrm);
            if (nrm > 1e-8) {
                for (std::size_t i = 0; i < m; ++i) u(i, col) = cand[i] / nrm;
                ++next_axis;
                break;
            }
        }
    }
}

}  // namespace detail

// Full SVD m = u diag(sigma) v^T with sigma descending and the sign fixed so
// the first nonzero entry of each left singular vector is positive.
inline SvdResult svd(const Matrix& m) {
    if (!all_finite(m)) throw invalid_input_error("svd: non-finite entries");
    const bool wide = m.rows() < m.cols();
    Matrix b = wide ? transpose(m) : m;

    const std::size_t rows = b.rows();
    const std::size_t n = b.cols();
    Matrix v = Matrix::identity(n);
    detail::one_sided_jacobi(b, v);

    std::vector<double> sigma(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += b(i, j) * b(i, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return sigma[a] > sigma[c]; });

    Matrix u(rows, n);
    Matrix vs(n, n);
    std::vector<double> s_sorted(n);
    double smax = sigma.empty() ? 0.0 : sigma[order[0]];
    std::vector<std::size_t> dead;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        s_sorted[j] = sigma[src];
        const bool zero = sigma[src] <= smax * 1e-300 || sigma[src] == 0.0;
        if (zero) dead.push_back(j);
        for (std::size_t i = 0; i < rows; ++i)
            u(i, j) = zero ? 0.0 : b(i, src) / sigma[src];
        for (std::size_t i = 0; i < n; ++i) vs(i, j) = v(i, src);
    }
    detail::complete_orthonormal_columns(u, dead);

    Matrix& left = wide ? vs : u;
    Matrix& right = wide ? u : vs;

    // sign convention: first nonzero entry of each left singular vector positive
    for (std::size_t j = 0; j < n; ++j) {
        double lead = 0.0;
        for (std::size_t i = 0; i < left.rows(); ++i) {
            if (left(i, j) != 0.0) {
                lead = left(i, j);
                break;
            }
        }
        if (lead < 0.0) {
            for (std::size_t i = 0; i < left.rows(); ++i) left(i, j) = -left(i, j);
            for (std::size_t i = 0; i < right.rows(); ++i) right(i, j) = -right(i, j);
        }
    }

    return SvdResult{std::move(left), std::move(s_sorted), std::move(right)};
}

// Rank-r truncated SVD: the leading r singular triplets of m.
inline SvdResult truncated_svd(const Matrix& m, std::size_t r) {
    if (r > std::min(m.rows(), m.cols()))
        throw invalid_rank_error("truncated_svd: rank " + std::to_string(r) +
                                 " exceeds min dimension " +
                                 std::to_string(std::min(m.rows(), m.cols())));
    if (!all_finite(m)) throw invalid_input_error("truncated_svd: non-finite entries");

    SvdResult full = svd(m);
    SvdResult out;
    out.u = Matrix(m.rows(), r);
    out.v = Matrix(m.cols(), r);
    out.sigma.assign(full.sigma.begin(), full.sigma.begin() + static_cast<long>(r));
    for (std::size_t j = 0; j < r; ++j) {
        for (std::size_t i = 0; i < m.rows(); ++i) out.u(i, j) = full.u(i, j);
        for (std::size_t i = 0; i < m.cols(); ++i) out.v(i, j) = full.v(i, j);
    }
    return out;
}

// u * diag(sigma) * v^T
inline Matrix svd_reconstruct(const SvdResult& f) {
    Matrix us = f.u;
    for (std::size_t j = 0; j < f.sigma.size(); ++j)
        for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= f.sigma[j];
    return us * transpose(f.v);
}

}  // namespace hybridft::num
