#pragma once

#include <cmath>
#include <cstddef>

#include "hybridft/error.hpp"
#include "hybridft/matrix.hpp"
#include "hybridft/svd.hpp"

namespace hybridft::num {

// Frobenius-nearest orthogonal matrix: the polar factor u v^T of the SVD.
inline Matrix polar_orthogonal_project(const Matrix& m) {
    if (!is_square(m)) throw shape_error("polar_orthogonal_project: matrix must be square");
    SvdResult f = svd(m);
    const double smax = f.sigma.empty() ? 0.0 : f.sigma.front();
    const double smin = f.sigma.empty() ? 0.0 : f.sigma.back();
    if (smax == 0.0 || smin <= smax * 1e-12)
        throw singularity_error("polar_orthogonal_project: rank-deficient input");
    return f.u * transpose(f.v);
}

// Unitary polar factor by the Newton iteration X <- (X + X^{-H})/2.
// Quadratically convergent; used to re-normalize drifting unitary matrices,
// which are already within O(1e-6) of the manifold.
inline CMatrix nearest_unitary(CMatrix x, int max_iters = 24) {
    if (!is_square(x)) throw shape_error("nearest_unitary: matrix must be square");
    const std::size_t n = x.rows();
    for (int it = 0; it < max_iters; ++it) {
        CMatrix inv_h = adjoint(solve(x, CMatrix::identity(n)));
        CMatrix next(n, n);
        double delta = 0.0;
        for (std::size_t i = 0; i < n * n; ++i) {
            next.data()[i] = 0.5 * (x.data()[i] + inv_h.data()[i]);
            delta += std::norm(next.data()[i] - x.data()[i]);
        }
        x = std::move(next);
        if (std::sqrt(delta) < 1e-14) break;
    }
    return x;
}

}  // namespace hybridft::num
