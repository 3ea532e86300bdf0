#pragma once

#include <cmath>
#include <cstddef>

#include "hybridft/error.hpp"
#include "hybridft/matrix.hpp"

namespace hybridft::num {

// Matrix exponential by scaling-and-squaring with a degree-13 Taylor core.
// The argument is scaled so ||m/2^s||_1 <= 0.5, the truncated series is
// summed, and the result is squared s times.  For skew-Hermitian input the
// output is unitary to ~1e-15.
template <typename T>
Mat<T> expm(const Mat<T>& m) {
    if (!is_square(m)) throw shape_error("expm: matrix must be square");
    const std::size_t n = m.rows();

    const double nrm = one_norm(m);
    int s = 0;
    if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));

    Mat<T> a = m;
    if (s > 0) a *= T{1} / T(std::ldexp(1.0, s));

    Mat<T> result = Mat<T>::identity(n);
    Mat<T> term = Mat<T>::identity(n);
    constexpr int taylor_degree = 13;
    for (int k = 1; k <= taylor_degree; ++k) {
        term = term * a;
        term *= T{1} / T(static_cast<double>(k));
        result += term;
    }

    for (int i = 0; i < s; ++i) result = result * result;
    return result;
}

}  // namespace hybridft::num
