#pragma once

#include <cmath>
#include <complex>
#include <cstddef>

#include "hybridft/error.hpp"
#include "hybridft/matrix.hpp"

namespace hybridft::num {

inline bool is_power_of_two(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

// Unitary-normalized radix-2 DFT (1/sqrt(n) in each direction), iterative
// Cooley-Tukey with bit-reversal.  Fixed reduction order, so results are
// bit-reproducible.
inline cvector fft_matrix_apply(cvector v, bool inverse) {
    const std::size_t n = v.size();
    if (!is_power_of_two(n))
        throw invalid_input_error("fft_matrix_apply: length must be a power of two");

    // bit reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }

    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * 3.14159265358979323846 / static_cast<double>(len);
        const std::complex<double> wn(std::cos(ang), std::sin(ang));
        for (std::size_t start = 0; start < n; start += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto even = v[start + k];
                const auto odd = v[start + k + len / 2] * w;
                v[start + k] = even + odd;
                v[start + k + len / 2] = even - odd;
                w *= wn;
            }
        }
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& x : v) x *= scale;
    return v;
}

// (I - 2 v v^H / v^H v) x — reflection across the hyperplane orthogonal to v.
inline cvector householder_apply(const cvector& v_reflect, const cvector& x) {
    if (v_reflect.size() != x.size())
        throw shape_error("householder_apply: length mismatch");
    double vnorm2 = 0.0;
    for (const auto& c : v_reflect) vnorm2 += std::norm(c);
    if (vnorm2 <= 0.0)
        throw invalid_input_error("householder_apply: zero reflector");

    std::complex<double> proj(0.0, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) proj += std::conj(v_reflect[i]) * x[i];
    const std::complex<double> coeff = 2.0 * proj / vnorm2;

    cvector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - coeff * v_reflect[i];
    return out;
}

}  // namespace hybridft::num
