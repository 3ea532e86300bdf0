#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <vector>

#include "hybridft/error.hpp"
#include "hybridft/expm.hpp"
#include "hybridft/fft.hpp"
#include "hybridft/matrix.hpp"
#include "hybridft/polar.hpp"
#include "hybridft/rng.hpp"

namespace hybridft::adapt {

using num::CMatrix;
using num::cvector;

// reflectors below this norm sit at the parameterization's coordinate
// singularity and act as the identity
inline constexpr double kDegenerateReflectorNorm = 1e-8;

// Structured unitary operator  U = D3 R2 F^-1 D2 P R1 F D1  built from
// diagonal phases, Householder reflections, the unitary DFT, and a fixed
// permutation.  O(n) parameters, O(n log n) application.
struct UnitaryLayerState {
    cvector d1, d2, d3;            // unit-modulus phase entries
    cvector r1, r2;                // Householder reflectors
    std::vector<std::size_t> perm; // out[i] = in[perm[i]]
    std::size_t dim = 0;

    std::size_t trainable_entries() const { return d1.size() + d2.size() + d3.size() + r1.size() + r2.size(); }
};

namespace detail {

inline void warn_degenerate_reflector() {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
        std::cerr << "hybridft: degenerate Householder reflector treated as identity\n";
}

inline cvector apply_reflector_or_identity(const cvector& v, const cvector& x) {
    double n2 = 0.0;
    for (const auto& c : v) n2 += std::norm(c);
    if (std::sqrt(n2) < kDegenerateReflectorNorm) {
        warn_degenerate_reflector();
        return x;
    }
    return num::householder_apply(v, x);
}

inline void apply_phases(const cvector& d, cvector& x) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= d[i];
}

}  // namespace detail

// Identity-like state: unit phases, degenerate reflectors, identity permutation.
inline UnitaryLayerState unitary_identity_init(std::size_t dim) {
    if (!num::is_power_of_two(dim))
        throw invalid_input_error("unitary init: dim must be a power of two");
    UnitaryLayerState s;
    s.dim = dim;
    s.d1.assign(dim, {1.0, 0.0});
    s.d2.assign(dim, {1.0, 0.0});
    s.d3.assign(dim, {1.0, 0.0});
    s.r1.assign(dim, {0.0, 0.0});
    s.r2.assign(dim, {0.0, 0.0});
    s.perm.resize(dim);
    std::iota(s.perm.begin(), s.perm.end(), std::size_t{0});
    return s;
}

// Random state: uniform phases, gaussian reflectors, shuffled permutation.
inline UnitaryLayerState unitary_random_init(std::size_t dim, std::uint64_t seed) {
    UnitaryLayerState s = unitary_identity_init(dim);
    Rng rng(seed);
    auto random_phases = [&](cvector& d) {
        for (auto& p : d) {
            const double ang = 2.0 * 3.14159265358979323846 * rng.uniform();
            p = {std::cos(ang), std::sin(ang)};
        }
    };
    random_phases(s.d1);
    random_phases(s.d2);
    random_phases(s.d3);
    for (auto& c : s.r1) c = {rng.gaussian(), rng.gaussian()};
    for (auto& c : s.r2) c = {rng.gaussian(), rng.gaussian()};
    for (std::size_t i = dim; i > 1; --i)
        std::swap(s.perm[i - 1], s.perm[rng.uniform_index(i)]);
    return s;
}

// Applies the seven factors right to left in O(n log n).
inline cvector unitary_compose_apply(const UnitaryLayerState& s, const cvector& x) {
    if (x.size() != s.dim)
        throw shape_error("unitary_compose_apply: input length does not match dim");
    cvector y = x;
    detail::apply_phases(s.d1, y);
    y = num::fft_matrix_apply(std::move(y), false);
    y = detail::apply_reflector_or_identity(s.r1, y);
    cvector permuted(s.dim);
    for (std::size_t i = 0; i < s.dim; ++i) permuted[i] = y[s.perm[i]];
    y = std::move(permuted);
    detail::apply_phases(s.d2, y);
    y = num::fft_matrix_apply(std::move(y), true);
    y = detail::apply_reflector_or_identity(s.r2, y);
    detail::apply_phases(s.d3, y);
    return y;
}

// Dense materialization (column by column); used at adapter setup and in tests.
inline CMatrix unitary_materialize(const UnitaryLayerState& s) {
    CMatrix u(s.dim, s.dim);
    cvector basis(s.dim, {0.0, 0.0});
    for (std::size_t j = 0; j < s.dim; ++j) {
        basis[j] = {1.0, 0.0};
        cvector col = unitary_compose_apply(s, basis);
        basis[j] = {0.0, 0.0};
        for (std::size_t i = 0; i < s.dim; ++i) u(i, j) = col[i];
    }
    return u;
}

// Skew-Hermitian lift B = grad U^H - U grad^H.  The strictly-lower triangle
// mirrors the upper one and the diagonal is forced purely imaginary, so
// B^H = -B holds exactly, not just to rounding.
inline CMatrix unitary_lift(const CMatrix& grad_u, const CMatrix& u) {
    if (!grad_u.same_shape(u) || !num::is_square(u))
        throw shape_error("unitary_lift: operands must be square with equal shapes");
    const std::size_t n = u.rows();
    CMatrix b(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            std::complex<double> gu{0.0, 0.0};
            std::complex<double> ug{0.0, 0.0};
            for (std::size_t k = 0; k < n; ++k) {
                gu += grad_u(i, k) * std::conj(u(j, k));
                ug += u(i, k) * std::conj(grad_u(j, k));
            }
            if (i == j) {
                b(i, i) = {0.0, 2.0 * gu.imag()};
            } else {
                const std::complex<double> v = gu - ug;
                b(i, j) = v;
                b(j, i) = -std::conj(v);
            }
        }
    }
    return b;
}

// Exponential-map update exp(eta B) U with B the skew-Hermitian lift of the
// gradient; re-normalized through the polar factor if drift exceeds 1e-8.
inline CMatrix unitary_step(const CMatrix& u, const CMatrix& grad_u, double eta) {
    if (num::orthogonality_drift(u) > 1e-8)
        throw contract_error("unitary_step: input is not unitary within 1e-8");
    CMatrix b = unitary_lift(grad_u, u);
    b *= std::complex<double>(eta, 0.0);
    CMatrix next = num::expm(b) * u;
    if (num::orthogonality_drift(next) > 1e-8) next = num::nearest_unitary(next);
    return next;
}

}  // namespace hybridft::adapt
