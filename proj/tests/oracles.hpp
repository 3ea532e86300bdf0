// Independent oracles for the numerics tests.  Everything here recomputes the
// quantity under test from first principles by a different algorithm than the
// library uses, so the checks stay meaningful.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "hybridft/matrix.hpp"

namespace oracle {

using hybridft::num::CMatrix;
using hybridft::num::Matrix;
using hybridft::num::cvector;

// Eigenvalues of a symmetric matrix by the classical two-sided Jacobi
// eigenvalue iteration (distinct from the library's one-sided SVD sweep).
inline std::vector<double> symmetric_eigenvalues(Matrix a) {
    const std::size_t n = a.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-28) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end(), std::greater<double>());
    return ev;
}

// Optimal rank-r Frobenius residual of m, via the eigenvalues of m^T m:
// residual^2 = sum of the trailing eigenvalues.
inline double best_rank_r_residual(const Matrix& m, std::size_t r) {
    using hybridft::num::transpose;
    Matrix gram = transpose(m) * m;
    std::vector<double> ev = symmetric_eigenvalues(gram);
    double s = 0.0;
    for (std::size_t i = r; i < ev.size(); ++i) s += std::max(0.0, ev[i]);
    return std::sqrt(s);
}

// Plain high-order Taylor sum for exp(m); no scaling, no squaring.
template <typename T>
hybridft::num::Mat<T> taylor_expm(const hybridft::num::Mat<T>& m, int terms) {
    auto result = hybridft::num::Mat<T>::identity(m.rows());
    auto term = hybridft::num::Mat<T>::identity(m.rows());
    for (int k = 1; k <= terms; ++k) {
        term = term * m;
        term *= T{1} / T(static_cast<double>(k));
        result += term;
    }
    return result;
}

// Naive O(n^2) unitary DFT sum.
inline cvector naive_dft(const cvector& v, bool inverse) {
    const std::size_t n = v.size();
    const double sign = inverse ? 1.0 : -1.0;
    cvector out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = sign * 2.0 * 3.14159265358979323846 *
                               static_cast<double>(k) * static_cast<double>(j) /
                               static_cast<double>(n);
            acc += v[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc / std::sqrt(static_cast<double>(n));
    }
    return out;
}

// Materialized Householder reflection matrix I - 2 v v^H / (v^H v).
inline CMatrix householder_matrix(const cvector& v) {
    const std::size_t n = v.size();
    double vn2 = 0.0;
    for (const auto& c : v) vn2 += std::norm(c);
    CMatrix h = CMatrix::identity(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            h(i, j) -= 2.0 * v[i] * std::conj(v[j]) / vn2;
    return h;
}

// Random orthogonal matrix by Gram-Schmidt on a gaussian sample.
inline Matrix random_orthogonal(std::size_t n, hybridft::Rng& rng) {
    using hybridft::num::random_gaussian;
    Matrix g = random_gaussian<double>(n, n, rng);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += g(i, k) * g(i, j);
            for (std::size_t i = 0; i < n; ++i) g(i, j) -= dot * g(i, k);
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) nrm += g(i, j) * g(i, j);
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < n; ++i) g(i, j) /= nrm;
    }
    return g;
}

inline Matrix random_skew(std::size_t n, hybridft::Rng& rng, double scale = 1.0) {
    Matrix q(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double x = rng.gaussian(scale);
            q(i, j) = x;
            q(j, i) = -x;
        }
    return q;
}

}  // namespace oracle
