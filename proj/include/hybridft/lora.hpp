#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "hybridft/error.hpp"
#include "hybridft/matrix.hpp"
#include "hybridft/rng.hpp"
#include "hybridft/svd.hpp"

namespace hybridft::adapt {

using num::Matrix;

// Desk-scale defaults; the paper-scale protocol uses r=16, alpha=32.
inline constexpr std::size_t kDefaultRank = 4;
inline constexpr double kDefaultAlpha = 8.0;
inline constexpr double kDefaultLambdaCap = 1.0;

// Low-rank adapter factors.  delta W = (alpha/r) a b with a: d_out x r,
// b: r x d_in, norm-capped against the frozen base.
struct LoraState {
    Matrix a;
    Matrix b;
    std::size_t rank = 0;
    double alpha = kDefaultAlpha;
    double lambda_cap = kDefaultLambdaCap;
    double w0_fro = 0.0;  // ||W0||_F the cap is measured against

    std::size_t trainable_entries() const { return a.size() + b.size(); }
};

namespace detail {

// Rescale a and b in place so ||a b||_F <= lambda_cap * w0_fro.
inline void enforce_norm_cap(LoraState& s) {
    const double bound = s.lambda_cap * s.w0_fro;
    const double nrm = num::frobenius_norm(s.a * s.b);
    if (nrm <= bound || nrm == 0.0) return;
    const double f = std::sqrt(bound / nrm);
    s.a *= f;
    s.b *= f;
}

}  // namespace detail

inline void validate_rank(const Matrix& w0, std::size_t r) {
    if (r < 1 || r > std::min(w0.rows(), w0.cols()))
        throw invalid_rank_error("lora: rank " + std::to_string(r) +
                                 " invalid for a " + std::to_string(w0.rows()) + "x" +
                                 std::to_string(w0.cols()) + " base");
}

// a ~ N(0, 0.02^2), b = 0, so the initial delta is exactly zero.
inline LoraState lora_init(const Matrix& w0, std::size_t r, std::uint64_t seed,
                           double alpha = kDefaultAlpha,
                           double lambda_cap = kDefaultLambdaCap) {
    validate_rank(w0, r);
    Rng rng(seed);
    LoraState s;
    s.a = num::random_gaussian<double>(w0.rows(), r, rng, 0.02);
    s.b = Matrix(r, w0.cols());
    s.rank = r;
    s.alpha = alpha;
    s.lambda_cap = lambda_cap;
    s.w0_fro = num::frobenius_norm(w0);
    return s;
}

// Gradient-aligned init: with truncated_svd(grad, r) = (u, sigma, v),
// a = u sigma^{1/2} and b = sigma^{1/2} v^T, so a b is the best rank-r
// approximation of grad.
inline LoraState lora_ga_init(const Matrix& w0, const Matrix& grad, std::size_t r,
                              double alpha = kDefaultAlpha,
                              double lambda_cap = kDefaultLambdaCap) {
    if (!w0.same_shape(grad))
        throw shape_error("lora_ga_init: gradient shape does not match base weight");
    validate_rank(w0, r);

    num::SvdResult f = num::truncated_svd(grad, r);
    LoraState s;
    s.a = Matrix(w0.rows(), r);
    s.b = Matrix(r, w0.cols());
    for (std::size_t j = 0; j < r; ++j) {
        const double root = std::sqrt(f.sigma[j]);
        for (std::size_t i = 0; i < w0.rows(); ++i) s.a(i, j) = f.u(i, j) * root;
        for (std::size_t i = 0; i < w0.cols(); ++i) s.b(j, i) = root * f.v(i, j);
    }
    s.rank = r;
    s.alpha = alpha;
    s.lambda_cap = lambda_cap;
    s.w0_fro = num::frobenius_norm(w0);
    return s;
}

// (alpha/r) a b, norm-capped to lambda_cap * ||W0||_F.
inline Matrix lora_forward_delta(const LoraState& s) {
    Matrix delta = s.a * s.b;
    delta *= s.alpha / static_cast<double>(s.rank);
    const double bound = s.lambda_cap * s.w0_fro;
    const double nrm = num::frobenius_norm(delta);
    if (nrm > bound && nrm > 0.0) delta *= bound / nrm;
    return delta;
}

// Plain SGD on both factors, then the norm cap is re-enforced.
inline LoraState lora_step(LoraState s, const Matrix& grad_a, const Matrix& grad_b,
                           double eta) {
    if (!s.a.same_shape(grad_a) || !s.b.same_shape(grad_b))
        throw shape_error("lora_step: gradient shape mismatch");
    for (std::size_t i = 0; i < s.a.size(); ++i) s.a.data()[i] -= eta * grad_a.data()[i];
    for (std::size_t i = 0; i < s.b.size(); ++i) s.b.data()[i] -= eta * grad_b.data()[i];
    detail::enforce_norm_cap(s);
    return s;
}

}  // namespace hybridft::adapt
