#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "hybridft/boft.hpp"
#include "hybridft/cayley.hpp"
#include "hybridft/error.hpp"
#include "hybridft/lora.hpp"
#include "hybridft/matrix.hpp"

namespace hybridft::fusion {

using adapt::LoraState;
using adapt::SkewGenState;
using num::Matrix;

// Per-step mixing telemetry for one layer.
struct MixTrace {
    std::size_t layer = 0;
    std::size_t step = 0;
    double g_lora = 0.0;
    double g_boft = 0.0;
    double lambda = 0.5;
};

// lambda = g_lora / (g_lora + g_boft); the branch with the larger gradient
// norm receives the higher weight.  Both zero is the symmetric limit 0.5.
inline double mixing_coefficient(double g_lora, double g_boft) {
    if (g_lora < 0.0 || g_boft < 0.0)
        throw invalid_input_error("mixing_coefficient: gradient norms must be non-negative");
    const double denom = g_lora + g_boft;
    if (denom == 0.0) return 0.5;
    return g_lora / denom;
}

// One adapted layer under the hybrid rule: effective weight, both branch
// states, and the cached Cayley factor refreshed at the end of each step.
struct HybridLayerState {
    Matrix w;          // current effective weight W
    LoraState lora;
    SkewGenState skew;
    Matrix r_cache;    // orthonormal factor recomputed after each q update
    MixTrace trace;
};

inline HybridLayerState hybrid_layer_init(const Matrix& w0, LoraState lora,
                                          SkewGenState skew, std::size_t layer_index = 0) {
    if (skew.q.rows() != w0.rows())
        throw shape_error("hybrid_layer_init: skew generator must match d_out");
    HybridLayerState s;
    s.w = w0;
    s.lora = std::move(lora);
    s.skew = std::move(skew);
    s.r_cache = num::cayley(s.skew.q, s.skew.eta_boft);
    s.trace.layer = layer_index;
    return s;
}

// One hybrid update:
//   delta_lora = lora_forward_delta;  delta_boft = (R - I) W;
//   lambda from the branch gradient norms;
//   W += lambda delta_lora + (1 - lambda) delta_boft;
// then both branch states advance and R is recomputed from the new q for the
// next step.  `forced_lambda` pins the mixing coefficient (boundary checks).
inline HybridLayerState hybrid_step(HybridLayerState s, const Matrix& grad_a,
                                    const Matrix& grad_b, const Matrix& grad_q,
                                    double eta_lora, double eta_boft,
                                    std::optional<double> forced_lambda = std::nullopt) {
    if (!grad_a.same_shape(s.lora.a) || !grad_b.same_shape(s.lora.b))
        throw shape_error("hybrid_step: LoRA gradient shape mismatch");
    if (!grad_q.same_shape(s.skew.q) || !num::is_square(grad_q))
        throw shape_error("hybrid_step: skew gradient shape mismatch");

    const Matrix delta_lora = adapt::lora_forward_delta(s.lora);
    Matrix r_minus_i = s.r_cache;
    for (std::size_t i = 0; i < r_minus_i.rows(); ++i) r_minus_i(i, i) -= 1.0;
    const Matrix delta_boft = r_minus_i * s.w;

    const double g_lora = std::sqrt(
        num::frobenius_norm(grad_a) * num::frobenius_norm(grad_a) +
        num::frobenius_norm(grad_b) * num::frobenius_norm(grad_b));
    const double g_boft = num::frobenius_norm(grad_q);
    const double lambda =
        forced_lambda ? *forced_lambda : mixing_coefficient(g_lora, g_boft);

    s.w += lambda * delta_lora + (1.0 - lambda) * delta_boft;

    s.lora = adapt::lora_step(std::move(s.lora), grad_a, grad_b, eta_lora);
    const Matrix g_skew = num::skew_project(grad_q);
    for (std::size_t i = 0; i < s.skew.q.size(); ++i)
        s.skew.q.data()[i] -= eta_boft * g_skew.data()[i];
    s.skew.eta_boft = eta_boft;

    try {
        s.r_cache = num::cayley(s.skew.q, eta_boft);
    } catch (const singularity_error&) {
        throw numerical_error("hybrid_step: Cayley factor singular; step size too large");
    }

    s.trace.step += 1;
    s.trace.g_lora = g_lora;
    s.trace.g_boft = g_boft;
    s.trace.lambda = lambda;
    return s;
}

// Per-layer cost model for footprint reporting.
struct LayerCost {
    std::size_t lora_flops = 0;  // d_out r + r d_in
    std::size_t boft_flops = 0;  // d_out log2(d_out)
};

inline LayerCost layer_cost_estimate(std::size_t d_out, std::size_t d_in, std::size_t r) {
    if (d_out == 0 || d_in == 0)
        throw invalid_input_error("layer_cost_estimate: dimensions must be positive");
    LayerCost c;
    c.lora_flops = d_out * r + r * d_in;
    std::size_t lg = 0;
    while ((std::size_t{1} << lg) < d_out) ++lg;
    c.boft_flops = d_out * lg;
    return c;
}

}  // namespace hybridft::fusion
