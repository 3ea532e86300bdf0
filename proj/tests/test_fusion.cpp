#include <catch2/catch_amalgamated.hpp>

#include "hybridft/fusion.hpp"
#include "oracles.hpp"

using namespace hybridft;
using namespace hybridft::fusion;
using num::Matrix;

TEST_CASE("mixing_coefficient formula and conventions") {
    REQUIRE(mixing_coefficient(3.0, 1.0) == 0.75);
    REQUIRE(mixing_coefficient(2.5, 0.0) == 1.0);
    REQUIRE(mixing_coefficient(0.0, 0.0) == 0.5);
    REQUIRE_THROWS_AS(mixing_coefficient(-1.0, 2.0), invalid_input_error);
}

TEST_CASE("mixing_coefficient property sweep") {
    Rng rng(6);
    for (int i = 0; i < 5000; ++i) {
        const double gl = rng.uniform() * 10.0;
        const double gb = rng.uniform() * 10.0;
        const double lam = mixing_coefficient(gl, gb);
        REQUIRE(lam >= 0.0);
        REQUIRE(lam <= 1.0);
        if (gl + gb > 0.0) REQUIRE(lam == gl / (gl + gb));
    }
}

static HybridLayerState make_layer(std::size_t d, std::size_t r, std::uint64_t seed,
                                   bool ga_init = true) {
    Rng rng(seed);
    Matrix w0 = num::random_gaussian<double>(d, d, rng);
    adapt::LoraState lora;
    if (ga_init) {
        Matrix grad = num::random_gaussian<double>(d, d, rng, 0.1);
        lora = adapt::lora_ga_init(w0, grad, r);
    } else {
        lora = adapt::lora_init(w0, r, seed + 1);
    }
    adapt::SkewGenState skew = adapt::skew_gen_init(d, 1e-3);
    return hybrid_layer_init(w0, std::move(lora), std::move(skew));
}

TEST_CASE("hybrid_step at q=0 with zero skew gradient reduces to the LoRA branch") {
    HybridLayerState s = make_layer(4, 2, 17);
    Rng rng(18);
    Matrix ga = num::random_gaussian<double>(4, 2, rng, 0.1);
    Matrix gb = num::random_gaussian<double>(2, 4, rng, 0.1);
    Matrix gq(4, 4);

    Matrix delta_lora = adapt::lora_forward_delta(s.lora);
    HybridLayerState after = hybrid_step(s, ga, gb, gq, 5e-3, 1e-3);
    REQUIRE(after.trace.lambda == 1.0);
    REQUIRE(num::frobenius_norm(after.w - (s.w + delta_lora)) < 1e-14);
}

TEST_CASE("hybrid_step with zero LoRA gradients and zero b reduces to the BOFT branch") {
    HybridLayerState s = make_layer(4, 2, 19, /*ga_init=*/false);
    // make the Cayley factor non-trivial
    Rng rng(20);
    s.skew.q = oracle::random_skew(4, rng, 0.5);
    s.r_cache = num::cayley(s.skew.q, 1e-3);

    Matrix gq = num::random_gaussian<double>(4, 4, rng, 0.2);
    HybridLayerState after = hybrid_step(s, Matrix(4, 2), Matrix(2, 4), gq, 5e-3, 1e-3);
    REQUIRE(after.trace.lambda == 0.0);

    Matrix r_minus_i = s.r_cache;
    for (std::size_t i = 0; i < 4; ++i) r_minus_i(i, i) -= 1.0;
    Matrix expect = s.w + r_minus_i * s.w;
    REQUIRE(num::frobenius_norm(after.w - expect) < 1e-14);
}

TEST_CASE("hybrid_step matches a line-by-line oracle") {
    HybridLayerState s = make_layer(6, 2, 17);
    Rng rng(17);
    Matrix ga = num::random_gaussian<double>(6, 2, rng, 0.1);
    Matrix gb = num::random_gaussian<double>(2, 6, rng, 0.1);
    Matrix gq = num::random_gaussian<double>(6, 6, rng, 0.1);
    const double eta_l = 5e-3, eta_b = 1e-3;

    HybridLayerState after = hybrid_step(s, ga, gb, gq, eta_l, eta_b);

    // oracle: each algorithm line applied independently
    Matrix delta_lora = adapt::lora_forward_delta(s.lora);
    Matrix r = num::cayley(s.skew.q, eta_b);
    Matrix delta_boft = (r - Matrix::identity(6)) * s.w;
    const double g_lora = std::sqrt(std::pow(num::frobenius_norm(ga), 2) +
                                    std::pow(num::frobenius_norm(gb), 2));
    const double g_boft = num::frobenius_norm(gq);
    const double lambda = g_lora / (g_lora + g_boft);
    Matrix w_expect = s.w + lambda * delta_lora + (1.0 - lambda) * delta_boft;
    REQUIRE(num::frobenius_norm(after.w - w_expect) < 1e-12);

    Matrix a_expect = s.lora.a - eta_l * ga;
    Matrix b_expect = s.lora.b - eta_l * gb;
    REQUIRE(num::frobenius_norm(after.lora.a - a_expect) < 1e-12);
    REQUIRE(num::frobenius_norm(after.lora.b - b_expect) < 1e-12);

    Matrix q_expect = s.skew.q - eta_b * num::skew_project(gq);
    REQUIRE(num::frobenius_norm(after.skew.q - q_expect) == 0.0);
    REQUIRE(num::frobenius_norm(after.r_cache - num::cayley(q_expect, eta_b)) < 1e-12);

    REQUIRE(after.trace.lambda == Catch::Approx(lambda));
    REQUIRE(after.trace.step == s.trace.step + 1);
}

TEST_CASE("forced lambda pins the mixture to one branch") {
    Rng rng(40);
    for (int trial = 0; trial < 10; ++trial) {
        HybridLayerState s = make_layer(4, 2, 100 + trial);
        s.skew.q = oracle::random_skew(4, rng, 0.3);
        s.r_cache = num::cayley(s.skew.q, 1e-3);
        Matrix ga = num::random_gaussian<double>(4, 2, rng);
        Matrix gb = num::random_gaussian<double>(2, 4, rng);
        Matrix gq = num::random_gaussian<double>(4, 4, rng);

        Matrix delta_lora = adapt::lora_forward_delta(s.lora);
        Matrix r_minus_i = s.r_cache;
        for (std::size_t i = 0; i < 4; ++i) r_minus_i(i, i) -= 1.0;
        Matrix delta_boft = r_minus_i * s.w;

        HybridLayerState lora_only = hybrid_step(s, ga, gb, gq, 1e-3, 1e-3, 1.0);
        REQUIRE(num::frobenius_norm(lora_only.w - (s.w + delta_lora)) < 1e-12);

        HybridLayerState boft_only = hybrid_step(s, ga, gb, gq, 1e-3, 1e-3, 0.0);
        REQUIRE(num::frobenius_norm(boft_only.w - (s.w + delta_boft)) < 1e-12);
    }
}

TEST_CASE("hybrid delta is a convex combination of the branch deltas") {
    Rng rng(50);
    for (int trial = 0; trial < 20; ++trial) {
        HybridLayerState s = make_layer(4, 2, 200 + trial);
        s.skew.q = oracle::random_skew(4, rng, 0.2);
        s.r_cache = num::cayley(s.skew.q, 1e-3);
        Matrix ga = num::random_gaussian<double>(4, 2, rng);
        Matrix gb = num::random_gaussian<double>(2, 4, rng);
        Matrix gq = num::random_gaussian<double>(4, 4, rng);

        Matrix delta_lora = adapt::lora_forward_delta(s.lora);
        Matrix r_minus_i = s.r_cache;
        for (std::size_t i = 0; i < 4; ++i) r_minus_i(i, i) -= 1.0;
        Matrix delta_boft = r_minus_i * s.w;

        HybridLayerState after = hybrid_step(s, ga, gb, gq, 1e-3, 1e-3);
        const double lambda = after.trace.lambda;
        Matrix mix = lambda * delta_lora + (1.0 - lambda) * delta_boft;
        REQUIRE(num::frobenius_norm((after.w - s.w) - mix) <= 1e-14);
    }
}

TEST_CASE("skewness of q is preserved exactly across 1000 steps") {
    HybridLayerState s = make_layer(4, 2, 33);
    Rng rng(34);
    for (int step = 0; step < 1000; ++step) {
        Matrix ga = num::random_gaussian<double>(4, 2, rng, 0.05);
        Matrix gb = num::random_gaussian<double>(2, 4, rng, 0.05);
        Matrix gq = num::random_gaussian<double>(4, 4, rng, 0.05);
        s = hybrid_step(std::move(s), ga, gb, gq, 1e-3, 1e-3);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                REQUIRE(s.skew.q(i, j) == -s.skew.q(j, i));
    }
}

TEST_CASE("q = 0 and zero gradients leave w unchanged") {
    HybridLayerState s = make_layer(4, 2, 44, /*ga_init=*/false);
    HybridLayerState after = hybrid_step(s, Matrix(4, 2), Matrix(2, 4), Matrix(4, 4), 1e-3, 1e-3);
    REQUIRE(num::frobenius_norm(after.w - s.w) == 0.0);
}

TEST_CASE("layer_cost_estimate arithmetic") {
    LayerCost c = layer_cost_estimate(8, 8, 2);
    REQUIRE(c.lora_flops == 32);
    REQUIRE(c.boft_flops == 24);

    REQUIRE(layer_cost_estimate(8, 8, 0).lora_flops == 0);

    LayerCost c16 = layer_cost_estimate(16, 8, 2);
    REQUIRE(c16.boft_flops == 16 * 4);
    REQUIRE_THROWS_AS(layer_cost_estimate(0, 4, 1), invalid_input_error);
}

TEST_CASE("hybrid_step validates shapes") {
    HybridLayerState s = make_layer(4, 2, 55);
    REQUIRE_THROWS_AS(hybrid_step(s, Matrix(3, 2), Matrix(2, 4), Matrix(4, 4), 1e-3, 1e-3),
                      shape_error);
    REQUIRE_THROWS_AS(hybrid_step(s, Matrix(4, 2), Matrix(2, 4), Matrix(3, 3), 1e-3, 1e-3),
                      shape_error);
}
