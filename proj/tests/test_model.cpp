#include <catch2/catch_amalgamated.hpp>

#include "hybridft/model.hpp"
#include "hybridft/trainer.hpp"
#include "oracles.hpp"

using namespace hybridft;
using namespace hybridft::train;
using num::CMatrix;
using num::Matrix;

namespace {

Batch toy_batch(const ToyModel& model, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Batch b;
    for (std::size_t e = 0; e < n; ++e) {
        std::vector<double> x(model.hidden());
        for (double& v : x) v = rng.gaussian(0.5);
        b.x.push_back(std::move(x));
        b.y.push_back(static_cast<int>(rng.uniform_index(model.classes())));
    }
    return b;
}

ToyModel make_model(AdapterMode mode, std::uint64_t seed, std::size_t hidden = 8,
                    std::size_t layers = 3) {
    TrainOptions opt;
    opt.mode = mode;
    opt.seed = seed;
    opt.hidden = hidden;
    opt.layers = layers;
    opt.rank = 2;
    opt.warmup_epochs = 0;
    ToyModel model = build_model(opt);
    Batch init = toy_batch(model, 8, seed ^ 0x1234);
    install_adapters(model, opt, init);
    if (mode == AdapterMode::hybrid) {
        // make the skew branch non-trivial so its gradient path is exercised
        Rng rng(seed ^ 77);
        for (auto& h : model.hybrid) {
            h.skew.q = oracle::random_skew(hidden, rng, 0.3);
            h.r_cache = num::cayley(h.skew.q, model.eta_boft);
            h.trace.lambda = 0.4;
        }
    }
    return model;
}

double loss_of(const ToyModel& model, const Batch& batch) {
    return forward(model, batch).loss;
}

// central finite difference of the loss w.r.t. *param, against analytic
void check_fd(ToyModel& model, const Batch& batch, double* param, double analytic,
              double step = 1e-5, double rel_tol = 1e-4) {
    const double saved = *param;
    *param = saved + step;
    const double up = loss_of(model, batch);
    *param = saved - step;
    const double down = loss_of(model, batch);
    *param = saved;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
    INFO("fd=" << fd << " analytic=" << analytic);
    REQUIRE(std::abs(fd - analytic) / denom < rel_tol);
}

}  // namespace

TEST_CASE("forward: uniform logits give ln C") {
    ToyModel model = make_model(AdapterMode::full, 3);
    // zero head makes every class equally likely
    model.head_w = Matrix(model.classes(), model.hidden());
    model.head_b.assign(model.classes(), 0.0);
    Batch b = toy_batch(model, 1, 9);
    ForwardCache cache = forward(model, b);
    REQUIRE(cache.loss == Catch::Approx(std::log(4.0)).margin(1e-12));
}

TEST_CASE("forward: raising the true-class logit lowers the loss") {
    ToyModel model = make_model(AdapterMode::full, 4);
    Batch b = toy_batch(model, 1, 10);
    double prev = std::numeric_limits<double>::infinity();
    for (double margin : {0.0, 1.0, 3.0}) {
        ToyModel m = model;
        for (std::size_t j = 0; j < m.hidden(); ++j)
            m.head_w(static_cast<std::size_t>(b.y[0]), j) += margin * 0.1;
        m.head_b[static_cast<std::size_t>(b.y[0])] += margin;
        const double loss = loss_of(m, b);
        REQUIRE(loss < prev);
        prev = loss;
    }
}

TEST_CASE("forward: loss matches an independent scalar recomputation") {
    ToyModel model = make_model(AdapterMode::full, 1);
    Batch b = toy_batch(model, 3, 1);
    ForwardCache cache = forward(model, b);

    double expect = 0.0;
    for (std::size_t e = 0; e < b.size(); ++e) {
        std::vector<double> h = b.x[e];
        for (std::size_t l = 0; l < model.depth(); ++l) {
            std::vector<double> z(model.hidden(), 0.0);
            for (std::size_t i = 0; i < model.hidden(); ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < model.hidden(); ++j)
                    acc += model.w0[l](i, j) * h[j];
                z[i] = std::tanh(acc);
            }
            h = z;
        }
        std::vector<double> logits(model.classes(), 0.0);
        for (std::size_t c = 0; c < model.classes(); ++c) {
            double acc = model.head_b[c];
            for (std::size_t j = 0; j < model.hidden(); ++j) acc += model.head_w(c, j) * h[j];
            logits[c] = acc;
        }
        double denom = 0.0;
        for (double v : logits) denom += std::exp(v);
        expect -= std::log(std::exp(logits[static_cast<std::size_t>(b.y[e])]) / denom);
    }
    REQUIRE(cache.loss == Catch::Approx(expect).margin(1e-10));
}

TEST_CASE("forward rejects bad input") {
    ToyModel model = make_model(AdapterMode::full, 5);
    Batch empty;
    REQUIRE_THROWS_AS(forward(model, empty), invalid_input_error);
    Batch bad = toy_batch(model, 2, 2);
    bad.y[1] = 99;
    REQUIRE_THROWS_AS(forward(model, bad), invalid_input_error);
}

TEST_CASE("backward rejects a stale cache") {
    ToyModel model = make_model(AdapterMode::full, 6);
    Batch b = toy_batch(model, 2, 3);
    ForwardCache cache = forward(model, b);
    model.version += 1;
    REQUIRE_THROWS_AS(backward(model, cache), contract_error);
}

TEST_CASE("duplicating the batch doubles the summed gradient exactly") {
    ToyModel model = make_model(AdapterMode::full, 7);
    Batch b = toy_batch(model, 4, 4);
    Gradients g1 = backward(model, forward(model, b));

    Batch doubled = b;
    for (std::size_t e = 0; e < b.size(); ++e) {
        doubled.x.push_back(b.x[e]);
        doubled.y.push_back(b.y[e]);
    }
    Gradients g2 = backward(model, forward(model, doubled));
    for (std::size_t i = 0; i < g1.head_w.size(); ++i)
        REQUIRE(g2.head_w.data()[i] == Catch::Approx(2.0 * g1.head_w.data()[i]).margin(1e-12));
    for (std::size_t l = 0; l < model.depth(); ++l)
        for (std::size_t i = 0; i < g1.w0[l].size(); ++i)
            REQUIRE(g2.w0[l].data()[i] == Catch::Approx(2.0 * g1.w0[l].data()[i]).margin(1e-12));
}

TEST_CASE("finite differences: full mode, every layer") {
    ToyModel model = make_model(AdapterMode::full, 8);
    Batch b = toy_batch(model, 5, 8);
    Gradients g = backward(model, forward(model, b));
    Rng rng(81);
    for (int probe = 0; probe < 24; ++probe) {
        const std::size_t l = rng.uniform_index(model.depth());
        const std::size_t idx = rng.uniform_index(model.w0[l].size());
        check_fd(model, b, &model.w0[l].data()[idx], g.w0[l].data()[idx]);
    }
    for (int probe = 0; probe < 8; ++probe) {
        const std::size_t idx = rng.uniform_index(model.head_w.size());
        check_fd(model, b, &model.head_w.data()[idx], g.head_w.data()[idx]);
        const std::size_t c = rng.uniform_index(model.head_b.size());
        check_fd(model, b, &model.head_b[c], g.head_b[c]);
    }
}

TEST_CASE("finite differences: lora factors, including through the norm cap") {
    ToyModel model = make_model(AdapterMode::lora, 9);
    Rng rng(91);
    // push b away from zero so grad_a is nonzero
    for (auto& s : model.lora) {
        for (auto& v : s.b.data()) v = rng.gaussian(0.2);
        for (auto& v : s.a.data()) v = rng.gaussian(0.5);
    }
    Batch batch = toy_batch(model, 5, 9);

    SECTION("cap inactive") {
        Gradients g = backward(model, forward(model, batch));
        for (int probe = 0; probe < 20; ++probe) {
            const std::size_t l = rng.uniform_index(model.depth());
            const std::size_t ia = rng.uniform_index(model.lora[l].a.size());
            check_fd(model, batch, &model.lora[l].a.data()[ia], g.lora_a[l].data()[ia]);
            const std::size_t ib = rng.uniform_index(model.lora[l].b.size());
            check_fd(model, batch, &model.lora[l].b.data()[ib], g.lora_b[l].data()[ib]);
        }
    }

    SECTION("cap active") {
        for (auto& s : model.lora) s.lambda_cap = 1e-3;  // force the clamp
        ForwardCache cache = forward(model, batch);
        for (std::size_t l = 0; l < model.depth(); ++l) REQUIRE(cache.lora_info[l].clamped);
        Gradients g = backward(model, cache);
        for (int probe = 0; probe < 20; ++probe) {
            const std::size_t l = rng.uniform_index(model.depth());
            const std::size_t ia = rng.uniform_index(model.lora[l].a.size());
            check_fd(model, batch, &model.lora[l].a.data()[ia], g.lora_a[l].data()[ia]);
            const std::size_t ib = rng.uniform_index(model.lora[l].b.size());
            check_fd(model, batch, &model.lora[l].b.data()[ib], g.lora_b[l].data()[ib]);
        }
    }
}

TEST_CASE("finite differences: boft block entries") {
    ToyModel model = make_model(AdapterMode::boft, 10);
    Batch batch = toy_batch(model, 5, 10);
    Gradients g = backward(model, forward(model, batch));
    Rng rng(101);
    for (int probe = 0; probe < 24; ++probe) {
        const std::size_t l = rng.uniform_index(model.depth());
        auto& state = model.boft[l];
        const std::size_t blk = rng.uniform_index(state.blocks.size());
        // probe only support entries: off-support entries are structurally zero
        const std::size_t row = rng.uniform_index(state.dim);
        const std::size_t col = rng.uniform() < 0.5 ? row : (row ^ state.strides[blk]);
        check_fd(model, batch, &state.blocks[blk](row, col), g.boft_blocks[l][blk](row, col));
    }
}

TEST_CASE("finite differences: urnn real and imaginary parts") {
    ToyModel model = make_model(AdapterMode::urnn, 11);
    // move off the identity so gradients are generic
    Rng rng(111);
    for (auto& u : model.urnn) {
        CMatrix grad = num::random_gaussian<std::complex<double>>(u.rows(), u.rows(), rng, 0.3);
        u = adapt::unitary_step(u, grad, 0.2);
    }
    Batch batch = toy_batch(model, 5, 11);
    Gradients g = backward(model, forward(model, batch));

    for (int probe = 0; probe < 24; ++probe) {
        const std::size_t l = rng.uniform_index(model.depth());
        CMatrix& u = model.urnn[l];
        const std::size_t idx = rng.uniform_index(u.size());
        auto* entry = reinterpret_cast<double*>(&u.data()[idx]);
        check_fd(model, batch, entry, g.urnn_u[l].data()[idx].real());
        check_fd(model, batch, entry + 1, g.urnn_u[l].data()[idx].imag());
    }
}

TEST_CASE("finite differences: directional probe through the exponential map") {
    ToyModel model = make_model(AdapterMode::urnn, 12);
    Batch batch = toy_batch(model, 5, 12);
    Gradients g = backward(model, forward(model, batch));
    Rng rng(121);

    for (std::size_t l = 0; l < model.depth(); ++l) {
        // random skew-Hermitian direction
        CMatrix gmat = num::random_gaussian<std::complex<double>>(model.urnn[l].rows(),
                                                                  model.urnn[l].rows(), rng);
        CMatrix dir = gmat - num::adjoint(gmat);
        const CMatrix u0 = model.urnn[l];

        auto loss_along = [&](double eps) {
            CMatrix step = dir;
            step *= std::complex<double>(eps, 0.0);
            model.urnn[l] = num::expm(step) * u0;
            const double loss = loss_of(model, batch);
            model.urnn[l] = u0;
            return loss;
        };
        const double eps = 1e-5;
        const double fd = (loss_along(eps) - loss_along(-eps)) / (2.0 * eps);
        // analytic: dL = Re<G, dU> with dU = dir * U
        CMatrix du = dir * u0;
        double analytic = 0.0;
        for (std::size_t i = 0; i < du.size(); ++i)
            analytic += (std::conj(g.urnn_u[l].data()[i]) * du.data()[i]).real();
        const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
        REQUIRE(std::abs(fd - analytic) / denom < 1e-4);
    }
}

TEST_CASE("finite differences: hybrid a, b, and q through the Cayley map") {
    ToyModel model = make_model(AdapterMode::hybrid, 13);
    Batch batch = toy_batch(model, 5, 13);
    Rng rng(131);
    for (auto& h : model.hybrid) {
        for (auto& v : h.lora.a.data()) v = rng.gaussian(0.4);
        for (auto& v : h.lora.b.data()) v = rng.gaussian(0.4);
    }
    Gradients g = backward(model, forward(model, batch));

    for (int probe = 0; probe < 30; ++probe) {
        const std::size_t l = rng.uniform_index(model.depth());
        auto& h = model.hybrid[l];
        const int which = static_cast<int>(rng.uniform_index(3));
        if (which == 0) {
            const std::size_t ia = rng.uniform_index(h.lora.a.size());
            check_fd(model, batch, &h.lora.a.data()[ia], g.lora_a[l].data()[ia]);
        } else if (which == 1) {
            const std::size_t ib = rng.uniform_index(h.lora.b.size());
            check_fd(model, batch, &h.lora.b.data()[ib], g.lora_b[l].data()[ib]);
        } else {
            // q lives on the skew manifold: probe the free pair (i, j), i < j,
            // by moving q_ij and q_ji in opposite directions
            const std::size_t d = h.skew.q.rows();
            const std::size_t i = rng.uniform_index(d - 1);
            const std::size_t j = i + 1 + rng.uniform_index(d - i - 1);
            const double saved = h.skew.q(i, j);
            const double eps = 1e-5;
            auto loss_at = [&](double delta) {
                h.skew.q(i, j) = saved + delta;
                h.skew.q(j, i) = -(saved + delta);
                const double loss = loss_of(model, batch);
                h.skew.q(i, j) = saved;
                h.skew.q(j, i) = -saved;
                return loss;
            };
            const double fd = (loss_at(eps) - loss_at(-eps)) / (2.0 * eps);
            const double analytic = g.hybrid_q[l](i, j) - g.hybrid_q[l](j, i);
            const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
            REQUIRE(std::abs(fd - analytic) / denom < 1e-4);
        }
    }
}

TEST_CASE("predict_proba agrees with the forward softmax") {
    ToyModel model = make_model(AdapterMode::hybrid, 14);
    Batch b = toy_batch(model, 1, 14);
    ForwardCache cache = forward(model, b);
    std::vector<double> p = predict_proba(model, b.x[0]);
    for (std::size_t c = 0; c < p.size(); ++c)
        REQUIRE(p[c] == Catch::Approx(cache.probs[0][c]).margin(1e-12));
}
