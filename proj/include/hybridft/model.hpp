#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hybridft/boft.hpp"
#include "hybridft/cayley.hpp"
#include "hybridft/error.hpp"
#include "hybridft/featurizer.hpp"
#include "hybridft/fusion.hpp"
#include "hybridft/lora.hpp"
#include "hybridft/matrix.hpp"
#include "hybridft/unitary.hpp"

namespace hybridft::train {

using num::CMatrix;
using num::Matrix;

enum class AdapterMode { full, lora, lora_ga, boft, urnn, hybrid };

inline std::string to_string(AdapterMode m) {
    switch (m) {
        case AdapterMode::full: return "full";
        case AdapterMode::lora: return "lora";
        case AdapterMode::lora_ga: return "lora_ga";
        case AdapterMode::boft: return "boft";
        case AdapterMode::urnn: return "urnn";
        case AdapterMode::hybrid: return "hybrid";
    }
    return "?";
}

inline AdapterMode adapter_mode_from_string(const std::string& s) {
    if (s == "full") return AdapterMode::full;
    if (s == "lora") return AdapterMode::lora;
    if (s == "lora_ga") return AdapterMode::lora_ga;
    if (s == "boft") return AdapterMode::boft;
    if (s == "urnn") return AdapterMode::urnn;
    if (s == "hybrid") return AdapterMode::hybrid;
    throw data_error("unknown adapter mode: " + s);
}

struct Batch {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    std::size_t size() const { return x.size(); }
};

// Feed-forward classifier over hashed text features.  Hidden layers are
// square (hidden x hidden) so every adapter family can attach; the base
// weights freeze after warmup in all modes except full.
struct ToyModel {
    AdapterMode mode = AdapterMode::hybrid;
    Featurizer embed;
    std::vector<Matrix> w0;  // frozen base, one square matrix per hidden layer
    Matrix head_w;           // classes x hidden, always trainable
    std::vector<double> head_b;

    std::vector<adapt::LoraState> lora;            // lora / lora_ga
    std::vector<adapt::BoftState> boft;            // boft
    std::vector<CMatrix> urnn;                     // dense unitary, hidden/2 complex
    std::vector<fusion::HybridLayerState> hybrid;  // hybrid

    double eta_boft = 1e-3;  // Cayley step size used in the hybrid forward
    std::uint64_t version = 0;

    std::size_t hidden() const { return w0.empty() ? 0 : w0[0].rows(); }
    std::size_t depth() const { return w0.size(); }
    std::size_t classes() const { return head_w.rows(); }
};

// Gradients for every trainable tensor of the active mode.
struct Gradients {
    Matrix head_w;
    std::vector<double> head_b;
    std::vector<Matrix> w0;                        // full
    std::vector<Matrix> lora_a, lora_b;            // lora / lora_ga / hybrid
    std::vector<std::vector<Matrix>> boft_blocks;  // boft
    std::vector<CMatrix> urnn_u;                   // urnn
    std::vector<Matrix> hybrid_q;                  // hybrid

    double global_norm() const {
        double s = num::frobenius_norm(head_w) * num::frobenius_norm(head_w);
        for (double b : head_b) s += b * b;
        auto acc = [&s](const auto& mats) {
            for (const auto& m : mats) {
                const double f = num::frobenius_norm(m);
                s += f * f;
            }
        };
        acc(w0);
        acc(lora_a);
        acc(lora_b);
        for (const auto& blocks : boft_blocks) acc(blocks);
        acc(urnn_u);
        acc(hybrid_q);
        return std::sqrt(s);
    }
};

namespace detail {

// cap bookkeeping so backward can differentiate through the rescale exactly
struct LoraForwardInfo {
    Matrix m;  // (alpha/r) a b before the cap
    double m_norm = 0.0;
    double bound = 0.0;
    bool clamped = false;
};

inline LoraForwardInfo lora_delta_info(const adapt::LoraState& s) {
    LoraForwardInfo info;
    info.m = s.a * s.b;
    info.m *= s.alpha / static_cast<double>(s.rank);
    info.m_norm = num::frobenius_norm(info.m);
    info.bound = s.lambda_cap * s.w0_fro;
    info.clamped = info.m_norm > info.bound && info.m_norm > 0.0;
    return info;
}

inline Matrix capped_delta(const LoraForwardInfo& info) {
    if (!info.clamped) return info.m;
    return (info.bound / info.m_norm) * info.m;
}

// gradient w.r.t. the pre-cap matrix M given the gradient w.r.t. cap(M)
inline Matrix cap_backward(const LoraForwardInfo& info, const Matrix& g_delta) {
    if (!info.clamped) return g_delta;
    double dot = 0.0;
    for (std::size_t i = 0; i < info.m.size(); ++i)
        dot += g_delta.data()[i] * info.m.data()[i];
    const double n = info.m_norm;
    Matrix g = (info.bound / n) * g_delta;
    g -= (info.bound * dot / (n * n * n)) * info.m;
    return g;
}

// real 2m x 2m representation [[X, -Y], [Y, X]] of a complex m x m matrix,
// acting on stacked (re; im) coordinates
inline Matrix realify(const CMatrix& u) {
    const std::size_t m = u.rows();
    Matrix r(2 * m, 2 * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double x = u(i, j).real();
            const double y = u(i, j).imag();
            r(i, j) = x;
            r(i, j + m) = -y;
            r(i + m, j) = y;
            r(i + m, j + m) = x;
        }
    return r;
}

// Wirtinger gradient of a real loss w.r.t. the complex matrix, from the
// gradient w.r.t. its realified representation
inline CMatrix unrealify_grad(const Matrix& g) {
    const std::size_t m = g.rows() / 2;
    CMatrix gc(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double gx = g(i, j) + g(i + m, j + m);
            const double gy = g(i + m, j) - g(i, j + m);
            gc(i, j) = {gx, gy};
        }
    return gc;
}

}  // namespace detail

struct ForwardCache {
    std::vector<Matrix> w_eff;  // per hidden layer
    std::vector<detail::LoraForwardInfo> lora_info;
    std::vector<Matrix> hybrid_r;  // Cayley factor used in the forward
    // activations: h[0] = inputs, h[l] = tanh output of layer l; per example
    std::vector<std::vector<std::vector<double>>> h;
    std::vector<std::vector<double>> probs;
    double loss = 0.0;
    std::uint64_t model_version = 0;
    const Batch* batch = nullptr;
};

// Effective weight of hidden layer l under the active adapter mode.
// For hybrid, the branch deltas enter the forward scaled by the previous
// step's mixing coefficient (0.5 before the first step).
inline Matrix effective_weight(const ToyModel& model, std::size_t l, ForwardCache* cache) {
    switch (model.mode) {
        case AdapterMode::full:
            return model.w0[l];
        case AdapterMode::lora:
        case AdapterMode::lora_ga: {
            detail::LoraForwardInfo info = detail::lora_delta_info(model.lora[l]);
            Matrix w = model.w0[l] + detail::capped_delta(info);
            if (cache) cache->lora_info[l] = std::move(info);
            return w;
        }
        case AdapterMode::boft:
            return adapt::boft_compose(model.boft[l]) * model.w0[l];
        case AdapterMode::urnn:
            // layers outside the placement list stay frozen
            if (model.urnn[l].empty()) return model.w0[l];
            return detail::realify(model.urnn[l]) * model.w0[l];
        case AdapterMode::hybrid: {
            const fusion::HybridLayerState& hs = model.hybrid[l];
            detail::LoraForwardInfo info = detail::lora_delta_info(hs.lora);
            const double lam = hs.trace.lambda;
            Matrix r = num::cayley(hs.skew.q, model.eta_boft);
            Matrix r_minus_i = r;
            for (std::size_t i = 0; i < r_minus_i.rows(); ++i) r_minus_i(i, i) -= 1.0;
            Matrix w = hs.w + lam * detail::capped_delta(info) +
                       (1.0 - lam) * (r_minus_i * hs.w);
            if (cache) {
                cache->lora_info[l] = std::move(info);
                cache->hybrid_r[l] = std::move(r);
            }
            return w;
        }
    }
    throw contract_error("effective_weight: unreachable");
}

// Cross-entropy over softmax outputs, summed over the batch.
inline ForwardCache forward(const ToyModel& model, const Batch& batch) {
    if (batch.size() == 0) throw invalid_input_error("forward: empty batch");
    const std::size_t n_classes = model.classes();
    for (int y : batch.y)
        if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
            throw invalid_input_error("forward: label out of range");

    ForwardCache cache;
    cache.model_version = model.version;
    cache.batch = &batch;
    cache.lora_info.resize(model.depth());
    cache.hybrid_r.resize(model.depth());
    cache.w_eff.reserve(model.depth());
    for (std::size_t l = 0; l < model.depth(); ++l)
        cache.w_eff.push_back(effective_weight(model, l, &cache));

    const std::size_t n = batch.size();
    cache.h.assign(model.depth() + 1, std::vector<std::vector<double>>(n));
    cache.probs.resize(n);

    double loss = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
        cache.h[0][e] = batch.x[e];
        for (std::size_t l = 0; l < model.depth(); ++l) {
            std::vector<double> z = cache.w_eff[l] * cache.h[l][e];
            for (double& v : z) v = std::tanh(v);
            cache.h[l + 1][e] = std::move(z);
        }
        std::vector<double> logits = model.head_w * cache.h[model.depth()][e];
        for (std::size_t c = 0; c < n_classes; ++c) logits[c] += model.head_b[c];

        double mx = logits[0];
        for (double v : logits) mx = std::max(mx, v);
        double denom = 0.0;
        for (double v : logits) denom += std::exp(v - mx);
        std::vector<double> p(n_classes);
        for (std::size_t c = 0; c < n_classes; ++c) p[c] = std::exp(logits[c] - mx) / denom;
        // no floor on p: a fully collapsed softmax must surface as +inf loss
        loss -= std::log(p[static_cast<std::size_t>(batch.y[e])]);
        cache.probs[e] = std::move(p);
    }
    cache.loss = loss;
    return cache;
}

inline std::vector<Matrix> all_effective_weights(const ToyModel& model) {
    std::vector<Matrix> w;
    w.reserve(model.depth());
    for (std::size_t l = 0; l < model.depth(); ++l)
        w.push_back(effective_weight(model, l, nullptr));
    return w;
}

// class probabilities for one feature vector (inference path, no cache)
inline std::vector<double> predict_proba(const ToyModel& model,
                                         const std::vector<Matrix>& w_eff,
                                         const std::vector<double>& features) {
    std::vector<double> h = features;
    for (std::size_t l = 0; l < model.depth(); ++l) {
        std::vector<double> z = w_eff[l] * h;
        for (double& v : z) v = std::tanh(v);
        h = std::move(z);
    }
    std::vector<double> logits = model.head_w * h;
    for (std::size_t c = 0; c < logits.size(); ++c) logits[c] += model.head_b[c];
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double denom = 0.0;
    for (double v : logits) denom += std::exp(v - mx);
    for (double& v : logits) v = std::exp(v - mx) / denom;
    return logits;
}

inline std::vector<double> predict_proba(const ToyModel& model,
                                         const std::vector<double>& features) {
    return predict_proba(model, all_effective_weights(model), features);
}

// gradient of the loss w.r.t. Q through the Cayley factor R(Q):
// dR = eta (I + R) dQ (I - eta Q)^{-1}, so
// grad_Q = eta (I + R)^T G_R (I - eta Q)^{-T}
inline Matrix cayley_backward(const Matrix& q, const Matrix& r, double eta, const Matrix& g_r) {
    const std::size_t d = q.rows();
    Matrix minus = Matrix::identity(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) minus(i, j) -= eta * q(i, j);
    Matrix i_plus_r_t = transpose(r);
    for (std::size_t i = 0; i < d; ++i) i_plus_r_t(i, i) += 1.0;
    // G_R (I - eta Q)^{-T} = solve(I - eta Q, G_R^T)^T
    Matrix right = transpose(num::solve(minus, transpose(g_r)));
    Matrix g = i_plus_r_t * right;
    g *= eta;
    return g;
}

// Exact reverse-mode gradients for every trainable tensor of the active mode.
inline Gradients backward(const ToyModel& model, const ForwardCache& cache) {
    if (cache.model_version != model.version)
        throw contract_error("backward: stale cache (model advanced since forward)");
    const Batch& batch = *cache.batch;
    const std::size_t n = batch.size();
    const std::size_t n_classes = model.classes();
    const std::size_t depth = model.depth();

    Gradients g;
    g.head_w = Matrix(model.head_w.rows(), model.head_w.cols());
    g.head_b.assign(n_classes, 0.0);
    std::vector<Matrix> g_weff(depth);
    for (std::size_t l = 0; l < depth; ++l)
        g_weff[l] = Matrix(cache.w_eff[l].rows(), cache.w_eff[l].cols());

    for (std::size_t e = 0; e < n; ++e) {
        std::vector<double> dlogits = cache.probs[e];
        dlogits[static_cast<std::size_t>(batch.y[e])] -= 1.0;

        const std::vector<double>& h_top = cache.h[depth][e];
        for (std::size_t c = 0; c < n_classes; ++c) {
            g.head_b[c] += dlogits[c];
            for (std::size_t j = 0; j < h_top.size(); ++j)
                g.head_w(c, j) += dlogits[c] * h_top[j];
        }

        std::vector<double> gh(h_top.size(), 0.0);
        for (std::size_t j = 0; j < h_top.size(); ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < n_classes; ++c) acc += model.head_w(c, j) * dlogits[c];
            gh[j] = acc;
        }

        for (std::size_t l = depth; l-- > 0;) {
            const std::vector<double>& act = cache.h[l + 1][e];
            const std::vector<double>& below = cache.h[l][e];
            std::vector<double> gz(act.size());
            for (std::size_t i = 0; i < act.size(); ++i)
                gz[i] = gh[i] * (1.0 - act[i] * act[i]);
            Matrix& gw = g_weff[l];
            for (std::size_t i = 0; i < gz.size(); ++i) {
                if (gz[i] == 0.0) continue;
                for (std::size_t j = 0; j < below.size(); ++j)
                    gw(i, j) += gz[i] * below[j];
            }
            if (l > 0) {
                std::vector<double> next(below.size(), 0.0);
                const Matrix& w = cache.w_eff[l];
                for (std::size_t i = 0; i < gz.size(); ++i)
                    for (std::size_t j = 0; j < below.size(); ++j)
                        next[j] += w(i, j) * gz[i];
                gh = std::move(next);
            }
        }
    }

    // map effective-weight gradients onto the mode's parameters
    switch (model.mode) {
        case AdapterMode::full:
            g.w0 = std::move(g_weff);
            break;
        case AdapterMode::lora:
        case AdapterMode::lora_ga: {
            g.lora_a.resize(depth);
            g.lora_b.resize(depth);
            for (std::size_t l = 0; l < depth; ++l) {
                const adapt::LoraState& s = model.lora[l];
                const double scale = s.alpha / static_cast<double>(s.rank);
                Matrix g_m = detail::cap_backward(cache.lora_info[l], g_weff[l]);
                g_m *= scale;
                g.lora_a[l] = g_m * transpose(s.b);
                g.lora_b[l] = transpose(s.a) * g_m;
            }
            break;
        }
        case AdapterMode::boft: {
            g.boft_blocks.resize(depth);
            for (std::size_t l = 0; l < depth; ++l) {
                const auto& blocks = model.boft[l].blocks;
                const std::size_t m = blocks.size();
                Matrix g_p = g_weff[l] * transpose(model.w0[l]);
                // prefix[i] = B_0 ... B_{i-1}, suffix[i] = B_{i+1} ... B_{m-1}
                std::vector<Matrix> prefix(m + 1), suffix(m + 1);
                prefix[0] = Matrix::identity(model.boft[l].dim);
                for (std::size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] * blocks[i];
                suffix[m] = Matrix::identity(model.boft[l].dim);
                for (std::size_t i = m; i-- > 0;) suffix[i] = blocks[i] * suffix[i + 1];
                g.boft_blocks[l].resize(m);
                for (std::size_t i = 0; i < m; ++i)
                    g.boft_blocks[l][i] = transpose(prefix[i]) * g_p * transpose(suffix[i + 1]);
            }
            break;
        }
        case AdapterMode::urnn: {
            g.urnn_u.resize(depth);
            for (std::size_t l = 0; l < depth; ++l) {
                if (model.urnn[l].empty()) continue;
                Matrix g_real = g_weff[l] * transpose(model.w0[l]);
                g.urnn_u[l] = detail::unrealify_grad(g_real);
            }
            break;
        }
        case AdapterMode::hybrid: {
            g.lora_a.resize(depth);
            g.lora_b.resize(depth);
            g.hybrid_q.resize(depth);
            for (std::size_t l = 0; l < depth; ++l) {
                const fusion::HybridLayerState& hs = model.hybrid[l];
                const double lam = hs.trace.lambda;
                const double scale = hs.lora.alpha / static_cast<double>(hs.lora.rank);

                Matrix g_delta = lam * g_weff[l];
                Matrix g_m = detail::cap_backward(cache.lora_info[l], g_delta);
                g_m *= scale;
                g.lora_a[l] = g_m * transpose(hs.lora.b);
                g.lora_b[l] = transpose(hs.lora.a) * g_m;

                Matrix g_r = (1.0 - lam) * (g_weff[l] * transpose(hs.w));
                g.hybrid_q[l] =
                    cayley_backward(hs.skew.q, cache.hybrid_r[l], model.eta_boft, g_r);
            }
            break;
        }
    }
    return g;
}

}  // namespace hybridft::train
