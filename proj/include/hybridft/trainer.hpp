#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "hybridft/document.hpp"
#include "hybridft/error.hpp"
#include "hybridft/model.hpp"
#include "hybridft/synthdata.hpp"

namespace hybridft::train {

struct TrainOptions {
    AdapterMode mode = AdapterMode::hybrid;
    std::uint64_t seed = 1;
    std::size_t hidden = 32;     // power of two
    std::size_t layers = 2;
    std::size_t classes = synth::kNumClasses;
    std::size_t rank = adapt::kDefaultRank;
    double alpha = adapt::kDefaultAlpha;
    double lambda_cap = adapt::kDefaultLambdaCap;
    double eta_lora = 5e-3;
    double eta_boft = 1e-3;
    double eta_full = 0.05;      // full-FT warmup and the task head
    std::size_t butterfly_depth = adapt::kDefaultButterflyDepth;
    std::size_t epochs = 3;
    std::size_t batch_size = 16;
    std::size_t warmup_epochs = 2;
    double val_fraction = 0.2;
    double ga_init_scale = 1.0;  // scales the gradient-aligned init magnitude
    std::vector<std::size_t> unitary_layers;  // empty = every hidden layer
    std::size_t workers = 1;
    std::size_t val_loss_cap = 128;  // val examples used for the per-step loss
};

// --------------------------------------------------------------------------
// dataset assembly
// --------------------------------------------------------------------------

struct Dataset {
    Batch train;
    Batch val;
    std::vector<std::string> val_ids;
    std::vector<std::string> val_langs;
};

// Featurization fans out across workers; slots are preassigned so the result
// is identical for any worker count.
inline std::vector<std::vector<double>> featurize_all(const Featurizer& embed,
                                                      const std::vector<const std::string*>& texts,
                                                      std::size_t workers) {
    std::vector<std::vector<double>> out(texts.size());
    if (workers <= 1 || texts.size() < 2 * workers) {
        for (std::size_t i = 0; i < texts.size(); ++i) out[i] = embed.features(*texts[i]);
        return out;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (texts.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(texts.size(), lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi]() {
            for (std::size_t i = lo; i < hi; ++i) out[i] = embed.features(*texts[i]);
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

// Deterministic id-hash split: a document lands in the validation split when
// fnv1a(id) mod 1000 falls under val_fraction.
inline Dataset build_dataset(const gov::Corpus& corpus, const Featurizer& embed,
                             double val_fraction, std::size_t workers = 1) {
    std::vector<const gov::Document*> labeled;
    for (const gov::Document& d : corpus)
        if (d.label >= 0 && !d.text.empty()) labeled.push_back(&d);

    std::vector<const std::string*> texts;
    texts.reserve(labeled.size());
    for (const auto* d : labeled) texts.push_back(&d->text);
    std::vector<std::vector<double>> feats = featurize_all(embed, texts, workers);

    Dataset ds;
    const auto threshold = static_cast<std::uint64_t>(val_fraction * 1000.0);
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        const bool is_val = Featurizer::fnv1a(labeled[i]->id, 0xda7a) % 1000 < threshold;
        if (is_val) {
            ds.val.x.push_back(std::move(feats[i]));
            ds.val.y.push_back(labeled[i]->label);
            ds.val_ids.push_back(labeled[i]->id);
            ds.val_langs.push_back(labeled[i]->lang);
        } else {
            ds.train.x.push_back(std::move(feats[i]));
            ds.train.y.push_back(labeled[i]->label);
        }
    }
    return ds;
}

// --------------------------------------------------------------------------
// model construction: random base, full-FT warmup on held-out synthetic data,
// then freeze and attach the requested adapter family
// --------------------------------------------------------------------------

inline void sgd_full(ToyModel& model, const Gradients& g, double eta_full) {
    for (std::size_t l = 0; l < model.depth(); ++l) model.w0[l] -= eta_full * g.w0[l];
}

inline void sgd_head(ToyModel& model, const Gradients& g, double eta) {
    model.head_w -= eta * g.head_w;
    for (std::size_t c = 0; c < model.head_b.size(); ++c)
        model.head_b[c] -= eta * g.head_b[c];
}

inline bool layer_has_unitary(const TrainOptions& opt, std::size_t l) {
    if (opt.unitary_layers.empty()) return true;
    return std::find(opt.unitary_layers.begin(), opt.unitary_layers.end(), l) !=
           opt.unitary_layers.end();
}

// Gradient of the loss w.r.t. each frozen base weight, used to seed the
// gradient-aligned init.  Runs the model as if in full mode.
inline std::vector<Matrix> base_weight_gradients(const ToyModel& model, const Batch& batch) {
    ToyModel probe = model;
    probe.mode = AdapterMode::full;
    ForwardCache cache = forward(probe, batch);
    Gradients g = backward(probe, cache);
    return std::move(g.w0);
}

inline ToyModel build_model(const TrainOptions& opt) {
    if (!num::is_power_of_two(opt.hidden) || opt.hidden < 4)
        throw invalid_input_error("build_model: hidden dim must be a power of two >= 4");
    if (opt.layers < 1) throw invalid_input_error("build_model: at least one hidden layer");

    Rng rng = Rng(opt.seed).fork(0xbace);
    ToyModel model;
    model.mode = AdapterMode::full;
    model.embed = Featurizer(opt.hidden);
    model.eta_boft = opt.eta_boft;
    const double init_std = 1.0 / std::sqrt(static_cast<double>(opt.hidden));
    for (std::size_t l = 0; l < opt.layers; ++l)
        model.w0.push_back(num::random_gaussian<double>(opt.hidden, opt.hidden, rng, init_std));
    model.head_w = num::random_gaussian<double>(opt.classes, opt.hidden, rng, init_std);
    model.head_b.assign(opt.classes, 0.0);
    return model;
}

inline void install_adapters(ToyModel& model, const TrainOptions& opt, const Batch& init_batch) {
    model.mode = opt.mode;
    model.eta_boft = opt.eta_boft;
    model.lora.clear();
    model.boft.clear();
    model.urnn.clear();
    model.hybrid.clear();
    Rng rng = Rng(opt.seed).fork(0xada7);

    switch (opt.mode) {
        case AdapterMode::full:
            break;
        case AdapterMode::lora:
            for (std::size_t l = 0; l < model.depth(); ++l)
                model.lora.push_back(adapt::lora_init(model.w0[l], opt.rank, rng.next_u64(),
                                                      opt.alpha, opt.lambda_cap));
            break;
        case AdapterMode::lora_ga:
        case AdapterMode::hybrid: {
            if (init_batch.size() == 0)
                throw invalid_input_error("install_adapters: gradient-aligned init needs data");
            std::vector<Matrix> base_grads = base_weight_gradients(model, init_batch);
            // The aligned init is scaled to one descent step: a b approximates
            // -(eta r / alpha) grad, so the initial forward delta is -eta grad_r.
            const double kappa = opt.ga_init_scale * opt.eta_lora *
                                 static_cast<double>(opt.rank) / opt.alpha;
            for (std::size_t l = 0; l < model.depth(); ++l) {
                Matrix seed_grad = (-kappa) * base_grads[l];
                adapt::LoraState lora = adapt::lora_ga_init(model.w0[l], seed_grad, opt.rank,
                                                            opt.alpha, opt.lambda_cap);
                if (opt.mode == AdapterMode::lora_ga) {
                    model.lora.push_back(std::move(lora));
                } else {
                    adapt::SkewGenState skew = adapt::skew_gen_init(model.w0[l].rows(), opt.eta_boft);
                    model.hybrid.push_back(fusion::hybrid_layer_init(
                        model.w0[l], std::move(lora), std::move(skew), l));
                }
            }
            break;
        }
        case AdapterMode::boft:
            for (std::size_t l = 0; l < model.depth(); ++l)
                model.boft.push_back(
                    adapt::boft_init(model.w0[l].rows(), opt.butterfly_depth, rng.next_u64()));
            break;
        case AdapterMode::urnn:
            for (std::size_t l = 0; l < model.depth(); ++l) {
                if (!layer_has_unitary(opt, l)) {
                    model.urnn.emplace_back();  // empty: layer stays frozen
                    continue;
                }
                adapt::UnitaryLayerState s = adapt::unitary_identity_init(model.w0[l].rows() / 2);
                // small random phases keep the init near identity but break symmetry
                Rng prng = rng.fork(l);
                for (auto& p : s.d1) {
                    const double ang = 0.02 * prng.gaussian();
                    p = {std::cos(ang), std::sin(ang)};
                }
                model.urnn.push_back(adapt::unitary_materialize(s));
            }
            break;
    }
    model.version += 1;
}

// --------------------------------------------------------------------------
// training loop
// --------------------------------------------------------------------------

struct TrainTrace {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean per example over the minibatch
    double val_loss = 0.0;    // mean per example over the (capped) val set
    double grad_norm = 0.0;   // global norm across every trainable tensor
    double max_drift = 0.0;   // worst manifold-membership drift this step
    std::vector<fusion::MixTrace> mix;  // one per layer in hybrid mode
};

struct TrainResult {
    ToyModel model;
    std::vector<TrainTrace> traces;
    bool diverged = false;
    bool drift_abort = false;
    std::string diagnostic;
};

inline void apply_step(ToyModel& model, const Gradients& g, const TrainOptions& opt) {
    switch (model.mode) {
        case AdapterMode::full:
            sgd_full(model, g, opt.eta_full);
            break;
        case AdapterMode::lora:
        case AdapterMode::lora_ga:
            for (std::size_t l = 0; l < model.depth(); ++l)
                model.lora[l] =
                    adapt::lora_step(std::move(model.lora[l]), g.lora_a[l], g.lora_b[l],
                                     opt.eta_lora);
            break;
        case AdapterMode::boft:
            for (std::size_t l = 0; l < model.depth(); ++l)
                model.boft[l] =
                    adapt::boft_step(std::move(model.boft[l]), g.boft_blocks[l], opt.eta_boft);
            break;
        case AdapterMode::urnn:
            // the exponential-map op follows the paper's ascent-signed formula;
            // descending means stepping with -eta
            for (std::size_t l = 0; l < model.depth(); ++l) {
                if (model.urnn[l].empty()) continue;
                model.urnn[l] = adapt::unitary_step(model.urnn[l], g.urnn_u[l], -opt.eta_boft);
            }
            break;
        case AdapterMode::hybrid:
            for (std::size_t l = 0; l < model.depth(); ++l)
                model.hybrid[l] =
                    fusion::hybrid_step(std::move(model.hybrid[l]), g.lora_a[l], g.lora_b[l],
                                        g.hybrid_q[l], opt.eta_lora, opt.eta_boft);
            break;
    }
    sgd_head(model, g, opt.eta_full);
    model.version += 1;
}

inline double manifold_drift(const ToyModel& model) {
    double worst = 0.0;
    switch (model.mode) {
        case AdapterMode::boft:
            for (const auto& s : model.boft)
                for (const auto& blk : s.blocks)
                    worst = std::max(worst, num::orthogonality_drift(blk));
            break;
        case AdapterMode::urnn:
            for (const auto& u : model.urnn)
                if (!u.empty()) worst = std::max(worst, num::orthogonality_drift(u));
            break;
        case AdapterMode::hybrid:
            for (const auto& h : model.hybrid)
                worst = std::max(worst, num::orthogonality_drift(h.r_cache));
            break;
        default:
            break;
    }
    return worst;
}

inline double mean_loss(const ToyModel& model, const Batch& batch) {
    if (batch.size() == 0) return 0.0;
    return forward(model, batch).loss / static_cast<double>(batch.size());
}

inline Batch subset(const Batch& b, std::size_t cap) {
    if (b.size() <= cap) return b;
    Batch s;
    s.x.assign(b.x.begin(), b.x.begin() + static_cast<long>(cap));
    s.y.assign(b.y.begin(), b.y.begin() + static_cast<long>(cap));
    return s;
}

// E epochs of minibatch SGD with the mode's step rule; emits one TrainTrace
// per step.  Divergence (non-finite loss) or manifold drift beyond 1e-6 stops
// the run with the last good model.
inline TrainResult run_training(ToyModel model, const Dataset& ds, const TrainOptions& opt) {
    TrainResult result;
    if (ds.train.size() == 0) throw invalid_input_error("run_training: empty training split");

    const Batch val_probe = subset(ds.val, opt.val_loss_cap);
    std::vector<std::size_t> order(ds.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
        Rng shuffle_rng = Rng(opt.seed).fork(0xe90c0 + epoch);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            Batch batch;
            const std::size_t end = std::min(order.size(), start + opt.batch_size);
            for (std::size_t i = start; i < end; ++i) {
                batch.x.push_back(ds.train.x[order[i]]);
                batch.y.push_back(ds.train.y[order[i]]);
            }

            ForwardCache cache = forward(model, batch);
            if (!std::isfinite(cache.loss)) {
                result.diverged = true;
                result.diagnostic = "non-finite loss at step " + std::to_string(step + 1);
                result.model = std::move(model);
                return result;
            }
            Gradients g = backward(model, cache);
            apply_step(model, g, opt);
            ++step;

            TrainTrace t;
            t.step = step;
            t.epoch = epoch;
            t.train_loss = cache.loss / static_cast<double>(batch.size());
            t.val_loss = val_probe.size() ? mean_loss(model, val_probe) : 0.0;
            t.grad_norm = g.global_norm();
            t.max_drift = manifold_drift(model);
            if (model.mode == AdapterMode::hybrid)
                for (const auto& h : model.hybrid) t.mix.push_back(h.trace);
            result.traces.push_back(std::move(t));

            if (result.traces.back().max_drift > 1e-6) {
                result.drift_abort = true;
                result.diagnostic = "manifold drift " +
                                    std::to_string(result.traces.back().max_drift) +
                                    " exceeded 1e-6 at step " + std::to_string(step);
                result.model = std::move(model);
                return result;
            }
        }
    }
    result.model = std::move(model);
    return result;
}

// Short full-FT warmup on held-out synthetic data (a seeded generator shard
// disjoint from any user corpus) gives a frozen base worth adapting.
inline ToyModel warmup_base(ToyModel model, const TrainOptions& opt) {
    synth::GeneratorSpec spec;
    spec.docs = 240;
    spec.seed = Rng(opt.seed).fork(0x4a4a).next_u64();
    spec.ortho_noise = 0.0;
    synth::GeneratedCorpus warm = synth::generate_corpus(spec);
    Dataset ds = build_dataset(warm.docs, model.embed, 0.0, opt.workers);

    TrainOptions warm_opt = opt;
    warm_opt.mode = AdapterMode::full;
    warm_opt.epochs = opt.warmup_epochs;
    model.mode = AdapterMode::full;
    if (warm_opt.epochs == 0) return model;
    TrainResult r = run_training(std::move(model), ds, warm_opt);
    return std::move(r.model);
}

// Convenience wrapper: build base, warm it up, freeze, install adapters
// (gradient-aligned init drawn from the first training minibatch), train.
inline TrainResult train_on_corpus(const gov::Corpus& corpus, const TrainOptions& opt) {
    ToyModel model = build_model(opt);
    model = warmup_base(std::move(model), opt);
    Dataset ds = build_dataset(corpus, model.embed, opt.val_fraction, opt.workers);
    if (ds.train.size() == 0) throw data_error("train_on_corpus: no labeled training documents");
    install_adapters(model, opt, subset(ds.train, opt.batch_size));
    return run_training(std::move(model), ds, opt);
}

// --------------------------------------------------------------------------
// footprint
// --------------------------------------------------------------------------

struct FootprintRecord {
    std::string mode;
    std::size_t head_params = 0;
    std::size_t adapter_params = 0;  // exact trainable-entry count
    std::size_t total_params = 0;
    double step_seconds = 0.0;       // measured; excluded from golden outputs
};

inline std::size_t adapter_param_count(const ToyModel& model) {
    std::size_t n = 0;
    switch (model.mode) {
        case AdapterMode::full:
            for (const auto& w : model.w0) n += w.size();
            break;
        case AdapterMode::lora:
        case AdapterMode::lora_ga:
            for (const auto& s : model.lora) n += s.trainable_entries();
            break;
        case AdapterMode::boft:
            for (const auto& s : model.boft) n += s.trainable_entries();
            break;
        case AdapterMode::urnn:
            // dimension of the unitary group U(m): m^2 real parameters
            for (const auto& u : model.urnn)
                if (!u.empty()) n += u.rows() * u.rows();
            break;
        case AdapterMode::hybrid:
            for (const auto& h : model.hybrid)
                n += h.lora.trainable_entries() + h.skew.trainable_entries();
            break;
    }
    return n;
}

inline FootprintRecord footprint_report(const ToyModel& model, const Dataset& ds,
                                        const TrainOptions& opt, bool measure_time = false) {
    FootprintRecord rec;
    rec.mode = to_string(model.mode);
    rec.head_params = model.head_w.size() + model.head_b.size();
    rec.adapter_params = adapter_param_count(model);
    rec.total_params = rec.head_params + rec.adapter_params;
    if (measure_time && ds.train.size() > 0) {
        ToyModel probe = model;
        TrainOptions popt = opt;
        const Batch batch = subset(ds.train, opt.batch_size);
        const auto t0 = std::chrono::steady_clock::now();
        constexpr int reps = 3;
        for (int i = 0; i < reps; ++i) {
            ForwardCache cache = forward(probe, batch);
            Gradients g = backward(probe, cache);
            apply_step(probe, g, popt);
        }
        const auto t1 = std::chrono::steady_clock::now();
        rec.step_seconds = std::chrono::duration<double>(t1 - t0).count() / reps;
    }
    return rec;
}

// FNV-1a over the raw bytes of every frozen base weight; the frozen-base
// invariant compares this before and after training.
inline std::uint64_t base_checksum(const ToyModel& model) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const Matrix& w : model.w0) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(w.data().data());
        for (std::size_t i = 0; i < w.size() * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    }
    return h;
}

}  // namespace hybridft::train
