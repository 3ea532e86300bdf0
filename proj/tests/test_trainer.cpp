#include <catch2/catch_amalgamated.hpp>

#include "hybridft/trainer.hpp"

using namespace hybridft;
using namespace hybridft::train;
using num::Matrix;

namespace {

// linearly separable two-cluster set in feature space
Dataset separable_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(i % 2);
        std::vector<double> x(dim);
        for (double& v : x) v = rng.gaussian(0.08);
        x[0] += cls == 0 ? 0.8 : -0.8;
        x[1] += cls == 0 ? -0.4 : 0.4;
        if (i % 5 == 0) {
            ds.val.x.push_back(std::move(x));
            ds.val.y.push_back(cls);
        } else {
            ds.train.x.push_back(std::move(x));
            ds.train.y.push_back(cls);
        }
    }
    return ds;
}

TrainOptions separable_options(AdapterMode mode, std::uint64_t seed) {
    TrainOptions opt;
    opt.mode = mode;
    opt.seed = seed;
    opt.hidden = 16;
    opt.layers = 2;
    opt.classes = 2;
    opt.rank = 2;
    opt.epochs = 40;
    opt.batch_size = 16;
    opt.warmup_epochs = 0;
    return opt;
}

double train_accuracy(const ToyModel& model, const Batch& batch) {
    const std::vector<Matrix> w = all_effective_weights(model);
    std::size_t hits = 0;
    for (std::size_t e = 0; e < batch.size(); ++e) {
        const std::vector<double> p = predict_proba(model, w, batch.x[e]);
        std::size_t arg = 0;
        for (std::size_t c = 1; c < p.size(); ++c)
            if (p[c] > p[arg]) arg = c;
        if (static_cast<int>(arg) == batch.y[e]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(batch.size());
}

ToyModel fresh_model(const TrainOptions& opt, const Dataset& ds) {
    ToyModel model = build_model(opt);
    install_adapters(model, opt, subset(ds.train, opt.batch_size));
    return model;
}

}  // namespace

TEST_CASE("zero epochs: model unchanged, empty trace") {
    TrainOptions opt = separable_options(AdapterMode::lora, 5);
    opt.epochs = 0;
    Dataset ds = separable_dataset(100, opt.hidden, 5);
    ToyModel model = fresh_model(opt, ds);
    const std::uint64_t before = base_checksum(model);
    const Matrix head_before = model.head_w;

    TrainResult r = run_training(model, ds, opt);
    REQUIRE(r.traces.empty());
    REQUIRE(base_checksum(r.model) == before);
    REQUIRE(r.model.head_w.data() == head_before.data());
}

TEST_CASE("every adapter mode reaches 0.95 training accuracy on separable data") {
    const AdapterMode modes[] = {AdapterMode::full,  AdapterMode::lora,
                                 AdapterMode::lora_ga, AdapterMode::boft,
                                 AdapterMode::urnn,  AdapterMode::hybrid};
    Dataset ds = separable_dataset(120, 16, 7);
    for (AdapterMode mode : modes) {
        TrainOptions opt = separable_options(mode, 7);
        ToyModel model = fresh_model(opt, ds);
        TrainResult r = run_training(std::move(model), ds, opt);
        REQUIRE_FALSE(r.diverged);
        REQUIRE_FALSE(r.drift_abort);
        INFO("mode " << to_string(mode));
        REQUIRE(train_accuracy(r.model, ds.train) >= 0.95);
    }
}

TEST_CASE("same seed twice gives bit-identical traces") {
    TrainOptions opt = separable_options(AdapterMode::hybrid, 11);
    opt.epochs = 4;
    Dataset ds = separable_dataset(100, opt.hidden, 11);

    TrainResult a = run_training(fresh_model(opt, ds), ds, opt);
    TrainResult b = run_training(fresh_model(opt, ds), ds, opt);
    REQUIRE(a.traces.size() == b.traces.size());
    for (std::size_t i = 0; i < a.traces.size(); ++i) {
        REQUIRE(a.traces[i].train_loss == b.traces[i].train_loss);
        REQUIRE(a.traces[i].val_loss == b.traces[i].val_loss);
        REQUIRE(a.traces[i].grad_norm == b.traces[i].grad_norm);
        REQUIRE(a.traces[i].max_drift == b.traces[i].max_drift);
        REQUIRE(a.traces[i].mix.size() == b.traces[i].mix.size());
        for (std::size_t l = 0; l < a.traces[i].mix.size(); ++l)
            REQUIRE(a.traces[i].mix[l].lambda == b.traces[i].mix[l].lambda);
    }
}

TEST_CASE("frozen base is bit-identical after training in every adapter mode") {
    const AdapterMode modes[] = {AdapterMode::lora, AdapterMode::lora_ga, AdapterMode::boft,
                                 AdapterMode::urnn, AdapterMode::hybrid};
    Dataset ds = separable_dataset(80, 16, 13);
    for (AdapterMode mode : modes) {
        TrainOptions opt = separable_options(mode, 13);
        opt.epochs = 3;
        ToyModel model = fresh_model(opt, ds);
        const std::uint64_t before = base_checksum(model);
        TrainResult r = run_training(std::move(model), ds, opt);
        INFO("mode " << to_string(mode));
        REQUIRE(base_checksum(r.model) == before);
    }
}

TEST_CASE("full mode changes the base; its checksum moves") {
    TrainOptions opt = separable_options(AdapterMode::full, 17);
    opt.epochs = 2;
    Dataset ds = separable_dataset(80, opt.hidden, 17);
    ToyModel model = fresh_model(opt, ds);
    const std::uint64_t before = base_checksum(model);
    TrainResult r = run_training(std::move(model), ds, opt);
    REQUIRE(base_checksum(r.model) != before);
}

TEST_CASE("per-step telemetry: one trace per step, one MixTrace per layer") {
    TrainOptions opt = separable_options(AdapterMode::hybrid, 19);
    opt.epochs = 2;
    Dataset ds = separable_dataset(64, opt.hidden, 19);
    TrainResult r = run_training(fresh_model(opt, ds), ds, opt);

    const std::size_t steps_per_epoch =
        (ds.train.size() + opt.batch_size - 1) / opt.batch_size;
    REQUIRE(r.traces.size() == steps_per_epoch * opt.epochs);
    for (std::size_t i = 0; i < r.traces.size(); ++i) {
        REQUIRE(r.traces[i].step == i + 1);
        REQUIRE(r.traces[i].mix.size() == opt.layers);
        REQUIRE(std::isfinite(r.traces[i].train_loss));
        REQUIRE(r.traces[i].max_drift <= 1e-6);
        for (const auto& m : r.traces[i].mix) {
            REQUIRE(m.lambda >= 0.0);
            REQUIRE(m.lambda <= 1.0);
        }
    }
}

TEST_CASE("divergence aborts with the diagnostic set") {
    TrainOptions opt = separable_options(AdapterMode::full, 23);
    opt.eta_full = 1e308;  // weights overflow, logits become NaN
    opt.epochs = 5;
    Dataset ds = separable_dataset(64, opt.hidden, 23);
    TrainResult r = run_training(fresh_model(opt, ds), ds, opt);
    REQUIRE(r.diverged);
    REQUIRE_FALSE(r.diagnostic.empty());
}

TEST_CASE("footprint: exact parameter counts per mode") {
    Dataset ds = separable_dataset(40, 64, 29);
    TrainOptions opt = separable_options(AdapterMode::lora, 29);
    opt.hidden = 64;
    opt.rank = 4;
    opt.layers = 2;
    opt.classes = 2;

    // lora: 2 * 64 * 4 trainable entries per adapted layer, plus the head
    ToyModel lora_model = fresh_model(opt, ds);
    FootprintRecord lora_rec = footprint_report(lora_model, ds, opt);
    REQUIRE(lora_rec.adapter_params == opt.layers * 2 * 64 * 4);
    REQUIRE(lora_rec.head_params == 2 * 64 + 2);
    REQUIRE(lora_rec.total_params == lora_rec.adapter_params + lora_rec.head_params);

    // hybrid: lora count plus d(d-1)/2 skew entries per layer
    opt.mode = AdapterMode::hybrid;
    ToyModel hybrid_model = fresh_model(opt, ds);
    FootprintRecord hybrid_rec = footprint_report(hybrid_model, ds, opt);
    REQUIRE(hybrid_rec.adapter_params ==
            lora_rec.adapter_params + opt.layers * (64 * 63) / 2);

    // full dominates every adapter mode on the same model
    opt.mode = AdapterMode::full;
    ToyModel full_model = fresh_model(opt, ds);
    FootprintRecord full_rec = footprint_report(full_model, ds, opt);
    REQUIRE(full_rec.adapter_params == opt.layers * 64 * 64);
    REQUIRE(full_rec.total_params > hybrid_rec.total_params);
    REQUIRE(full_rec.total_params > lora_rec.total_params);

    opt.mode = AdapterMode::boft;
    ToyModel boft_model = fresh_model(opt, ds);
    REQUIRE(footprint_report(boft_model, ds, opt).adapter_params ==
            opt.layers * 2 * 64 * opt.butterfly_depth);
    REQUIRE(full_rec.total_params > footprint_report(boft_model, ds, opt).total_params);

    opt.mode = AdapterMode::urnn;
    ToyModel urnn_model = fresh_model(opt, ds);
    REQUIRE(footprint_report(urnn_model, ds, opt).adapter_params ==
            opt.layers * (64 / 2) * (64 / 2));
    REQUIRE(full_rec.total_params > footprint_report(urnn_model, ds, opt).total_params);
}

TEST_CASE("unitary placement list restricts which layers carry U") {
    TrainOptions opt = separable_options(AdapterMode::urnn, 31);
    opt.layers = 3;
    opt.unitary_layers = {1};
    Dataset ds = separable_dataset(40, opt.hidden, 31);
    ToyModel model = fresh_model(opt, ds);
    REQUIRE(model.urnn[0].empty());
    REQUIRE_FALSE(model.urnn[1].empty());
    REQUIRE(model.urnn[2].empty());

    FootprintRecord rec = footprint_report(model, ds, opt);
    REQUIRE(rec.adapter_params == (opt.hidden / 2) * (opt.hidden / 2));
}

TEST_CASE("unitary mode keeps the composed operator on the manifold all run") {
    TrainOptions opt = separable_options(AdapterMode::urnn, 37);
    opt.epochs = 6;
    Dataset ds = separable_dataset(80, opt.hidden, 37);
    TrainResult r = run_training(fresh_model(opt, ds), ds, opt);
    for (const auto& t : r.traces) REQUIRE(t.max_drift <= 1e-8);
}

TEST_CASE("dataset featurization is identical for any worker count") {
    synth::GeneratorSpec spec;
    spec.docs = 80;
    spec.seed = 101;
    gov::Corpus corpus = synth::generate_corpus(spec).docs;
    Featurizer embed(32);
    Dataset one = build_dataset(corpus, embed, 0.2, 1);
    Dataset four = build_dataset(corpus, embed, 0.2, 4);
    REQUIRE(one.train.x == four.train.x);
    REQUIRE(one.val.x == four.val.x);
    REQUIRE(one.train.y == four.train.y);
}

TEST_CASE("train_on_corpus end to end on the synthetic task") {
    synth::GeneratorSpec spec;
    spec.docs = 240;
    spec.seed = 103;
    gov::Corpus corpus = synth::generate_corpus(spec).docs;

    TrainOptions opt;
    opt.mode = AdapterMode::hybrid;
    opt.seed = 103;
    opt.hidden = 32;
    opt.layers = 2;
    opt.epochs = 2;
    opt.warmup_epochs = 1;
    TrainResult r = train_on_corpus(corpus, opt);
    REQUIRE_FALSE(r.diverged);
    REQUIRE(r.traces.size() > 0);
    REQUIRE(std::isfinite(r.traces.back().val_loss));
}
