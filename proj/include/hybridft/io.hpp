#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridft/document.hpp"
#include "hybridft/error.hpp"
#include "hybridft/evalkit.hpp"
#include "hybridft/governance.hpp"
#include "hybridft/trainer.hpp"

namespace hybridft::cli {

using ordered_json = nlohmann::ordered_json;

// Atomic file write: everything goes to <path>.tmp and is renamed into place,
// so failed commands leave no partial outputs.
class AtomicWriter {
  public:
    explicit AtomicWriter(const std::string& path)
        : path_(path), tmp_(path + ".tmp"), out_(tmp_, std::ios::binary) {
        if (!out_) throw data_error("cannot open for writing: " + tmp_);
    }
    ~AtomicWriter() {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }
    std::ofstream& stream() { return out_; }
    void commit() {
        out_.flush();
        if (!out_) throw data_error("write failed: " + tmp_);
        out_.close();
        std::filesystem::rename(tmp_, path_);
        committed_ = true;
    }

  private:
    std::string path_, tmp_;
    std::ofstream out_;
    bool committed_ = false;
};

// ---------------------------------------------------------------------------
// corpus: UTF-8 line-delimited records {"id", "text", "lang"?, "label"?}
// ---------------------------------------------------------------------------

inline gov::Corpus read_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open corpus: " + path);
    gov::Corpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("text"))
            throw data_error("corpus line " + std::to_string(lineno) + ": malformed record");
        gov::Document d;
        d.id = j["id"].get<std::string>();
        d.text = j["text"].get<std::string>();
        if (j.contains("lang") && j["lang"].is_string()) d.lang = j["lang"].get<std::string>();
        if (j.contains("label") && j["label"].is_number_integer())
            d.label = j["label"].get<int>();
        corpus.push_back(std::move(d));
    }
    return corpus;
}

inline void write_corpus(const gov::Corpus& corpus, const std::string& path) {
    AtomicWriter w(path);
    for (const gov::Document& d : corpus) {
        ordered_json j;
        j["id"] = d.id;
        j["text"] = d.text;
        if (!d.lang.empty()) j["lang"] = d.lang;
        if (d.label >= 0) j["label"] = d.label;
        w.stream() << j.dump() << "\n";
    }
    w.commit();
}

// ---------------------------------------------------------------------------
// audit: structured text with fixed key order
// ---------------------------------------------------------------------------

inline void write_audit(const gov::StageAudit& audit, const std::string& stage,
                        const std::string& path) {
    ordered_json j;
    j["stage"] = stage;
    j["input_docs"] = audit.input_docs;
    j["after_c0"] = audit.after_c0;
    j["after_dedup"] = audit.after_dedup;
    j["after_quality"] = audit.after_quality;
    j["dedup_removed"] = audit.dedup_removed;
    j["quality_rejected"] = audit.quality_rejected;
    j["applied_ppl_ceiling"] = audit.applied_ppl_ceiling;
    j["per_language"] = ordered_json::object();
    for (const auto& [lang, n] : audit.per_language) j["per_language"][lang] = n;
    j["rejection_reasons"] = ordered_json::object();
    for (const auto& [reason, n] : audit.rejection_reasons) j["rejection_reasons"][reason] = n;
    AtomicWriter w(path);
    w.stream() << j.dump(2) << "\n";
    w.commit();
}

// ---------------------------------------------------------------------------
// trace: one JSON record per training step
// ---------------------------------------------------------------------------

inline void write_traces(const std::vector<train::TrainTrace>& traces, const std::string& path) {
    AtomicWriter w(path);
    for (const train::TrainTrace& t : traces) {
        ordered_json j;
        j["step"] = t.step;
        j["epoch"] = t.epoch;
        j["train_loss"] = t.train_loss;
        j["val_loss"] = t.val_loss;
        j["grad_norm"] = t.grad_norm;
        j["max_drift"] = t.max_drift;
        ordered_json mix = ordered_json::array();
        for (const auto& m : t.mix) {
            ordered_json e;
            e["layer"] = m.layer;
            e["step"] = m.step;
            e["g_lora"] = m.g_lora;
            e["g_boft"] = m.g_boft;
            e["lambda"] = m.lambda;
            mix.push_back(std::move(e));
        }
        j["mix"] = std::move(mix);
        w.stream() << j.dump() << "\n";
    }
    w.commit();
}

inline std::vector<train::TrainTrace> read_traces(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open trace: " + path);
    std::vector<train::TrainTrace> traces;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("step") || !j.contains("train_loss") ||
            !j.contains("val_loss") || !j.contains("grad_norm"))
            throw data_error("trace " + path + " line " + std::to_string(lineno) +
                             ": schema mismatch");
        train::TrainTrace t;
        t.step = j["step"].get<std::size_t>();
        t.epoch = j.value("epoch", std::size_t{0});
        t.train_loss = j["train_loss"].get<double>();
        t.val_loss = j["val_loss"].get<double>();
        t.grad_norm = j["grad_norm"].get<double>();
        t.max_drift = j.value("max_drift", 0.0);
        if (j.contains("mix")) {
            for (const auto& e : j["mix"]) {
                fusion::MixTrace m;
                m.layer = e.value("layer", std::size_t{0});
                m.step = e.value("step", std::size_t{0});
                m.g_lora = e.value("g_lora", 0.0);
                m.g_boft = e.value("g_boft", 0.0);
                m.lambda = e.value("lambda", 0.5);
                t.mix.push_back(m);
            }
        }
        traces.push_back(std::move(t));
    }
    return traces;
}

// ---------------------------------------------------------------------------
// eval report: structured text with fixed key order
// ---------------------------------------------------------------------------

inline void write_report(const eval::EvalReport& r, const std::string& path) {
    ordered_json j;
    j["per_language_accuracy"] = ordered_json::object();
    for (const auto& [lang, a] : r.per_language_accuracy)
        j["per_language_accuracy"][lang] = a;
    j["macro_accuracy"] = r.macro_accuracy;
    j["parity_gap"] = r.parity_gap;
    j["avg_ece"] = r.avg_ece;
    j["robustness_drops"] = ordered_json::object();
    for (const auto& [kind, drop] : r.robustness_drops) j["robustness_drops"][kind] = drop;
    AtomicWriter w(path);
    w.stream() << j.dump(2) << "\n";
    w.commit();
}

inline eval::EvalReport read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open report: " + path);
    nlohmann::json j;
    in >> j;
    eval::EvalReport r;
    for (const auto& [lang, a] : j["per_language_accuracy"].items())
        r.per_language_accuracy[lang] = a.get<double>();
    r.macro_accuracy = j["macro_accuracy"].get<double>();
    r.parity_gap = j["parity_gap"].get<double>();
    r.avg_ece = j["avg_ece"].get<double>();
    if (j.contains("robustness_drops"))
        for (const auto& [kind, drop] : j["robustness_drops"].items())
            r.robustness_drops[kind] = drop.get<double>();
    return r;
}

}  // namespace hybridft::cli
