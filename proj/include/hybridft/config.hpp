#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hybridft/error.hpp"
#include "hybridft/governance.hpp"
#include "hybridft/trainer.hpp"

namespace hybridft::cli {

// Every knob of a run.  Flat key=value config files (with optional [section]
// headers, cosmetic only) and CLI flags both map onto these fields.
struct RunConfig {
    // run
    std::uint64_t seed = 1;
    std::string adapter_mode = "hybrid";
    std::size_t rank = 4;              // >= 1, <= hidden_dim
    double alpha = 8.0;                // > 0
    double lambda_cap = 1.0;           // > 0
    double eta_lora = 5e-3;            // > 0
    double eta_boft = 1e-3;            // > 0
    double eta_full = 0.05;            // > 0; warmup and task head
    std::size_t epochs = 3;
    std::size_t batch_size = 16;       // >= 1
    std::size_t warmup_epochs = 2;
    std::size_t butterfly_depth = 3;   // >= 1
    std::size_t hidden_dim = 32;       // power of two >= 4
    std::size_t layers = 2;            // >= 1
    std::size_t classes = 4;           // >= 2
    std::string unitary_layers;        // comma list of layer indices; empty = all
    double val_fraction = 0.2;         // [0, 0.9]
    double ga_init_scale = 1.0;        // >= 0
    std::size_t workers = 1;           // >= 1

    // governance
    std::string governance_stage = "C2";
    std::size_t min_chars = 16;
    std::size_t max_chars = 65536;
    double entropy_floor = 0.2;
    double ppl_ceiling = 0.0;          // 0 = derive from the corpus
    std::size_t dedup_threshold = 3;

    // eval
    std::size_t ece_bins = 10;
    bool robustness = true;

    // paths
    std::string corpus_path;
    std::string staged_path;
    std::string audit_path;
    std::string checkpoint_path;
    std::string trace_path;
    std::string report_path;
    std::string eval_corpus_path;
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// Canonical serialization: fixed key order, normalized numeric formatting.
// Two configs that parse to the same values serialize identically, so the
// hash is stable under reordering and spelling differences in the source.
inline std::string canonical_string(const RunConfig& c) {
    std::ostringstream out;
    auto kv = [&out](const char* k, const std::string& v) { out << k << "=" << v << "\n"; };
    kv("adapter_mode", c.adapter_mode);
    kv("alpha", detail::fmt_double(c.alpha));
    kv("audit_path", c.audit_path);
    kv("batch_size", std::to_string(c.batch_size));
    kv("butterfly_depth", std::to_string(c.butterfly_depth));
    kv("checkpoint_path", c.checkpoint_path);
    kv("classes", std::to_string(c.classes));
    kv("corpus_path", c.corpus_path);
    kv("dedup_threshold", std::to_string(c.dedup_threshold));
    kv("ece_bins", std::to_string(c.ece_bins));
    kv("entropy_floor", detail::fmt_double(c.entropy_floor));
    kv("epochs", std::to_string(c.epochs));
    kv("eta_boft", detail::fmt_double(c.eta_boft));
    kv("eta_full", detail::fmt_double(c.eta_full));
    kv("eta_lora", detail::fmt_double(c.eta_lora));
    kv("eval_corpus_path", c.eval_corpus_path);
    kv("ga_init_scale", detail::fmt_double(c.ga_init_scale));
    kv("governance_stage", c.governance_stage);
    kv("hidden_dim", std::to_string(c.hidden_dim));
    kv("lambda_cap", detail::fmt_double(c.lambda_cap));
    kv("layers", std::to_string(c.layers));
    kv("max_chars", std::to_string(c.max_chars));
    kv("min_chars", std::to_string(c.min_chars));
    kv("ppl_ceiling", detail::fmt_double(c.ppl_ceiling));
    kv("rank", std::to_string(c.rank));
    kv("report_path", c.report_path);
    kv("robustness", c.robustness ? "1" : "0");
    kv("seed", std::to_string(c.seed));
    kv("staged_path", c.staged_path);
    kv("trace_path", c.trace_path);
    kv("unitary_layers", c.unitary_layers);
    kv("val_fraction", detail::fmt_double(c.val_fraction));
    kv("warmup_epochs", std::to_string(c.warmup_epochs));
    kv("workers", std::to_string(c.workers));
    return out.str();
}

inline std::string config_hash(const RunConfig& c) {
    const std::string s = canonical_string(c);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline void apply_key(RunConfig& c, const std::string& key, const std::string& value) {
    auto to_u64 = [&](const std::string& v) -> std::uint64_t {
        try {
            return std::stoull(v);
        } catch (...) {
            throw data_error("config: bad integer for " + key + ": " + v);
        }
    };
    auto to_dbl = [&](const std::string& v) -> double {
        try {
            return std::stod(v);
        } catch (...) {
            throw data_error("config: bad number for " + key + ": " + v);
        }
    };
    if (key == "seed") c.seed = to_u64(value);
    else if (key == "adapter_mode") c.adapter_mode = value;
    else if (key == "rank") c.rank = to_u64(value);
    else if (key == "alpha") c.alpha = to_dbl(value);
    else if (key == "lambda_cap") c.lambda_cap = to_dbl(value);
    else if (key == "eta_lora") c.eta_lora = to_dbl(value);
    else if (key == "eta_boft") c.eta_boft = to_dbl(value);
    else if (key == "eta_full") c.eta_full = to_dbl(value);
    else if (key == "epochs") c.epochs = to_u64(value);
    else if (key == "batch_size") c.batch_size = to_u64(value);
    else if (key == "warmup_epochs") c.warmup_epochs = to_u64(value);
    else if (key == "butterfly_depth") c.butterfly_depth = to_u64(value);
    else if (key == "hidden_dim") c.hidden_dim = to_u64(value);
    else if (key == "layers") c.layers = to_u64(value);
    else if (key == "classes") c.classes = to_u64(value);
    else if (key == "unitary_layers") c.unitary_layers = value;
    else if (key == "val_fraction") c.val_fraction = to_dbl(value);
    else if (key == "ga_init_scale") c.ga_init_scale = to_dbl(value);
    else if (key == "workers") c.workers = to_u64(value);
    else if (key == "governance_stage") c.governance_stage = value;
    else if (key == "min_chars") c.min_chars = to_u64(value);
    else if (key == "max_chars") c.max_chars = to_u64(value);
    else if (key == "entropy_floor") c.entropy_floor = to_dbl(value);
    else if (key == "ppl_ceiling") c.ppl_ceiling = to_dbl(value);
    else if (key == "dedup_threshold") c.dedup_threshold = to_u64(value);
    else if (key == "ece_bins") c.ece_bins = to_u64(value);
    else if (key == "robustness") c.robustness = value == "1" || value == "true";
    else if (key == "corpus_path") c.corpus_path = value;
    else if (key == "staged_path") c.staged_path = value;
    else if (key == "audit_path") c.audit_path = value;
    else if (key == "checkpoint_path") c.checkpoint_path = value;
    else if (key == "trace_path") c.trace_path = value;
    else if (key == "report_path") c.report_path = value;
    else if (key == "eval_corpus_path") c.eval_corpus_path = value;
    else throw data_error("config: unknown key " + key);
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw data_error("config: cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') continue;  // section header
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw data_error("config: line " + std::to_string(lineno) + " has no '='");
        apply_key(base, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
    return base;
}

inline std::vector<std::size_t> parse_index_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::string cur;
    for (char ch : s + ",") {
        if (ch == ',') {
            const std::string t = detail::trim(cur);
            if (!t.empty()) out.push_back(std::stoull(t));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    return out;
}

// Numeric ranges plus existence of input paths the command will read.
inline void validate(const RunConfig& c, const std::vector<std::string>& required_inputs) {
    if (c.rank < 1 || c.rank > c.hidden_dim)
        throw data_error("config: rank must be in [1, hidden_dim]");
    if (c.butterfly_depth < 1) throw data_error("config: butterfly_depth must be >= 1");
    if (c.layers < 1) throw data_error("config: layers must be >= 1");
    if (c.classes < 2) throw data_error("config: classes must be >= 2");
    if (c.batch_size < 1) throw data_error("config: batch_size must be >= 1");
    if (c.workers < 1) throw data_error("config: workers must be >= 1");
    if (c.hidden_dim < 4 || (c.hidden_dim & (c.hidden_dim - 1)) != 0)
        throw data_error("config: hidden_dim must be a power of two >= 4");
    if (c.alpha <= 0 || c.lambda_cap <= 0 || c.eta_lora <= 0 || c.eta_boft <= 0 ||
        c.eta_full <= 0)
        throw data_error("config: alpha, lambda_cap, and learning rates must be positive");
    if (c.val_fraction < 0 || c.val_fraction > 0.9)
        throw data_error("config: val_fraction must be in [0, 0.9]");
    if (c.ece_bins < 1) throw data_error("config: ece_bins must be >= 1");
    if (c.ga_init_scale < 0) throw data_error("config: ga_init_scale must be >= 0");
    train::adapter_mode_from_string(c.adapter_mode);   // throws on bad mode
    gov::stage_from_string(c.governance_stage);        // throws on bad stage
    for (const std::string& p : required_inputs)
        if (p.empty() || !std::filesystem::exists(p))
            throw data_error("config: required input path missing: " +
                             (p.empty() ? std::string("(unset)") : p));
}

inline train::TrainOptions to_train_options(const RunConfig& c) {
    train::TrainOptions opt;
    opt.mode = train::adapter_mode_from_string(c.adapter_mode);
    opt.seed = c.seed;
    opt.hidden = c.hidden_dim;
    opt.layers = c.layers;
    opt.classes = c.classes;
    opt.rank = c.rank;
    opt.alpha = c.alpha;
    opt.lambda_cap = c.lambda_cap;
    opt.eta_lora = c.eta_lora;
    opt.eta_boft = c.eta_boft;
    opt.eta_full = c.eta_full;
    opt.butterfly_depth = c.butterfly_depth;
    opt.epochs = c.epochs;
    opt.batch_size = c.batch_size;
    opt.warmup_epochs = c.warmup_epochs;
    opt.val_fraction = c.val_fraction;
    opt.ga_init_scale = c.ga_init_scale;
    opt.unitary_layers = parse_index_list(c.unitary_layers);
    opt.workers = c.workers;
    return opt;
}

// HYBRIDFT_OUT_DIR redirects relative output paths; the only environment knob.
inline std::string resolve_output_path(const std::string& path) {
    if (path.empty()) return path;
    const char* out_dir = std::getenv("HYBRIDFT_OUT_DIR");
    if (out_dir == nullptr || path.front() == '/') return path;
    return std::string(out_dir) + "/" + path;
}

}  // namespace hybridft::cli
