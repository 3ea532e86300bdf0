#pragma once

#include <iostream>
#include <string>
#include <vector>

#include "hybridft/checkpoint.hpp"
#include "hybridft/config.hpp"
#include "hybridft/evalkit.hpp"
#include "hybridft/io.hpp"
#include "hybridft/trainer.hpp"

namespace hybridft::cli {

// exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// govern: run the requested curation stage over the input corpus and write
// the staged corpus plus its audit
inline int cmd_govern(RunConfig cfg, std::ostream& log = std::cout) {
    validate(cfg, {cfg.corpus_path});
    if (cfg.staged_path.empty() || cfg.audit_path.empty())
        throw data_error("govern: staged_path and audit_path must be set");

    const gov::Corpus corpus = read_corpus(cfg.corpus_path);
    const gov::Stage stage = gov::stage_from_string(cfg.governance_stage);

    gov::LidModel lid;
    const gov::LidModel* lid_ptr = nullptr;
    if (stage != gov::Stage::C0) {
        // profiles come from the corpus's own language-labeled subset
        lid = gov::lid_train(corpus);
        lid_ptr = &lid;
    }
    gov::QualityPolicy policy;
    policy.min_chars = cfg.min_chars;
    policy.max_chars = cfg.max_chars;
    policy.entropy_floor = cfg.entropy_floor;
    policy.ppl_ceiling = cfg.ppl_ceiling;

    auto [staged, audit] = gov::run_stages(corpus, stage, lid_ptr, policy, cfg.dedup_threshold);
    write_corpus(staged, resolve_output_path(cfg.staged_path));
    write_audit(audit, cfg.governance_stage, resolve_output_path(cfg.audit_path));
    log << "govern: " << corpus.size() << " -> " << staged.size() << " docs at stage "
        << cfg.governance_stage << "\n";
    return kExitOk;
}

// train: warm up the frozen base, attach the adapter family, run the epochs,
// write the checkpoint and the per-step trace
inline int cmd_train(RunConfig cfg, std::ostream& log = std::cout) {
    const std::string input =
        !cfg.staged_path.empty() && std::filesystem::exists(cfg.staged_path)
            ? cfg.staged_path
            : cfg.corpus_path;
    validate(cfg, {input});
    if (cfg.checkpoint_path.empty() || cfg.trace_path.empty())
        throw data_error("train: checkpoint_path and trace_path must be set");

    const gov::Corpus corpus = read_corpus(input);
    const train::TrainOptions opt = to_train_options(cfg);
    const std::string hash = config_hash(cfg);

    train::TrainResult result = train::train_on_corpus(corpus, opt);
    const std::size_t steps = result.traces.size();

    save_checkpoint(result.model, hash, steps, resolve_output_path(cfg.checkpoint_path));
    write_traces(result.traces, resolve_output_path(cfg.trace_path));

    if (result.diverged || result.drift_abort) {
        log << "train: aborted (" << result.diagnostic << "); last-good checkpoint kept\n";
        return kExitNumerical;
    }

    train::Dataset ds = train::build_dataset(corpus, result.model.embed, cfg.val_fraction,
                                             cfg.workers);
    const train::FootprintRecord fp =
        train::footprint_report(result.model, ds, opt, /*measure_time=*/true);
    log << "train: " << steps << " steps, mode " << fp.mode << ", tunable "
        << fp.total_params << " (head " << fp.head_params << " + adapters "
        << fp.adapter_params << "), " << fp.step_seconds << " s/step\n";
    return kExitOk;
}

// eval: score a checkpointed model on a labeled corpus; optional robustness
// section; writes the fixed-key-order report
inline int cmd_eval(RunConfig cfg, std::ostream& log = std::cout) {
    const std::string eval_input =
        cfg.eval_corpus_path.empty() ? cfg.corpus_path : cfg.eval_corpus_path;
    validate(cfg, {eval_input, cfg.checkpoint_path});
    if (cfg.report_path.empty()) throw data_error("eval: report_path must be set");

    const CheckpointData ckpt = read_checkpoint(cfg.checkpoint_path);
    const train::ToyModel model = model_from_checkpoint(ckpt);
    const gov::Corpus testset = read_corpus(eval_input);

    const std::vector<eval::Prediction> preds = eval::evaluate_model(model, testset);
    if (preds.empty()) throw data_error("eval: no labeled documents in " + eval_input);
    eval::EvalReport report = eval::eval_report(preds, cfg.ece_bins);
    if (cfg.robustness) report.robustness_drops = eval::robustness_eval(model, testset);

    write_report(report, resolve_output_path(cfg.report_path));
    log << "eval: macro " << report.macro_accuracy << ", parity gap " << report.parity_gap
        << ", avg ece " << report.avg_ece << "\n";
    return kExitOk;
}

// compare: align traces by step and emit a plot-ready tab-separated table
inline int cmd_compare(const std::vector<std::string>& trace_paths, std::ostream& out) {
    if (trace_paths.empty()) throw data_error("compare: need at least one trace file");
    std::vector<std::vector<train::TrainTrace>> all;
    for (const std::string& p : trace_paths) all.push_back(read_traces(p));

    std::size_t common = all[0].size();
    for (const auto& t : all) common = std::min(common, t.size());

    out << "step";
    for (const std::string& p : trace_paths) {
        const std::string base = std::filesystem::path(p).stem().string();
        out << "\t" << base << ".train_loss\t" << base << ".val_loss\t" << base
            << ".grad_norm";
    }
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < common; ++i) {
        out << all[0][i].step;
        for (const auto& t : all)
            out << "\t" << t[i].train_loss << "\t" << t[i].val_loss << "\t" << t[i].grad_norm;
        out << "\n";
    }
    return kExitOk;
}

inline int cmd_compare_to_file(const std::vector<std::string>& trace_paths,
                               const std::string& out_path) {
    AtomicWriter w(resolve_output_path(out_path));
    const int rc = cmd_compare(trace_paths, w.stream());
    w.commit();
    return rc;
}

}  // namespace hybridft::cli
