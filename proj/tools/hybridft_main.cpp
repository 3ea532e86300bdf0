// hybridft: govern -> train -> eval -> compare over the hybrid adapter pipeline.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hybridft/commands.hpp"

namespace {

using hybridft::cli::RunConfig;

void add_common_flags(CLI::App* cmd, RunConfig& cfg, std::string& config_file) {
    cmd->add_option("--config", config_file, "key=value config file; flags override it");
    cmd->add_option("--seed", cfg.seed, "run seed");
    cmd->add_option("--adapter-mode", cfg.adapter_mode,
                    "full|lora|lora_ga|boft|urnn|hybrid");
    cmd->add_option("--rank", cfg.rank, "LoRA rank r (>= 1)");
    cmd->add_option("--alpha", cfg.alpha, "LoRA scaling alpha");
    cmd->add_option("--lambda-cap", cfg.lambda_cap, "delta norm cap factor");
    cmd->add_option("--eta-lora", cfg.eta_lora, "low-rank branch learning rate");
    cmd->add_option("--eta-boft", cfg.eta_boft, "orthogonal branch learning rate");
    cmd->add_option("--eta-full", cfg.eta_full, "full-FT / head learning rate");
    cmd->add_option("--epochs", cfg.epochs, "training epochs E");
    cmd->add_option("--batch-size", cfg.batch_size, "minibatch size");
    cmd->add_option("--warmup-epochs", cfg.warmup_epochs, "full-FT warmup epochs");
    cmd->add_option("--butterfly-depth", cfg.butterfly_depth, "BOFT depth m");
    cmd->add_option("--hidden-dim", cfg.hidden_dim, "hidden width (power of two)");
    cmd->add_option("--layers", cfg.layers, "hidden layer count");
    cmd->add_option("--classes", cfg.classes, "label count");
    cmd->add_option("--unitary-layers", cfg.unitary_layers,
                    "comma list of layer indices carrying the unitary adapter");
    cmd->add_option("--val-fraction", cfg.val_fraction, "validation split fraction");
    cmd->add_option("--workers", cfg.workers, "featurization worker threads");
    cmd->add_option("--governance-stage", cfg.governance_stage, "C0|C1|C2");
    cmd->add_option("--min-chars", cfg.min_chars, "quality filter: minimum length");
    cmd->add_option("--max-chars", cfg.max_chars, "quality filter: maximum length");
    cmd->add_option("--entropy-floor", cfg.entropy_floor, "quality filter: entropy floor");
    cmd->add_option("--ppl-ceiling", cfg.ppl_ceiling,
                    "quality filter: perplexity ceiling (0 = auto)");
    cmd->add_option("--dedup-threshold", cfg.dedup_threshold, "simhash Hamming threshold");
    cmd->add_option("--ece-bins", cfg.ece_bins, "calibration bin count");
    cmd->add_flag("--robustness,!--no-robustness", cfg.robustness,
                  "include the perturbation section in eval reports");
    cmd->add_option("--corpus", cfg.corpus_path, "input corpus (JSON lines)");
    cmd->add_option("--staged", cfg.staged_path, "staged corpus path");
    cmd->add_option("--audit", cfg.audit_path, "audit report path");
    cmd->add_option("--checkpoint", cfg.checkpoint_path, "checkpoint path");
    cmd->add_option("--trace", cfg.trace_path, "trace path (JSON lines)");
    cmd->add_option("--report", cfg.report_path, "eval report path");
    cmd->add_option("--eval-corpus", cfg.eval_corpus_path, "held-out eval corpus");
}

// Config file provides the base; flags given explicitly on the command line
// override it field by field.
RunConfig merge_config(const CLI::App* active, const RunConfig& flag_cfg,
                       const std::string& config_file) {
    if (config_file.empty()) return flag_cfg;
    RunConfig merged = hybridft::cli::load_config_file(config_file);
    auto replay = [&](const std::string& flag, auto field) {
        const CLI::Option* opt = active->get_option_no_throw(flag);
        if (opt != nullptr && opt->count() > 0) merged.*field = flag_cfg.*field;
    };
    replay("--seed", &RunConfig::seed);
    replay("--adapter-mode", &RunConfig::adapter_mode);
    replay("--rank", &RunConfig::rank);
    replay("--alpha", &RunConfig::alpha);
    replay("--lambda-cap", &RunConfig::lambda_cap);
    replay("--eta-lora", &RunConfig::eta_lora);
    replay("--eta-boft", &RunConfig::eta_boft);
    replay("--eta-full", &RunConfig::eta_full);
    replay("--epochs", &RunConfig::epochs);
    replay("--batch-size", &RunConfig::batch_size);
    replay("--warmup-epochs", &RunConfig::warmup_epochs);
    replay("--butterfly-depth", &RunConfig::butterfly_depth);
    replay("--hidden-dim", &RunConfig::hidden_dim);
    replay("--layers", &RunConfig::layers);
    replay("--classes", &RunConfig::classes);
    replay("--unitary-layers", &RunConfig::unitary_layers);
    replay("--val-fraction", &RunConfig::val_fraction);
    replay("--workers", &RunConfig::workers);
    replay("--governance-stage", &RunConfig::governance_stage);
    replay("--min-chars", &RunConfig::min_chars);
    replay("--max-chars", &RunConfig::max_chars);
    replay("--entropy-floor", &RunConfig::entropy_floor);
    replay("--ppl-ceiling", &RunConfig::ppl_ceiling);
    replay("--dedup-threshold", &RunConfig::dedup_threshold);
    replay("--ece-bins", &RunConfig::ece_bins);
    replay("--robustness", &RunConfig::robustness);
    replay("--corpus", &RunConfig::corpus_path);
    replay("--staged", &RunConfig::staged_path);
    replay("--audit", &RunConfig::audit_path);
    replay("--checkpoint", &RunConfig::checkpoint_path);
    replay("--trace", &RunConfig::trace_path);
    replay("--report", &RunConfig::report_path);
    replay("--eval-corpus", &RunConfig::eval_corpus_path);
    return merged;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid parameter-efficient fine-tuning pipeline"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_file;
    std::vector<std::string> compare_traces;
    std::string compare_out;

    CLI::App* govern = app.add_subcommand("govern", "run the curation stages");
    CLI::App* train = app.add_subcommand("train", "train with the configured adapter");
    CLI::App* eval = app.add_subcommand("eval", "score a checkpoint");
    CLI::App* compare = app.add_subcommand("compare", "align traces into a table");
    compare->add_option("traces", compare_traces, "trace files")->required();
    compare->add_option("--out", compare_out, "write the table here instead of stdout");

    for (CLI::App* cmd : {govern, train, eval}) add_common_flags(cmd, cfg, config_file);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : hybridft::cli::kExitUsage;
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        const RunConfig merged =
            compare->parsed() ? cfg : merge_config(active, cfg, config_file);

        if (govern->parsed()) return hybridft::cli::cmd_govern(merged);
        if (train->parsed()) return hybridft::cli::cmd_train(merged);
        if (eval->parsed()) return hybridft::cli::cmd_eval(merged);
        if (compare->parsed()) {
            if (compare_out.empty())
                return hybridft::cli::cmd_compare(compare_traces, std::cout);
            return hybridft::cli::cmd_compare_to_file(compare_traces, compare_out);
        }
        return hybridft::cli::kExitUsage;
    } catch (const hybridft::data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hybridft::cli::kExitData;
    } catch (const hybridft::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return hybridft::cli::kExitNumerical;
    } catch (const hybridft::singularity_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return hybridft::cli::kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hybridft::cli::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hybridft::cli::kExitData;
    }
}
