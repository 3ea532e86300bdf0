// corpusgen: emit a synthetic multilingual topic corpus as JSON lines.
#include <iostream>

#include <CLI11.hpp>

#include "hybridft/io.hpp"
#include "hybridft/synthdata.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthetic multilingual corpus generator"};

    hybridft::synth::GeneratorSpec spec;
    std::string out_path;
    app.add_option("--docs", spec.docs, "document count");
    app.add_option("--seed", spec.seed, "generator seed");
    app.add_option("--dup-rate", spec.dup_rate, "planted near-duplicate fraction");
    app.add_option("--gibberish-rate", spec.gibberish_rate, "planted junk fraction");
    app.add_option("--ortho-noise", spec.ortho_noise, "orthographic noise level [0,1]");
    app.add_option("--min-words", spec.min_words, "minimum words per document");
    app.add_option("--max-words", spec.max_words, "maximum words per document");
    app.add_option("--out", out_path, "output corpus path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        hybridft::synth::GeneratedCorpus g = hybridft::synth::generate_corpus(spec);
        hybridft::cli::write_corpus(g.docs, out_path);
        std::cout << "wrote " << g.docs.size() << " docs (" << g.planted_dup_ids.size()
                  << " near-dupes, " << g.planted_gibberish_ids.size() << " junk) to "
                  << out_path << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
