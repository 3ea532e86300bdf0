#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "hybridft/document.hpp"
#include "hybridft/governance.hpp"
#include "hybridft/rng.hpp"

namespace hybridft::synth {

// Synthetic multilingual topic-classification corpus: three disjoint-script
// "languages" (lx = Latin range, cj = CJK range, dv = Devanagari range) by
// four topic classes, generated from seeded character-level templates.
// Deliberate corpus defects (near-duplicates, gibberish with random labels,
// orthographic noise) exercise the curation and robustness pipelines.

inline const std::vector<std::string>& language_codes() {
    static const std::vector<std::string> codes{"lx", "cj", "dv"};
    return codes;
}

inline constexpr std::size_t kNumClasses = 4;

struct GeneratorSpec {
    std::size_t docs = 300;
    std::uint64_t seed = 1;
    double dup_rate = 0.0;        // fraction of docs planted as near-duplicates
    double gibberish_rate = 0.0;  // fraction of docs planted as gibberish
    double ortho_noise = 0.0;     // per-doc probability of orthographic noise
    std::size_t min_words = 30;
    std::size_t max_words = 80;
};

struct GeneratedCorpus {
    gov::Corpus docs;
    std::vector<std::string> planted_dup_ids;
    std::vector<std::string> planted_gibberish_ids;
};

namespace detail {

inline void append_codepoint(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

struct ScriptRange {
    std::uint32_t base;
    std::uint32_t span;
};

inline ScriptRange script_range(const std::string& lang) {
    if (lang == "lx") return {0x61, 26};     // a..z
    if (lang == "cj") return {0x4E00, 160};  // CJK unified ideographs
    return {0x0905, 40};                     // Devanagari letters
}

inline std::string random_word(const std::string& lang, Rng& rng, std::size_t min_len,
                               std::size_t max_len) {
    const ScriptRange range = script_range(lang);
    const std::size_t len = min_len + rng.uniform_index(max_len - min_len + 1);
    std::string w;
    for (std::size_t i = 0; i < len; ++i)
        append_codepoint(w, range.base + static_cast<std::uint32_t>(rng.uniform_index(range.span)));
    return w;
}

// word inventories per language: shared filler words plus per-class topic words
struct LanguageTemplates {
    std::vector<std::string> common;
    std::vector<std::vector<std::string>> topic;  // [class][word]
};

inline LanguageTemplates build_templates(const std::string& lang, Rng rng) {
    LanguageTemplates t;
    for (int i = 0; i < 48; ++i) t.common.push_back(random_word(lang, rng, 2, 6));
    t.topic.resize(kNumClasses);
    for (std::size_t c = 0; c < kNumClasses; ++c)
        for (int i = 0; i < 10; ++i) t.topic[c].push_back(random_word(lang, rng, 3, 7));
    return t;
}

// accented Latin letters so diacritics stripping has something to act on
inline const std::vector<std::uint32_t>& accented_latin() {
    static const std::vector<std::uint32_t> cps{0xE9, 0xE0, 0xFC, 0xF1, 0xE7, 0xF6};
    return cps;
}

inline std::string make_text(const LanguageTemplates& t, const std::string& lang,
                             std::size_t cls, std::size_t words, double ortho_noise,
                             Rng& rng) {
    // every corpus carries some curly punctuation, dashes, and accents so the
    // orthographic perturbation operators have something to act on;
    // ortho_noise amplifies those rates and adds whitespace damage
    const double p_space_noise = 0.02 + 0.3 * ortho_noise;
    const double p_quote = 0.04 + 0.15 * ortho_noise;
    const double p_dash = 0.03 + 0.1 * ortho_noise;
    std::string text;
    for (std::size_t w = 0; w < words; ++w) {
        if (w > 0) text += rng.uniform() < p_space_noise ? "  " : " ";
        std::string word = rng.uniform() < 0.35
                               ? t.topic[cls][rng.uniform_index(t.topic[cls].size())]
                               : t.common[rng.uniform_index(t.common.size())];
        if (lang == "lx" && rng.uniform() < 0.08) {
            // swap one letter for an accented variant
            const std::size_t pos = rng.uniform_index(word.size());
            std::string replaced = word.substr(0, pos);
            append_codepoint(replaced, accented_latin()[rng.uniform_index(accented_latin().size())]);
            if (pos + 1 < word.size()) replaced += word.substr(pos + 1);
            word = std::move(replaced);
        }
        text += word;
        const double roll = rng.uniform();
        if (roll < p_quote) {
            std::string quoted;
            append_codepoint(quoted, 0x201C);
            quoted += t.common[rng.uniform_index(t.common.size())];
            append_codepoint(quoted, 0x201D);
            text += ' ';
            text += quoted;
        } else if (roll < p_quote + p_dash) {
            append_codepoint(text, 0x2014);
        } else if (roll < p_quote + p_dash + 0.1) {
            text += '.';
        }
    }
    return text;
}

inline std::string gibberish_text(std::size_t words, Rng& rng) {
    std::string text;
    const char* langs[3] = {"lx", "cj", "dv"};
    for (std::size_t w = 0; w < words; ++w) {
        if (w > 0) text += ' ';
        const ScriptRange range = script_range(langs[rng.uniform_index(3)]);
        const std::size_t len = 2 + rng.uniform_index(7);
        for (std::size_t i = 0; i < len; ++i)
            append_codepoint(text,
                             range.base + static_cast<std::uint32_t>(rng.uniform_index(range.span)));
    }
    return text;
}

}  // namespace detail

inline std::size_t simhash_distance_of_texts(const std::string& a, const std::string& b) {
    return gov::hamming_distance(gov::simhash(a).bits, gov::simhash(b).bits);
}

inline GeneratedCorpus generate_corpus(const GeneratorSpec& spec) {
    Rng rng(spec.seed);
    GeneratedCorpus out;

    std::vector<detail::LanguageTemplates> templates;
    for (const std::string& lang : language_codes())
        templates.push_back(detail::build_templates(lang, rng.fork(0x7e11 + templates.size())));

    // per-language class-signal strength: dv carries the weakest topic signal
    // so per-language accuracies spread and the parity gap is nonzero
    std::size_t counter = 0;
    auto next_id = [&counter, &spec]() {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "d%06zu-%llu", counter++,
                      static_cast<unsigned long long>(spec.seed & 0xFFFF));
        return std::string(buf);
    };

    const std::size_t n_gib = static_cast<std::size_t>(spec.gibberish_rate * spec.docs);
    const std::size_t n_dup = static_cast<std::size_t>(spec.dup_rate * spec.docs);
    const std::size_t n_clean = spec.docs - n_gib - n_dup;

    for (std::size_t i = 0; i < n_clean; ++i) {
        const std::size_t lang_idx = rng.uniform_index(language_codes().size());
        const std::string& lang = language_codes()[lang_idx];
        const std::size_t cls = rng.uniform_index(kNumClasses);
        const std::size_t words =
            spec.min_words + rng.uniform_index(spec.max_words - spec.min_words + 1);
        gov::Document d;
        d.id = next_id();
        d.lang = lang;
        d.label = static_cast<int>(cls);
        d.text = detail::make_text(templates[lang_idx], lang, cls, words, spec.ortho_noise, rng);
        out.docs.push_back(std::move(d));
    }

    for (std::size_t i = 0; i < n_gib; ++i) {
        gov::Document d;
        d.id = next_id();
        d.lang = "";  // unidentified by construction
        d.label = static_cast<int>(rng.uniform_index(kNumClasses));  // label noise
        d.text = detail::gibberish_text(24 + rng.uniform_index(40), rng);
        out.planted_gibberish_ids.push_back(d.id);
        out.docs.push_back(std::move(d));
    }

    // near-duplicates of earlier clean docs: copy, then try a one-word tweak;
    // keep the variant only if it stays within simhash distance 3
    for (std::size_t i = 0; i < n_dup && n_clean > 0; ++i) {
        const gov::Document& src = out.docs[rng.uniform_index(n_clean)];
        gov::Document d = src;
        d.id = next_id();
        std::string tweaked = src.text;
        const std::size_t space = tweaked.find(' ');
        if (space != std::string::npos) {
            std::string candidate = detail::random_word(src.lang, rng, 3, 6) +
                                    tweaked.substr(space);
            if (simhash_distance_of_texts(src.text, candidate) <= 3) tweaked = candidate;
        }
        d.text = tweaked;
        out.planted_dup_ids.push_back(d.id);
        out.docs.push_back(std::move(d));
    }

    return out;
}

}  // namespace hybridft::synth
