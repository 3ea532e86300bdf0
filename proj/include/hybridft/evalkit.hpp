#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hybridft/document.hpp"
#include "hybridft/error.hpp"
#include "hybridft/model.hpp"

namespace hybridft::eval {

// One scored example: the inputs to accuracy, parity, and calibration.
struct Prediction {
    std::string id;
    std::string lang;
    int true_label = -1;
    int predicted_label = -1;
    double confidence = 0.0;  // probability of the predicted label
};

struct EvalReport {
    std::map<std::string, double> per_language_accuracy;
    double macro_accuracy = 0.0;  // unweighted mean over languages
    double parity_gap = 0.0;      // max - min per-language accuracy
    double avg_ece = 0.0;         // unweighted mean of per-language ECE
    std::map<std::string, double> robustness_drops;  // perturbation -> drop
};

// max - min over per-language scores
inline double parity_gap(const std::vector<double>& scores) {
    if (scores.size() < 2)
        throw invalid_input_error("parity_gap: needs at least two languages");
    const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
    return *mx - *mn;
}

// Expected calibration error over equal-width right-closed confidence bins:
// sum over bins of |bin|/N * |acc(bin) - conf(bin)|.
inline double ece(const std::vector<Prediction>& preds, std::size_t bins) {
    if (preds.empty()) throw invalid_input_error("ece: empty prediction set");
    if (bins < 1) throw invalid_input_error("ece: need at least one bin");

    std::vector<std::size_t> count(bins, 0);
    std::vector<double> conf_sum(bins, 0.0);
    std::vector<double> acc_sum(bins, 0.0);
    for (const Prediction& p : preds) {
        if (p.confidence < 0.0 || p.confidence > 1.0)
            throw invalid_input_error("ece: confidence outside [0,1]");
        // right-closed edges: bin b covers (b/B, (b+1)/B], bin 0 includes 0
        std::size_t b = 0;
        if (p.confidence > 0.0) {
            b = static_cast<std::size_t>(
                std::ceil(p.confidence * static_cast<double>(bins))) - 1;
            b = std::min(b, bins - 1);
        }
        ++count[b];
        conf_sum[b] += p.confidence;
        acc_sum[b] += p.predicted_label == p.true_label ? 1.0 : 0.0;
    }
    double e = 0.0;
    const double n = static_cast<double>(preds.size());
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double k = static_cast<double>(count[b]);
        e += (k / n) * std::abs(acc_sum[b] / k - conf_sum[b] / k);
    }
    return e;
}

// ---------------------------------------------------------------------------
// orthographic perturbation operators, each idempotent
// ---------------------------------------------------------------------------

enum class Perturbation { punct_norm, strip_diacritics, ws_compact };

inline Perturbation perturbation_from_string(const std::string& s) {
    if (s == "punct_norm") return Perturbation::punct_norm;
    if (s == "strip_diacritics") return Perturbation::strip_diacritics;
    if (s == "ws_compact") return Perturbation::ws_compact;
    throw data_error("unknown perturbation: " + s);
}

inline std::string to_string(Perturbation p) {
    switch (p) {
        case Perturbation::punct_norm: return "punct_norm";
        case Perturbation::strip_diacritics: return "strip_diacritics";
        case Perturbation::ws_compact: return "ws_compact";
    }
    return "?";
}

namespace detail {

inline std::uint32_t decode_utf8(const std::string& s, std::size_t& i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
        i += 1;
        return c;
    }
    if (c < 0xE0 && i + 1 < s.size()) {
        const std::uint32_t cp = ((c & 0x1Fu) << 6) | (s[i + 1] & 0x3Fu);
        i += 2;
        return cp;
    }
    if (c < 0xF0 && i + 2 < s.size()) {
        const std::uint32_t cp =
            ((c & 0x0Fu) << 12) | ((s[i + 1] & 0x3Fu) << 6) | (s[i + 2] & 0x3Fu);
        i += 3;
        return cp;
    }
    if (i + 3 < s.size()) {
        const std::uint32_t cp = ((c & 0x07u) << 18) | ((s[i + 1] & 0x3Fu) << 12) |
                                 ((s[i + 2] & 0x3Fu) << 6) | (s[i + 3] & 0x3Fu);
        i += 4;
        return cp;
    }
    i += 1;  // truncated sequence: pass the byte through
    return c;
}

inline void encode_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// The documented punctuation mapping table: curly quotes, dashes, ellipsis,
// ideographic space, and the full-width ASCII block.
inline bool punct_map(std::uint32_t cp, std::string& out) {
    switch (cp) {
        case 0x2018: case 0x2019: case 0x201A: case 0x2032: out = "'"; return true;
        case 0x201C: case 0x201D: case 0x201E: case 0x2033: out = "\""; return true;
        case 0x2010: case 0x2011: case 0x2012: case 0x2013:
        case 0x2014: case 0x2015: out = "-"; return true;
        case 0x2026: out = "..."; return true;
        case 0x3000: out = " "; return true;
        default:
            if (cp >= 0xFF01 && cp <= 0xFF5E) {  // full-width ASCII forms
                out = std::string(1, static_cast<char>(cp - 0xFEE0));
                return true;
            }
            return false;
    }
}

// Latin-1 Supplement / Latin Extended-A fold to the unaccented base letter.
// Returns 0 when the codepoint is not a precomposed accented Latin letter.
inline std::uint32_t latin_base(std::uint32_t cp) {
    struct Range {
        std::uint32_t lo, hi;
        char base;
    };
    static const Range ranges[] = {
        {0xC0, 0xC5, 'A'}, {0xC8, 0xCB, 'E'}, {0xCC, 0xCF, 'I'},
        {0xD2, 0xD6, 'O'}, {0xD9, 0xDC, 'U'}, {0xE0, 0xE5, 'a'},
        {0xE8, 0xEB, 'e'}, {0xEC, 0xEF, 'i'}, {0xF2, 0xF6, 'o'},
        {0xF9, 0xFC, 'u'},
    };
    for (const Range& r : ranges)
        if (cp >= r.lo && cp <= r.hi) return static_cast<std::uint32_t>(r.base);
    switch (cp) {
        case 0xC7: return 'C';
        case 0xE7: return 'c';
        case 0xD1: return 'N';
        case 0xF1: return 'n';
        case 0xDD: return 'Y';
        case 0xFD: case 0xFF: return 'y';
        default: return 0;
    }
}

inline bool is_combining_mark(std::uint32_t cp) {
    return cp >= 0x0300 && cp <= 0x036F;
}

}  // namespace detail

inline std::string perturb(const std::string& text, Perturbation kind) {
    std::string out;
    out.reserve(text.size());
    switch (kind) {
        case Perturbation::punct_norm: {
            std::size_t i = 0;
            while (i < text.size()) {
                const std::uint32_t cp = detail::decode_utf8(text, i);
                std::string mapped;
                if (detail::punct_map(cp, mapped))
                    out += mapped;
                else
                    detail::encode_utf8(out, cp);
            }
            return out;
        }
        case Perturbation::strip_diacritics: {
            std::size_t i = 0;
            while (i < text.size()) {
                const std::uint32_t cp = detail::decode_utf8(text, i);
                if (detail::is_combining_mark(cp)) continue;
                const std::uint32_t base = detail::latin_base(cp);
                detail::encode_utf8(out, base ? base : cp);
            }
            return out;
        }
        case Perturbation::ws_compact: {
            bool in_space = false;
            for (char c : text) {
                const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
                                   c == '\f' || c == '\v';
                if (space) {
                    in_space = true;
                    continue;
                }
                if (in_space && !out.empty()) out.push_back(' ');
                in_space = false;
                out.push_back(c);
            }
            return out;
        }
    }
    return text;
}

inline const std::vector<Perturbation>& all_perturbations() {
    static const std::vector<Perturbation> kinds{
        Perturbation::punct_norm, Perturbation::strip_diacritics, Perturbation::ws_compact};
    return kinds;
}

// ---------------------------------------------------------------------------
// model evaluation
// ---------------------------------------------------------------------------

inline std::vector<Prediction> evaluate_model(const train::ToyModel& model,
                                              const gov::Corpus& testset) {
    const std::vector<num::Matrix> w_eff = train::all_effective_weights(model);
    std::vector<Prediction> preds;
    preds.reserve(testset.size());
    for (const gov::Document& d : testset) {
        if (d.label < 0) continue;
        const std::vector<double> p =
            train::predict_proba(model, w_eff, model.embed.features(d.text));
        std::size_t arg = 0;
        for (std::size_t c = 1; c < p.size(); ++c)
            if (p[c] > p[arg]) arg = c;
        Prediction pr;
        pr.id = d.id;
        pr.lang = d.lang.empty() ? "??" : d.lang;
        pr.true_label = d.label;
        pr.predicted_label = static_cast<int>(arg);
        pr.confidence = p[arg];
        preds.push_back(std::move(pr));
    }
    return preds;
}

inline std::map<std::string, double> per_language_accuracy(
    const std::vector<Prediction>& preds) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // lang -> (hits, total)
    for (const Prediction& p : preds) {
        auto& [hits, total] = tally[p.lang];
        ++total;
        if (p.predicted_label == p.true_label) ++hits;
    }
    std::map<std::string, double> acc;
    for (const auto& [lang, ht] : tally)
        acc[lang] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
    return acc;
}

inline double macro_accuracy(const std::vector<Prediction>& preds) {
    const auto acc = per_language_accuracy(preds);
    if (acc.empty()) throw invalid_input_error("macro_accuracy: no predictions");
    double s = 0.0;
    for (const auto& [lang, a] : acc) s += a;
    return s / static_cast<double>(acc.size());
}

// per-language ECE, averaged without weighting (the pooled alternative is a
// one-line change; the unweighted mean is what we report)
inline double average_ece(const std::vector<Prediction>& preds, std::size_t bins) {
    std::map<std::string, std::vector<Prediction>> by_lang;
    for (const Prediction& p : preds) by_lang[p.lang].push_back(p);
    if (by_lang.empty()) throw invalid_input_error("average_ece: no predictions");
    double s = 0.0;
    for (const auto& [lang, group] : by_lang) s += ece(group, bins);
    return s / static_cast<double>(by_lang.size());
}

inline EvalReport eval_report(const std::vector<Prediction>& preds, std::size_t bins) {
    EvalReport r;
    r.per_language_accuracy = per_language_accuracy(preds);
    if (r.per_language_accuracy.size() >= 2) {
        std::vector<double> scores;
        for (const auto& [lang, a] : r.per_language_accuracy) scores.push_back(a);
        r.parity_gap = parity_gap(scores);
    }
    r.macro_accuracy = macro_accuracy(preds);
    r.avg_ece = average_ece(preds, bins);
    return r;
}

// For each perturbation kind, macro accuracy on the perturbed testset against
// the clean one (computed once); positive drop = degradation.
inline std::map<std::string, double> robustness_eval(const train::ToyModel& model,
                                                     const gov::Corpus& testset) {
    const double clean = macro_accuracy(evaluate_model(model, testset));
    std::map<std::string, double> drops;
    for (Perturbation kind : all_perturbations()) {
        gov::Corpus perturbed = testset;
        for (gov::Document& d : perturbed) d.text = perturb(d.text, kind);
        const double hit = macro_accuracy(evaluate_model(model, perturbed));
        drops[to_string(kind)] = clean - hit;
    }
    return drops;
}

}  // namespace hybridft::eval
