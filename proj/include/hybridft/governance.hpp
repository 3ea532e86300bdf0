#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "hybridft/document.hpp"
#include "hybridft/error.hpp"

namespace hybridft::gov {

// ---------------------------------------------------------------------------
// language identification: per-language character n-gram profiles (n = 1..3),
// add-1 smoothed, scored by summed log-probabilities
// ---------------------------------------------------------------------------

struct LidModel {
    std::vector<std::string> languages;  // tie-break order
    // profiles[n-1][lang] : ngram -> smoothed log prob
    std::vector<std::vector<std::unordered_map<std::string, double>>> profiles;
    // fallback log prob for unseen n-grams, per order per language
    std::vector<std::vector<double>> unseen_logp;
};

namespace detail {

inline std::vector<std::string> char_ngrams(const std::string& text, std::size_t n) {
    // n-grams over UTF-8 codepoint boundaries
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < text.size();) {
        starts.push_back(i);
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (c < 0x80) i += 1;
        else if (c < 0xE0) i += 2;
        else if (c < 0xF0) i += 3;
        else i += 4;
    }
    starts.push_back(text.size());
    std::vector<std::string> grams;
    if (starts.size() < n + 1) return grams;
    for (std::size_t i = 0; i + n < starts.size(); ++i)
        grams.push_back(text.substr(starts[i], starts[i + n] - starts[i]));
    return grams;
}

}  // namespace detail

inline LidModel lid_train(const Corpus& corpus) {
    // collect languages in first-seen order; that order breaks ties
    LidModel model;
    std::map<std::string, std::size_t> lang_index;
    for (const Document& d : corpus) {
        if (d.lang.empty()) continue;
        if (!lang_index.count(d.lang)) {
            lang_index[d.lang] = model.languages.size();
            model.languages.push_back(d.lang);
        }
    }
    if (model.languages.empty())
        throw invalid_input_error("lid_train: no language-labeled documents");

    model.profiles.assign(3, {});
    model.unseen_logp.assign(3, {});
    for (std::size_t n = 1; n <= 3; ++n) {
        auto& per_lang = model.profiles[n - 1];
        per_lang.assign(model.languages.size(), {});
        std::vector<std::unordered_map<std::string, std::size_t>> counts(model.languages.size());
        std::vector<std::size_t> totals(model.languages.size(), 0);
        std::unordered_map<std::string, bool> vocab;
        for (const Document& d : corpus) {
            if (d.lang.empty()) continue;
            const std::size_t li = lang_index[d.lang];
            for (const std::string& g : detail::char_ngrams(d.text, n)) {
                ++counts[li][g];
                ++totals[li];
                vocab[g] = true;
            }
        }
        for (std::size_t li = 0; li < model.languages.size(); ++li) {
            if (totals[li] == 0 && n == 1)
                throw invalid_input_error("lid_train: empty bucket for language " +
                                          model.languages[li]);
        }
        const double v = static_cast<double>(vocab.size());
        model.unseen_logp[n - 1].resize(model.languages.size());
        for (std::size_t li = 0; li < model.languages.size(); ++li) {
            const double denom = static_cast<double>(totals[li]) + v;
            // add-1 smoothing over the shared vocabulary: the profile sums to
            // one over known n-grams before the log
            for (const auto& [gram, flag] : vocab) {
                (void)flag;
                const auto it = counts[li].find(gram);
                const double c = it == counts[li].end() ? 0.0 : static_cast<double>(it->second);
                per_lang[li][gram] = std::log((c + 1.0) / denom);
            }
            model.unseen_logp[n - 1][li] = std::log(1.0 / denom);
        }
    }
    return model;
}

// summed smoothed log-probability of the text's n-grams under one language
inline double lid_score(const LidModel& model, const std::string& text, std::size_t lang_index) {
    double score = 0.0;
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto& profile = model.profiles[n - 1][lang_index];
        for (const std::string& g : detail::char_ngrams(text, n)) {
            const auto it = profile.find(g);
            score += it == profile.end() ? model.unseen_logp[n - 1][lang_index] : it->second;
        }
    }
    return score;
}

inline std::pair<std::string, double> lid_classify(const LidModel& model,
                                                   const std::string& text) {
    if (model.languages.empty()) throw contract_error("lid_classify: model not trained");
    if (text.empty()) throw invalid_input_error("lid_classify: empty text");
    std::size_t best = 0;
    double best_score = lid_score(model, text, 0);
    for (std::size_t li = 1; li < model.languages.size(); ++li) {
        const double s = lid_score(model, text, li);
        if (s > best_score) {  // ties keep the earlier language
            best_score = s;
            best = li;
        }
    }
    return {model.languages[best], best_score};
}

// mean negative log probability per n-gram, exponentiated: the LM-perplexity
// proxy the quality filter uses, computed under one language's profiles
inline double lm_perplexity(const LidModel& model, const std::string& text,
                            const std::string& lang) {
    const auto it = std::find(model.languages.begin(), model.languages.end(), lang);
    if (it == model.languages.end())
        throw invalid_input_error("lm_perplexity: unknown language " + lang);
    const std::size_t li = static_cast<std::size_t>(it - model.languages.begin());
    double nll = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto& profile = model.profiles[n - 1][li];
        for (const std::string& g : detail::char_ngrams(text, n)) {
            const auto hit = profile.find(g);
            nll -= hit == profile.end() ? model.unseen_logp[n - 1][li] : hit->second;
            ++count;
        }
    }
    if (count == 0) return std::exp(30.0);  // no measurable n-grams: effectively reject
    return std::exp(nll / static_cast<double>(count));
}

// ---------------------------------------------------------------------------
// simhash near-duplicate fingerprints over 3-word shingles
// ---------------------------------------------------------------------------

struct SimHashSignature {
    std::uint64_t bits = 0;
    std::string source_id;
};

namespace detail {

inline constexpr std::uint64_t kSimHashSeed = 0x5eed5eed5eedULL;  // documented constant

inline std::uint64_t hash64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL ^ kSimHashSeed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::vector<std::string> word_shingles(const std::string& text, std::size_t k) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n') {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));

    std::vector<std::string> shingles;
    if (words.size() < k) {
        // short texts fall back to a single whole-text shingle
        std::string joined;
        for (const auto& w : words) {
            if (!joined.empty()) joined.push_back(' ');
            joined += w;
        }
        if (!joined.empty()) shingles.push_back(std::move(joined));
        return shingles;
    }
    for (std::size_t i = 0; i + k <= words.size(); ++i) {
        std::string joined = words[i];
        for (std::size_t j = 1; j < k; ++j) {
            joined.push_back(' ');
            joined += words[i + j];
        }
        shingles.push_back(std::move(joined));
    }
    return shingles;
}

}  // namespace detail

// 64-bit SimHash: majority vote per bit over the multiset of hashed 3-word
// shingles.  A pure function of the shingle multiset.
inline SimHashSignature simhash(const std::string& text, const std::string& source_id = {}) {
    if (text.empty()) throw invalid_input_error("simhash: empty text");
    const std::vector<std::string> shingles = detail::word_shingles(text, 3);
    if (shingles.empty()) throw invalid_input_error("simhash: no tokens");

    int votes[64] = {0};
    for (const std::string& s : shingles) {
        const std::uint64_t h = detail::hash64(s);
        for (int b = 0; b < 64; ++b) votes[b] += (h >> b) & 1 ? 1 : -1;
    }
    SimHashSignature sig;
    sig.source_id = source_id;
    for (int b = 0; b < 64; ++b)
        if (votes[b] > 0) sig.bits |= (std::uint64_t{1} << b);
    return sig;
}

inline std::size_t hamming_distance(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::size_t>(__builtin_popcountll(a ^ b));
}

// ---------------------------------------------------------------------------
// near-duplicate removal: greedy clustering in corpus order
// ---------------------------------------------------------------------------

struct DedupCluster {
    std::string kept_id;
    std::vector<std::string> member_ids;
};

struct DedupReport {
    std::vector<DedupCluster> clusters;
    std::size_t removed = 0;
};

// A document joins the first prior cluster whose founder signature is within
// `threshold`, else founds a new cluster.  The lowest-id member of each
// cluster is kept; output preserves corpus order.
inline std::pair<Corpus, DedupReport> dedup(const Corpus& corpus, std::size_t threshold) {
    struct Cluster {
        std::uint64_t founder_bits;
        std::size_t best_doc;  // index of lowest-id member
        std::vector<std::size_t> members;
    };
    std::vector<Cluster> clusters;
    std::vector<std::uint64_t> sigs(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) sigs[i] = simhash(corpus[i].text).bits;

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        bool joined = false;
        for (Cluster& c : clusters) {
            if (hamming_distance(c.founder_bits, sigs[i]) <= threshold) {
                c.members.push_back(i);
                if (corpus[i].id < corpus[c.best_doc].id) c.best_doc = i;
                joined = true;
                break;
            }
        }
        if (!joined) clusters.push_back({sigs[i], i, {i}});
    }

    std::vector<bool> keep(corpus.size(), false);
    DedupReport report;
    for (const Cluster& c : clusters) {
        keep[c.best_doc] = true;
        DedupCluster rc;
        rc.kept_id = corpus[c.best_doc].id;
        for (std::size_t m : c.members) rc.member_ids.push_back(corpus[m].id);
        report.removed += c.members.size() - 1;
        report.clusters.push_back(std::move(rc));
    }

    Corpus kept;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (keep[i]) kept.push_back(corpus[i]);
    return {std::move(kept), std::move(report)};
}

// ---------------------------------------------------------------------------
// quality filtering: length, character-class entropy, LM perplexity
// ---------------------------------------------------------------------------

struct QualityPolicy {
    std::size_t min_chars = 0;
    std::size_t max_chars = SIZE_MAX;
    double entropy_floor = 0.0;    // bits over {letter, digit, space, punct, other}
    double ppl_ceiling = 0.0;      // 0 = derive from the corpus 95th percentile
    bool enable_perplexity = true;
};

struct Rejection {
    std::string id;
    std::string reason;
};

struct QualityReport {
    std::vector<Rejection> rejections;
    double applied_ppl_ceiling = 0.0;
};

namespace detail {

inline double char_class_entropy(const std::string& text) {
    // classes: letter-ish (ASCII letter or any non-ASCII), digit, space, punct
    std::size_t counts[4] = {0, 0, 0, 0};
    std::size_t total = 0;
    for (unsigned char c : text) {
        if (c >= 0x80) {
            // count only UTF-8 lead bytes so multibyte letters weigh once
            if ((c & 0xC0) == 0x80) continue;
            ++counts[0];
        } else if (std::isalpha(c)) {
            ++counts[0];
        } else if (std::isdigit(c)) {
            ++counts[1];
        } else if (std::isspace(c)) {
            ++counts[2];
        } else {
            ++counts[3];
        }
        ++total;
    }
    if (total == 0) return 0.0;
    double h = 0.0;
    for (std::size_t k : counts) {
        if (k == 0) continue;
        const double p = static_cast<double>(k) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

inline std::size_t utf8_length(const std::string& text) {
    std::size_t n = 0;
    for (unsigned char c : text)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

}  // namespace detail

// Documents failing any enabled bound are rejected with a reason.  When the
// perplexity ceiling is 0 it is derived as the 95th percentile of the
// perplexities of documents passing the other checks.
inline std::pair<Corpus, QualityReport> quality_filter(const Corpus& corpus,
                                                       const QualityPolicy& policy,
                                                       const LidModel* lid = nullptr) {
    QualityReport report;
    std::vector<double> ppl(corpus.size(), 0.0);
    std::vector<std::string> basic_reason(corpus.size());

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const Document& d = corpus[i];
        const std::size_t len = detail::utf8_length(d.text);
        if (len < policy.min_chars) {
            basic_reason[i] = "too-short";
        } else if (len > policy.max_chars) {
            basic_reason[i] = "too-long";
        } else if (detail::char_class_entropy(d.text) < policy.entropy_floor) {
            basic_reason[i] = "low-entropy";
        } else if (policy.enable_perplexity && lid != nullptr) {
            if (d.lang.empty()) {
                basic_reason[i] = "no-language";
            } else {
                ppl[i] = lm_perplexity(*lid, d.text, d.lang);
            }
        }
    }

    double ceiling = policy.ppl_ceiling;
    if (policy.enable_perplexity && lid != nullptr && ceiling <= 0.0) {
        // 95th percentile of the clean bulk.  The bulk is delimited at five
        // times the median perplexity, which keeps planted junk (orders of
        // magnitude above template text) out of the percentile estimate.
        std::vector<double> pool;
        for (std::size_t i = 0; i < corpus.size(); ++i)
            if (basic_reason[i].empty()) pool.push_back(ppl[i]);
        if (!pool.empty()) {
            std::sort(pool.begin(), pool.end());
            const double median = pool[pool.size() / 2];
            std::vector<double> bulk;
            for (double p : pool)
                if (p <= 5.0 * median) bulk.push_back(p);
            const std::size_t idx =
                std::min(bulk.size() - 1,
                         static_cast<std::size_t>(0.95 * static_cast<double>(bulk.size())));
            ceiling = bulk[idx];
        }
    }
    report.applied_ppl_ceiling = ceiling;

    Corpus kept;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        std::string reason = basic_reason[i];
        if (reason.empty() && policy.enable_perplexity && lid != nullptr && ceiling > 0.0 &&
            ppl[i] > ceiling)
            reason = "high-perplexity";
        if (reason.empty())
            kept.push_back(corpus[i]);
        else
            report.rejections.push_back({corpus[i].id, std::move(reason)});
    }
    return {std::move(kept), std::move(report)};
}

// ---------------------------------------------------------------------------
// staged pipeline C0 -> C1 -> C2 with audit statistics
// ---------------------------------------------------------------------------

enum class Stage { C0, C1, C2 };

inline Stage stage_from_string(const std::string& s) {
    if (s == "C0" || s == "c0") return Stage::C0;
    if (s == "C1" || s == "c1") return Stage::C1;
    if (s == "C2" || s == "c2") return Stage::C2;
    throw data_error("unknown governance stage: " + s);
}

inline std::string to_string(Stage s) {
    switch (s) {
        case Stage::C0: return "C0";
        case Stage::C1: return "C1";
        case Stage::C2: return "C2";
    }
    return "?";
}

struct StageAudit {
    std::size_t input_docs = 0;
    std::size_t after_c0 = 0;
    std::size_t after_dedup = 0;   // only for C1+
    std::size_t after_quality = 0; // only for C2
    std::size_t dedup_removed = 0;
    std::size_t quality_rejected = 0;
    double applied_ppl_ceiling = 0.0;
    std::map<std::string, std::size_t> per_language;            // final kept set
    std::map<std::string, std::size_t> rejection_reasons;
};

// C0 = ingestion; C1 = C0 + language attach + dedup; C2 = C1 + quality filter.
inline std::pair<Corpus, StageAudit> run_stages(const Corpus& corpus, Stage stage,
                                                const LidModel* lid,
                                                const QualityPolicy& policy,
                                                std::size_t dedup_threshold = 3) {
    StageAudit audit;
    audit.input_docs = corpus.size();

    // C0: ingestion — drop structurally empty records
    Corpus staged;
    for (const Document& d : corpus) {
        if (d.text.empty()) continue;
        Document copy = d;
        copy.provenance = "C0";
        staged.push_back(std::move(copy));
    }
    audit.after_c0 = staged.size();

    if (stage != Stage::C0) {
        if (lid == nullptr) throw contract_error("run_stages: C1+ requires a LID model");
        for (Document& d : staged) {
            d.lang = lid_classify(*lid, d.text).first;
            d.provenance += ";C1";
        }
        auto [kept, report] = dedup(staged, dedup_threshold);
        staged = std::move(kept);
        audit.dedup_removed = report.removed;
        audit.after_dedup = staged.size();
    }

    if (stage == Stage::C2) {
        auto [kept, report] = quality_filter(staged, policy, lid);
        staged = std::move(kept);
        for (Document& d : staged) d.provenance += ";C2";
        audit.quality_rejected = report.rejections.size();
        audit.applied_ppl_ceiling = report.applied_ppl_ceiling;
        for (const Rejection& r : report.rejections) ++audit.rejection_reasons[r.reason];
        audit.after_quality = staged.size();
    }

    for (const Document& d : staged) ++audit.per_language[d.lang.empty() ? "??" : d.lang];
    return {std::move(staged), std::move(audit)};
}

}  // namespace hybridft::gov
