#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "ctm/corpus.hpp"
#include "ctm/error.hpp"
#include "ctm/model.hpp"
#include "ctm/rng.hpp"

namespace ctm {

enum class SampleStrategy { word_based, zero_sampling, random_doc, topic_based };
enum class ImportanceMeasure { tfidf, tf, idf };

inline const char* strategy_name(SampleStrategy s) {
    switch (s) {
        case SampleStrategy::word_based: return "word_based";
        case SampleStrategy::zero_sampling: return "zero_sampling";
        case SampleStrategy::random_doc: return "random_doc";
        default: return "topic_based";
    }
}

inline SampleStrategy strategy_from_name(const std::string& name) {
    if (name == "word_based") return SampleStrategy::word_based;
    if (name == "zero_sampling") return SampleStrategy::zero_sampling;
    if (name == "random_doc") return SampleStrategy::random_doc;
    if (name == "topic_based") return SampleStrategy::topic_based;
    throw DataError("unknown sampling strategy: " + name);
}

inline const char* importance_name(ImportanceMeasure m) {
    switch (m) {
        case ImportanceMeasure::tfidf: return "tfidf";
        case ImportanceMeasure::tf: return "tf";
        default: return "idf";
    }
}

inline ImportanceMeasure importance_from_name(const std::string& name) {
    if (name == "tfidf") return ImportanceMeasure::tfidf;
    if (name == "tf") return ImportanceMeasure::tf;
    if (name == "idf") return ImportanceMeasure::idf;
    throw DataError("unknown importance measure: " + name);
}

struct SamplerConfig {
    SampleStrategy strategy = SampleStrategy::word_based;
    ImportanceMeasure importance = ImportanceMeasure::tfidf;
    int k = 15;        // substituted-token count
    int topics_m = 1;  // topic_based only
};

struct TokenScore {
    int token = 0;
    double score = 0.0;
};

// Scores over exactly the tokens present in the document. tf is the raw
// count, tfidf the precomputed row, idf recovered as tfidf/count.
inline std::vector<TokenScore> importance_scores(const Document& doc,
                                                 const std::vector<float>& tfidf_row,
                                                 ImportanceMeasure measure) {
    if (tfidf_row.size() != doc.entries.size())
        throw DataError("importance_scores: tfidf row not aligned with document");
    std::vector<TokenScore> scores;
    scores.reserve(doc.entries.size());
    for (std::size_t i = 0; i < doc.entries.size(); ++i) {
        const auto& e = doc.entries[i];
        double s = 0.0;
        switch (measure) {
            case ImportanceMeasure::tf:
                s = static_cast<double>(e.count);
                break;
            case ImportanceMeasure::tfidf:
                s = static_cast<double>(tfidf_row[i]);
                break;
            case ImportanceMeasure::idf:
                s = static_cast<double>(tfidf_row[i]) / static_cast<double>(e.count);
                break;
        }
        scores.push_back({e.token, s});
    }
    return scores;
}

struct SamplePair {
    Vec x_pos;
    Vec x_neg;
    std::vector<int> pos_indices;
    std::vector<int> neg_indices;
    bool degenerate = false;  // pair equals the prototype; skip its contrastive term
};

namespace detail {

// One ranking (score descending, token id ascending) drives both ends:
// negatives come from the head, positives from the tail, which keeps the
// two index sets disjoint for any k. Documents with fewer than 2k distinct
// tokens shrink k to floor(d/2).
struct RankedSelection {
    std::vector<int> neg;  // highest scores, best first
    std::vector<int> pos;  // lowest scores, lowest first
    bool degenerate = false;
};

inline RankedSelection select_by_rank(std::vector<TokenScore> scores, int k) {
    if (k < 1) throw DataError("sampler: k must be >= 1");
    std::sort(scores.begin(), scores.end(), [](const TokenScore& a, const TokenScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.token < b.token;
    });
    const int d = static_cast<int>(scores.size());
    const int k_eff = (2 * k <= d) ? k : d / 2;
    RankedSelection sel;
    if (k_eff == 0) {
        sel.degenerate = true;
        return sel;
    }
    for (int i = 0; i < k_eff; ++i) sel.neg.push_back(scores[static_cast<std::size_t>(i)].token);
    for (int i = 0; i < k_eff; ++i)
        sel.pos.push_back(scores[static_cast<std::size_t>(d - 1 - i)].token);
    return sel;
}

inline SamplePair substitute(const Vec& x, const RankedSelection& sel,
                             const Vec* recon_counts) {
    SamplePair pair;
    pair.x_pos = x;
    pair.x_neg = x;
    pair.pos_indices = sel.pos;
    pair.neg_indices = sel.neg;
    pair.degenerate = sel.degenerate;
    for (int t : sel.neg) pair.x_neg(t) = recon_counts ? (*recon_counts)(t) : 0.0;
    for (int t : sel.pos) pair.x_pos(t) = recon_counts ? (*recon_counts)(t) : 0.0;
    return pair;
}

}  // namespace detail

// Word-based sampling: replace the k most important present tokens with the
// reconstructed weights to break the theme (negative), and the k least
// important ones to preserve it (positive).
inline SamplePair word_based_pair(const Vec& x, const Vec& recon_counts,
                                  const std::vector<TokenScore>& scores, int k) {
    const auto sel = detail::select_by_rank(scores, k);
    return detail::substitute(x, sel, &recon_counts);
}

// Same index selection, substituted values forced to zero.
inline SamplePair zero_sampling_pair(const Vec& x,
                                     const std::vector<TokenScore>& scores, int k) {
    const auto sel = detail::select_by_rank(scores, k);
    return detail::substitute(x, sel, nullptr);
}

// Uniform draw of a different document index; the caller encodes it as the
// negative. No positive sample exists for this strategy.
inline int random_doc_negative_index(int num_docs, int doc_index, Rng& rng) {
    if (num_docs < 2) throw DataError("random_doc: corpus must have >= 2 documents");
    const auto draw = static_cast<int>(rng.below(static_cast<std::size_t>(num_docs - 1)));
    return draw >= doc_index ? draw + 1 : draw;
}

inline Vec random_doc_negative(const Corpus& corpus, int doc_index, Rng& rng) {
    const int pick = random_doc_negative_index(corpus.num_docs(), doc_index, rng);
    return dense_counts(corpus.docs[static_cast<std::size_t>(pick)], corpus.vocab.size());
}

// Topic-based sampling. Salient set S: union over the document's top-M
// topics of each topic's top-ceil(k/M) decoder words, truncated to k ids;
// the negative substitutes reconstructed weights there. The positive
// substitutes at the present tokens with the lowest summed top-M topic
// probability, excluding S so the sets stay disjoint. (The positive rule is
// an interpolation: only the salient-word procedure is prescribed.)
inline SamplePair topic_based_pair(const Vec& x, const Vec& theta,
                                   const Mat& topic_word, int topics_m, int k,
                                   const Vec& recon_counts) {
    const int t_total = static_cast<int>(topic_word.rows());
    if (topics_m < 1 || topics_m > t_total)
        throw DataError("topic_based: M must be within [1, T]");
    if (k < 1) throw DataError("sampler: k must be >= 1");

    std::vector<int> topic_order(static_cast<std::size_t>(t_total));
    std::iota(topic_order.begin(), topic_order.end(), 0);
    std::stable_sort(topic_order.begin(), topic_order.end(), [&](int a, int b) {
        if (theta(a) != theta(b)) return theta(a) > theta(b);
        return a < b;
    });
    topic_order.resize(static_cast<std::size_t>(topics_m));

    const int per_topic = (k + topics_m - 1) / topics_m;
    std::vector<int> salient;
    std::unordered_set<int> in_salient;
    const int vocab = static_cast<int>(topic_word.cols());
    for (int t : topic_order) {
        std::vector<int> ids(static_cast<std::size_t>(vocab));
        std::iota(ids.begin(), ids.end(), 0);
        const int take = std::min(per_topic, vocab);
        std::partial_sort(ids.begin(), ids.begin() + take, ids.end(), [&](int a, int b) {
            if (topic_word(t, a) != topic_word(t, b)) return topic_word(t, a) > topic_word(t, b);
            return a < b;
        });
        for (int i = 0; i < take && static_cast<int>(salient.size()) < k; ++i) {
            if (in_salient.insert(ids[static_cast<std::size_t>(i)]).second)
                salient.push_back(ids[static_cast<std::size_t>(i)]);
        }
        if (static_cast<int>(salient.size()) >= k) break;
    }

    // per-token saliency = summed row-softmax probability over the chosen topics
    Vec saliency = Vec::Zero(vocab);
    for (int t : topic_order)
        saliency += softmax(topic_word.row(t).transpose());

    std::vector<TokenScore> present;
    for (int v = 0; v < vocab; ++v) {
        if (x(v) > 0.0 && !in_salient.count(v)) present.push_back({v, saliency(v)});
    }
    std::sort(present.begin(), present.end(), [](const TokenScore& a, const TokenScore& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.token < b.token;
    });

    const int k_eff = std::min({k, static_cast<int>(salient.size()),
                                static_cast<int>(present.size())});
    SamplePair pair;
    pair.x_pos = x;
    pair.x_neg = x;
    if (k_eff == 0) {
        pair.degenerate = true;
        return pair;
    }
    for (int i = 0; i < k_eff; ++i) {
        const int n = salient[static_cast<std::size_t>(i)];
        const int p = present[static_cast<std::size_t>(i)].token;
        pair.neg_indices.push_back(n);
        pair.pos_indices.push_back(p);
        pair.x_neg(n) = recon_counts(n);
        pair.x_pos(p) = recon_counts(p);
    }
    return pair;
}

// Dispatch used by the trainer and the inspection CLI for the three
// pair-producing strategies (random_doc is handled by the caller).
inline SamplePair make_pair(const SamplerConfig& cfg, const Vec& x,
                            const Vec& recon_counts,
                            const std::vector<TokenScore>& scores,
                            const Vec& theta, const Mat& topic_word) {
    switch (cfg.strategy) {
        case SampleStrategy::word_based:
            return word_based_pair(x, recon_counts, scores, cfg.k);
        case SampleStrategy::zero_sampling:
            return zero_sampling_pair(x, scores, cfg.k);
        case SampleStrategy::topic_based:
            return topic_based_pair(x, theta, topic_word, cfg.topics_m, cfg.k, recon_counts);
        default:
            throw std::logic_error("make_pair: random_doc has no pair form");
    }
}

}  // namespace ctm
