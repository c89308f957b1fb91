#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ctm/corpus.hpp"
#include "ctm/error.hpp"
#include "ctm/model.hpp"

namespace ctm {

// Document-level binary co-occurrence counts over a reference split.
struct CooccurrenceStats {
    std::int64_t doc_count = 0;
    std::vector<std::int64_t> marginal;                      // docs containing token
    std::unordered_map<std::uint64_t, std::int64_t> joint;   // upper-triangular

    static std::uint64_t key(int i, int j) {
        const auto lo = static_cast<std::uint64_t>(std::min(i, j));
        const auto hi = static_cast<std::uint64_t>(std::max(i, j));
        return (lo << 32) | hi;
    }

    std::int64_t joint_of(int i, int j) const {
        if (i == j) return marginal[static_cast<std::size_t>(i)];
        auto it = joint.find(key(i, j));
        return it == joint.end() ? 0 : it->second;
    }
};

// NPMI reference statistics default to the training split; pass nullopt to
// use every document.
inline CooccurrenceStats build_cooccurrence(const Corpus& corpus,
                                            std::optional<Split> split = Split::train) {
    if (corpus.docs.empty()) throw DataError("build_cooccurrence: empty corpus");
    CooccurrenceStats stats;
    stats.marginal.assign(static_cast<std::size_t>(corpus.vocab.size()), 0);
    for (int d = 0; d < corpus.num_docs(); ++d) {
        if (split && corpus.has_split() &&
            corpus.split_tag[static_cast<std::size_t>(d)] != *split)
            continue;
        stats.doc_count += 1;
        const auto& entries = corpus.docs[static_cast<std::size_t>(d)].entries;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            stats.marginal[static_cast<std::size_t>(entries[i].token)] += 1;
            for (std::size_t j = i + 1; j < entries.size(); ++j) {
                stats.joint[CooccurrenceStats::key(entries[i].token, entries[j].token)] += 1;
            }
        }
    }
    if (stats.doc_count == 0) throw DataError("build_cooccurrence: split has no documents");
    return stats;
}

// Mean normalized PMI over all unordered pairs of the given top words:
//   ln(P(i,j) / (P(i) P(j))) / (-ln P(i,j)),  P(i,j) = (joint + eps) / N.
// Never-co-occurring pairs take the eps->0 limit, exactly -1. Pairs whose
// token never occurs in the reference split are skipped (no estimate
// exists). Returns 0 when no scorable pair remains.
inline double npmi_topic(std::span<const int> top_words, const CooccurrenceStats& stats,
                         double eps = 1e-12) {
    if (top_words.size() < 2) throw DataError("npmi_topic: need at least 2 words");
    const auto n = static_cast<double>(stats.doc_count);
    double acc = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < top_words.size(); ++i) {
        const int a = top_words[i];
        if (a < 0 || a >= static_cast<int>(stats.marginal.size()))
            throw DataError("npmi_topic: unknown token id");
        for (std::size_t j = i + 1; j < top_words.size(); ++j) {
            const int b = top_words[j];
            if (b < 0 || b >= static_cast<int>(stats.marginal.size()))
                throw DataError("npmi_topic: unknown token id");
            const auto ma = stats.marginal[static_cast<std::size_t>(a)];
            const auto mb = stats.marginal[static_cast<std::size_t>(b)];
            if (ma == 0 || mb == 0) continue;
            const auto joint = stats.joint_of(a, b);
            pairs += 1;
            if (joint == 0) {
                acc += -1.0;
                continue;
            }
            const double p_joint = (static_cast<double>(joint) + eps) / n;
            const double p_a = static_cast<double>(ma) / n;
            const double p_b = static_cast<double>(mb) / n;
            const double denom = -std::log(p_joint);
            if (denom <= 0.0) {
                // all words in every document: perfect association
                acc += 1.0;
                continue;
            }
            acc += std::log(p_joint / (p_a * p_b)) / denom;
        }
    }
    return pairs == 0 ? 0.0 : acc / static_cast<double>(pairs);
}

// Jensen-Shannon divergence with natural log; range [0, ln 2].
inline double js_divergence(const Vec& p, const Vec& q) {
    if (p.size() != q.size()) throw DataError("js_divergence: length mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p(i) + q(i));
        if (p(i) > 0.0) acc += 0.5 * p(i) * std::log(p(i) / m);
        if (q(i) > 0.0) acc += 0.5 * q(i) * std::log(q(i) / m);
    }
    return std::max(0.0, acc);
}

struct AlignedPair {
    int a = 0;
    int b = 0;
    double js = 0.0;
};

struct AlignmentResult {
    std::vector<AlignedPair> pairs;
    double threshold = 0.0;
};

// Greedy competitive linking on a precomputed divergence matrix: repeatedly
// emit the globally lowest-JS pair, retire both topics, stop once the
// minimum exceeds the threshold (or a side runs out, or max_pairs is hit).
// Emission order is therefore non-decreasing in JS and the match is
// one-to-one. Ties resolve to the lowest (a, b) index pair.
inline AlignmentResult competitive_link_js(const Mat& js, double threshold,
                                           int max_pairs = 0) {
    const int ta = static_cast<int>(js.rows());
    const int tb = static_cast<int>(js.cols());
    AlignmentResult result;
    result.threshold = threshold;
    std::vector<bool> used_a(static_cast<std::size_t>(ta), false);
    std::vector<bool> used_b(static_cast<std::size_t>(tb), false);
    const int limit = max_pairs > 0 ? std::min(max_pairs, std::min(ta, tb))
                                    : std::min(ta, tb);
    while (static_cast<int>(result.pairs.size()) < limit) {
        int best_i = -1;
        int best_j = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < ta; ++i) {
            if (used_a[static_cast<std::size_t>(i)]) continue;
            for (int j = 0; j < tb; ++j) {
                if (used_b[static_cast<std::size_t>(j)]) continue;
                if (js(i, j) < best) {
                    best = js(i, j);
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (best_i < 0 || best > threshold) break;
        used_a[static_cast<std::size_t>(best_i)] = true;
        used_b[static_cast<std::size_t>(best_j)] = true;
        result.pairs.push_back({best_i, best_j, best});
    }
    return result;
}

// Rows of both inputs must be distributions over the same vocabulary.
inline AlignmentResult competitive_link(const Mat& topics_a, const Mat& topics_b,
                                        double threshold, int max_pairs = 0) {
    if (topics_a.cols() != topics_b.cols())
        throw DataError("competitive_link: vocabulary mismatch");
    const int ta = static_cast<int>(topics_a.rows());
    const int tb = static_cast<int>(topics_b.rows());
    Mat js(ta, tb);
    for (int i = 0; i < ta; ++i)
        for (int j = 0; j < tb; ++j)
            js(i, j) = js_divergence(topics_a.row(i).transpose(),
                                     topics_b.row(j).transpose());
    return competitive_link_js(js, threshold, max_pairs);
}

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

namespace detail {

// Regularized incomplete beta I_x(a, b) via the standard continued fraction
// (modified Lentz iteration).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

inline double ibeta_reg(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

inline double sample_mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_var(std::span<const double> v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace detail

// Two-tailed Welch's t-test on per-seed means. Variances across seeded runs
// are not assumed equal. Zero variance on both sides gives p = 1 for equal
// means and p = 0 otherwise.
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw DataError("welch_t_test: each sample needs >= 2 entries");
    const double ma = detail::sample_mean(a);
    const double mb = detail::sample_mean(b);
    const double va = detail::sample_var(a, ma);
    const double vb = detail::sample_var(b, mb);
    const double sa = va / static_cast<double>(a.size());
    const double sb = vb / static_cast<double>(b.size());
    WelchResult r;
    if (sa + sb == 0.0) {
        r.t = 0.0;
        r.df = static_cast<double>(a.size() + b.size() - 2);
        r.p = (ma == mb) ? 1.0 : 0.0;
        return r;
    }
    r.t = (ma - mb) / std::sqrt(sa + sb);
    r.df = (sa + sb) * (sa + sb) /
           (sa * sa / static_cast<double>(a.size() - 1) +
            sb * sb / static_cast<double>(b.size() - 1));
    // two-tailed p = I_{df/(df+t^2)}(df/2, 1/2)
    r.p = detail::ibeta_reg(r.df / 2.0, 0.5, r.df / (r.df + r.t * r.t));
    return r;
}

// Row-softmax of the decoder matrix: each row becomes that topic's word
// distribution. word_bias is a shared frequency offset and is left out,
// matching the raw-row ranking used for top words.
inline Mat topic_distributions(const ModelParams& p) {
    Mat out(p.dims.topics, p.dims.vocab);
    for (int t = 0; t < p.dims.topics; ++t)
        out.row(t) = softmax(p.topic_word.row(t).transpose()).transpose();
    return out;
}

struct TopicReport {
    struct Topic {
        std::vector<int> word_ids;
        std::vector<std::string> words;
        double npmi = 0.0;
    };
    std::vector<Topic> topics;
    double mean_npmi = 0.0;
    std::string model_id;
    std::uint64_t seed = 0;
    std::string config_digest;
};

inline TopicReport make_topic_report(const ModelParams& params, const Corpus& corpus,
                                     const CooccurrenceStats& stats, int top_n = 10) {
    TopicReport report;
    for (int t = 0; t < params.dims.topics; ++t) {
        TopicReport::Topic topic;
        topic.word_ids = top_words(params, t, top_n);
        for (int id : topic.word_ids)
            topic.words.push_back(corpus.vocab.tokens[static_cast<std::size_t>(id)]);
        topic.npmi = npmi_topic(topic.word_ids, stats);
        report.mean_npmi += topic.npmi;
        report.topics.push_back(std::move(topic));
    }
    if (!report.topics.empty())
        report.mean_npmi /= static_cast<double>(report.topics.size());
    return report;
}

inline double mean_npmi(const ModelParams& params, const CooccurrenceStats& stats,
                        int top_n = 10) {
    double acc = 0.0;
    for (int t = 0; t < params.dims.topics; ++t) {
        const auto ids = top_words(params, t, top_n);
        acc += npmi_topic(ids, stats);
    }
    return params.dims.topics == 0 ? 0.0 : acc / params.dims.topics;
}

inline nlohmann::json topic_report_json(const TopicReport& report) {
    nlohmann::json j;
    j["mean_npmi"] = report.mean_npmi;
    j["model_id"] = report.model_id;
    j["seed"] = report.seed;
    j["config_digest"] = report.config_digest;
    j["topics"] = nlohmann::json::array();
    for (const auto& t : report.topics) {
        j["topics"].push_back({{"word_ids", t.word_ids},
                               {"words", t.words},
                               {"npmi", t.npmi}});
    }
    return j;
}

inline nlohmann::json alignment_json(const AlignmentResult& result) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& p : result.pairs)
        j.push_back({{"a", p.a}, {"b", p.b}, {"js", p.js}});
    return j;
}

// Deterministic per-document topic proportions (noise = 0, theta =
// softmax(mu)) as CSV: doc_id,label,theta_0,...,theta_{T-1}. LF endings,
// byte-stable across re-exports.
inline void export_latents(const ModelParams& params, const Corpus& corpus,
                           std::optional<Split> split, std::ostream& out) {
    out << "doc_id,label";
    for (int t = 0; t < params.dims.topics; ++t) out << ",theta_" << t;
    out << "\n";
    char buf[32];
    for (int d = 0; d < corpus.num_docs(); ++d) {
        if (split && corpus.has_split() &&
            corpus.split_tag[static_cast<std::size_t>(d)] != *split)
            continue;
        const auto& doc = corpus.docs[static_cast<std::size_t>(d)];
        const Vec x = dense_counts(doc, params.dims.vocab);
        Vec cov;
        const Vec* cov_ptr = nullptr;
        if (params.dims.covariates > 0) {
            cov = one_hot(doc.label, params.dims.covariates);
            cov_ptr = &cov;
        }
        const auto fc = forward_mean(x, cov_ptr, params);
        out << d << ',' << doc.label;
        for (int t = 0; t < params.dims.topics; ++t) {
            std::snprintf(buf, sizeof(buf), "%.9g", fc.lat.theta(t));
            out << ',' << buf;
        }
        out << "\n";
    }
}

}  // namespace ctm
