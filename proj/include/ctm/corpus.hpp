#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ctm/error.hpp"
#include "ctm/rng.hpp"

namespace ctm {

struct Vocabulary {
    std::vector<std::string> tokens;               // id -> token, ids dense 0..V-1
    std::unordered_map<std::string, int> token_to_id;
    std::vector<int> doc_freq;                     // id -> number of docs containing it

    int size() const { return static_cast<int>(tokens.size()); }

    int id_of(const std::string& token) const {
        auto it = token_to_id.find(token);
        return it == token_to_id.end() ? -1 : it->second;
    }
};

struct Entry {
    std::int32_t token = 0;
    std::int32_t count = 0;
};

struct Document {
    std::vector<Entry> entries;  // sorted by token id, all counts > 0
    int label = -1;              // optional class id, -1 if absent

    int total_count() const {
        int total = 0;
        for (const auto& e : entries) total += e.count;
        return total;
    }

    int count_of(int token) const {
        auto it = std::lower_bound(entries.begin(), entries.end(), token,
                                   [](const Entry& e, int t) { return e.token < t; });
        return (it != entries.end() && it->token == token) ? it->count : 0;
    }

    int distinct_tokens() const { return static_cast<int>(entries.size()); }
};

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

struct Corpus {
    Vocabulary vocab;
    std::vector<Document> docs;
    // tfidf[d] is aligned entry-for-entry with docs[d].entries, so scores
    // exist exactly where counts do. Stored as f32 to match the on-disk
    // format bit-for-bit.
    std::vector<std::vector<float>> tfidf;
    std::vector<Split> split_tag;  // empty until split_corpus() runs

    int num_docs() const { return static_cast<int>(docs.size()); }
    bool has_tfidf() const { return tfidf.size() == docs.size() && !docs.empty(); }
    bool has_split() const { return split_tag.size() == docs.size() && !docs.empty(); }

    // Smoothed inverse document frequency; never zero, ubiquitous tokens get 1.
    double idf(int token) const {
        const double n = static_cast<double>(docs.size());
        const double df = static_cast<double>(vocab.doc_freq[static_cast<std::size_t>(token)]);
        return std::log((1.0 + n) / (1.0 + df)) + 1.0;
    }

    int num_label_classes() const {
        int max_label = -1;
        for (const auto& d : docs) max_label = std::max(max_label, d.label);
        return max_label + 1;
    }

    std::vector<int> split_indices(Split s) const {
        std::vector<int> out;
        for (int i = 0; i < num_docs(); ++i) {
            if (has_split() && split_tag[static_cast<std::size_t>(i)] != s) continue;
            out.push_back(i);
        }
        return out;
    }
};

// Lowercased maximal runs of ASCII alphanumerics; everything else is a
// boundary. Multibyte sequences are therefore dropped (multilingual input
// is out of scope).
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (unsigned char c : text) {
        const bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                           (c >= '0' && c <= '9');
        if (alnum) {
            current.push_back(static_cast<char>(
                (c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

struct IngestReport {
    std::size_t docs_in = 0;
    std::size_t docs_kept = 0;
    std::size_t docs_dropped_empty = 0;
    std::size_t tokens_raw = 0;
    std::size_t vocab_size = 0;
};

// Builds a vocabulary-indexed corpus from raw text. A token survives if it
// is not a stopword, is longer than min_token_len characters, and appears
// in at least min_df documents. If max_vocab > 0, the surviving tokens are
// further cut to the max_vocab most frequent by total count (ties keep the
// earlier first appearance, then the lexicographically smaller token).
// Documents left empty are dropped and counted in the report. Vocabulary
// ids are assigned by (first-appearance document, token string), which
// keeps ingestion order-deterministic under any parallel tokenization.
inline Corpus ingest(const std::vector<std::string>& raw_docs,
                     int min_df,
                     const std::unordered_set<std::string>& stopwords,
                     int min_token_len,
                     int max_vocab = 0,
                     const std::vector<int>* labels = nullptr,
                     IngestReport* report = nullptr) {
    if (raw_docs.empty()) throw DataError("ingest: no input documents");
    if (min_df < 1) throw DataError("ingest: min_df must be >= 1");
    if (labels && labels->size() != raw_docs.size())
        throw DataError("ingest: label count does not match document count");

    IngestReport rep;
    rep.docs_in = raw_docs.size();

    struct TokenInfo {
        int doc_freq = 0;
        long long total_count = 0;
        int first_doc = 0;
    };

    std::vector<std::vector<std::string>> doc_tokens(raw_docs.size());
    std::unordered_map<std::string, TokenInfo> info;
    for (std::size_t d = 0; d < raw_docs.size(); ++d) {
        doc_tokens[d] = tokenize(raw_docs[d]);
        rep.tokens_raw += doc_tokens[d].size();
        std::unordered_set<std::string> seen;
        for (const auto& tok : doc_tokens[d]) {
            if (static_cast<int>(tok.size()) <= min_token_len) continue;
            if (stopwords.count(tok)) continue;
            auto [it, inserted] = info.try_emplace(tok);
            if (inserted) it->second.first_doc = static_cast<int>(d);
            it->second.total_count += 1;
            if (seen.insert(tok).second) it->second.doc_freq += 1;
        }
    }

    std::vector<const std::pair<const std::string, TokenInfo>*> kept;
    for (const auto& kv : info) {
        if (kv.second.doc_freq >= min_df) kept.push_back(&kv);
    }

    if (max_vocab > 0 && static_cast<int>(kept.size()) > max_vocab) {
        std::sort(kept.begin(), kept.end(), [](const auto* a, const auto* b) {
            if (a->second.total_count != b->second.total_count)
                return a->second.total_count > b->second.total_count;
            if (a->second.first_doc != b->second.first_doc)
                return a->second.first_doc < b->second.first_doc;
            return a->first < b->first;
        });
        kept.resize(static_cast<std::size_t>(max_vocab));
    }

    std::sort(kept.begin(), kept.end(), [](const auto* a, const auto* b) {
        if (a->second.first_doc != b->second.first_doc)
            return a->second.first_doc < b->second.first_doc;
        return a->first < b->first;
    });

    Corpus corpus;
    corpus.vocab.tokens.reserve(kept.size());
    for (const auto* kv : kept) {
        const int id = static_cast<int>(corpus.vocab.tokens.size());
        corpus.vocab.token_to_id.emplace(kv->first, id);
        corpus.vocab.tokens.push_back(kv->first);
        corpus.vocab.doc_freq.push_back(kv->second.doc_freq);
    }
    rep.vocab_size = corpus.vocab.tokens.size();

    for (std::size_t d = 0; d < raw_docs.size(); ++d) {
        std::unordered_map<int, int> counts;
        for (const auto& tok : doc_tokens[d]) {
            const int id = corpus.vocab.id_of(tok);
            if (id >= 0) counts[id] += 1;
        }
        if (counts.empty()) {
            rep.docs_dropped_empty += 1;
            continue;
        }
        Document doc;
        doc.entries.reserve(counts.size());
        for (const auto& [id, c] : counts) {
            doc.entries.push_back({id, c});
        }
        std::sort(doc.entries.begin(), doc.entries.end(),
                  [](const Entry& a, const Entry& b) { return a.token < b.token; });
        if (labels) doc.label = (*labels)[d];
        corpus.docs.push_back(std::move(doc));
    }
    rep.docs_kept = corpus.docs.size();

    if (corpus.docs.empty())
        throw DataError("ingest: all documents empty after filtering");

    // Dropping empty docs can lower the doc frequency ceiling but never the
    // per-token counts (dropped docs contained no kept token).
    if (report) *report = rep;
    return corpus;
}

// Fills tfidf with count * idf, idf(t) = ln((1+N)/(1+df(t))) + 1. The
// smoothing keeps idf strictly positive even for tokens present in every
// document, so top/bottom-k rankings never collapse to all-zero scores.
inline void compute_tfidf(Corpus& corpus) {
    const int n_docs = corpus.num_docs();
    std::vector<double> idf(static_cast<std::size_t>(corpus.vocab.size()));
    for (int t = 0; t < corpus.vocab.size(); ++t)
        idf[static_cast<std::size_t>(t)] = corpus.idf(t);
    corpus.tfidf.assign(static_cast<std::size_t>(n_docs), {});
    for (int d = 0; d < n_docs; ++d) {
        const auto& entries = corpus.docs[static_cast<std::size_t>(d)].entries;
        auto& row = corpus.tfidf[static_cast<std::size_t>(d)];
        row.reserve(entries.size());
        for (const auto& e : entries) {
            row.push_back(static_cast<float>(
                static_cast<double>(e.count) * idf[static_cast<std::size_t>(e.token)]));
        }
    }
}

// Deterministic shuffle-then-cut split. Cumulative rounding keeps every
// split within one document of its exact fraction.
inline void split_corpus(Corpus& corpus, double train, double val, double test,
                         std::uint64_t seed) {
    if (train < 0.0 || val < 0.0 || test < 0.0)
        throw DataError("split: negative ratio");
    if (std::abs(train + val + test - 1.0) > 1e-9)
        throw DataError("split: ratios must sum to 1");

    const int n = corpus.num_docs();
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const auto n_train = static_cast<std::int64_t>(std::llround(train * n));
    const auto n_train_val = static_cast<std::int64_t>(std::llround((train + val) * n));
    corpus.split_tag.assign(static_cast<std::size_t>(n), Split::test);
    for (std::int64_t i = 0; i < n; ++i) {
        const auto doc = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
        corpus.split_tag[doc] =
            i < n_train ? Split::train : (i < n_train_val ? Split::val : Split::test);
    }
}

// Rebuilds a document's text as space-separated tokens in id order. Feeding
// the result back through ingest() reproduces the same vocabulary and counts.
inline std::string detokenize(const Corpus& corpus, int doc_index) {
    std::string out;
    for (const auto& e : corpus.docs[static_cast<std::size_t>(doc_index)].entries) {
        for (int c = 0; c < e.count; ++c) {
            if (!out.empty()) out.push_back(' ');
            out += corpus.vocab.tokens[static_cast<std::size_t>(e.token)];
        }
    }
    return out;
}

}  // namespace ctm
