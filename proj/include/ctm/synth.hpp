#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "ctm/corpus.hpp"
#include "ctm/error.hpp"
#include "ctm/rng.hpp"

namespace ctm {

struct SynthCorpus {
    Corpus corpus;
    Eigen::MatrixXd true_topic_word;  // num_topics x vocab_size, rows sum to 1
};

// Ground-truth generator: standard LDA process with symmetric Dirichlet
// priors. Each document draws topic proportions from Dirichlet(doc_sparsity),
// each topic a word distribution from Dirichlet(topic_sparsity), then doc_len
// words topic-by-topic. Labels carry the dominant topic so the corpus can
// exercise the covariate path. tfidf is filled before returning.
inline SynthCorpus synth_lda_corpus(int num_topics, int vocab_size, int num_docs,
                                    int doc_len, double topic_sparsity,
                                    double doc_sparsity, std::uint64_t seed) {
    if (num_topics < 1 || vocab_size < 1 || num_docs < 1 || doc_len < 1)
        throw DataError("synth: all sizes must be >= 1");
    if (topic_sparsity <= 0.0 || doc_sparsity <= 0.0)
        throw DataError("synth: sparsity parameters must be positive");

    Rng rng(mix_seed(seed, 0x53594e54ull));

    SynthCorpus out;
    out.true_topic_word.resize(num_topics, vocab_size);
    for (int t = 0; t < num_topics; ++t) {
        const auto row = rng.dirichlet(topic_sparsity, static_cast<std::size_t>(vocab_size));
        for (int v = 0; v < vocab_size; ++v) out.true_topic_word(t, v) = row[static_cast<std::size_t>(v)];
    }

    Corpus& corpus = out.corpus;
    corpus.vocab.tokens.reserve(static_cast<std::size_t>(vocab_size));
    char name[16];
    for (int v = 0; v < vocab_size; ++v) {
        std::snprintf(name, sizeof(name), "w%04d", v);
        corpus.vocab.token_to_id.emplace(name, v);
        corpus.vocab.tokens.emplace_back(name);
    }
    corpus.vocab.doc_freq.assign(static_cast<std::size_t>(vocab_size), 0);

    for (int d = 0; d < num_docs; ++d) {
        const auto theta = rng.dirichlet(doc_sparsity, static_cast<std::size_t>(num_topics));
        std::map<int, int> counts;
        for (int w = 0; w < doc_len; ++w) {
            const auto topic = rng.categorical(theta);
            // inverse-CDF draw from the topic's word distribution
            double r = rng.uniform01();
            int word = vocab_size - 1;
            for (int v = 0; v < vocab_size; ++v) {
                r -= out.true_topic_word(static_cast<int>(topic), v);
                if (r < 0.0) {
                    word = v;
                    break;
                }
            }
            counts[word] += 1;
        }
        Document doc;
        doc.entries.reserve(counts.size());
        for (const auto& [token, count] : counts) doc.entries.push_back({token, count});
        int best = 0;
        for (int t = 1; t < num_topics; ++t) {
            if (theta[static_cast<std::size_t>(t)] > theta[static_cast<std::size_t>(best)]) best = t;
        }
        doc.label = best;
        for (const auto& e : doc.entries)
            corpus.vocab.doc_freq[static_cast<std::size_t>(e.token)] += 1;
        corpus.docs.push_back(std::move(doc));
    }

    // Tokens that never occurred keep df 0; the dense-id invariant only
    // requires df >= 1 for ingested corpora, synthetic vocabularies keep
    // the full grid so ids match the true matrix columns.
    compute_tfidf(corpus);
    return out;
}

}  // namespace ctm
