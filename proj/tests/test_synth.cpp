#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ctm/synth.hpp"

using namespace ctm;

TEST_CASE("single-topic corpus draws every document from one distribution") {
    const auto synth = synth_lda_corpus(1, 50, 20, 30, 0.5, 0.5, 9);
    REQUIRE(synth.true_topic_word.rows() == 1);
    REQUIRE(synth.true_topic_word.row(0).sum() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(synth.corpus.num_docs() == 20);
    for (const auto& doc : synth.corpus.docs) {
        REQUIRE(doc.total_count() == 30);
        REQUIRE(doc.label == 0);
    }
}

TEST_CASE("different seeds give different corpora with identical shape") {
    const auto a = synth_lda_corpus(3, 60, 40, 25, 0.2, 0.3, 1);
    const auto b = synth_lda_corpus(3, 60, 40, 25, 0.2, 0.3, 2);
    REQUIRE(a.corpus.num_docs() == b.corpus.num_docs());
    REQUIRE(a.corpus.vocab.tokens == b.corpus.vocab.tokens);
    bool any_difference = false;
    for (int d = 0; d < a.corpus.num_docs() && !any_difference; ++d) {
        const auto& da = a.corpus.docs[static_cast<std::size_t>(d)].entries;
        const auto& db = b.corpus.docs[static_cast<std::size_t>(d)].entries;
        if (da.size() != db.size()) {
            any_difference = true;
            break;
        }
        for (std::size_t i = 0; i < da.size(); ++i) {
            if (da[i].token != db[i].token || da[i].count != db[i].count) {
                any_difference = true;
                break;
            }
        }
    }
    REQUIRE(any_difference);
}

TEST_CASE("same seed reproduces the corpus exactly") {
    const auto a = synth_lda_corpus(4, 80, 30, 20, 0.1, 0.2, 77);
    const auto b = synth_lda_corpus(4, 80, 30, 20, 0.1, 0.2, 77);
    REQUIRE(a.true_topic_word == b.true_topic_word);
    for (int d = 0; d < a.corpus.num_docs(); ++d) {
        const auto& da = a.corpus.docs[static_cast<std::size_t>(d)].entries;
        const auto& db = b.corpus.docs[static_cast<std::size_t>(d)].entries;
        REQUIRE(da.size() == db.size());
        for (std::size_t i = 0; i < da.size(); ++i) {
            REQUIRE(da[i].token == db[i].token);
            REQUIRE(da[i].count == db[i].count);
        }
    }
}

TEST_CASE("empirical word frequencies converge to the mixture marginal") {
    // Documents are compound multinomials: within a document, word draws
    // share theta_d, so the per-word count variance is
    //   N [ L m (1-m) + L (L-1) Var(q) ],
    //   Var(q_v) = ((1/K) sum_k phi_kv^2 - m_v^2) / (K alpha + 1),
    // the multinomial term plus the within-document covariance.
    const int topics = 5, vocab = 200, docs = 2000, len = 80;
    const double doc_sparsity = 0.2;
    const auto synth = synth_lda_corpus(topics, vocab, docs, len, 0.08, doc_sparsity, 8);

    Eigen::VectorXd counts = Eigen::VectorXd::Zero(vocab);
    for (const auto& doc : synth.corpus.docs)
        for (const auto& e : doc.entries) counts(e.token) += e.count;
    const double total = static_cast<double>(docs) * len;

    for (int v = 0; v < vocab; ++v) {
        double m = 0.0;
        double sq = 0.0;
        for (int t = 0; t < topics; ++t) {
            m += synth.true_topic_word(t, v);
            sq += synth.true_topic_word(t, v) * synth.true_topic_word(t, v);
        }
        m /= topics;
        sq /= topics;
        const double var_q = (sq - m * m) / (topics * doc_sparsity + 1.0);
        const double var_count =
            docs * (len * m * (1.0 - m) + len * (len - 1.0) * var_q);
        const double sigma = std::sqrt(var_count);
        REQUIRE(std::abs(counts(v) - total * m) <= 3.0 * sigma + 1e-9);
    }
}

TEST_CASE("synth rejects non-positive parameters") {
    REQUIRE_THROWS_AS(synth_lda_corpus(0, 10, 10, 10, 0.1, 0.1, 0), DataError);
    REQUIRE_THROWS_AS(synth_lda_corpus(2, 10, 10, 10, 0.0, 0.1, 0), DataError);
    REQUIRE_THROWS_AS(synth_lda_corpus(2, 10, 10, 10, 0.1, -1.0, 0), DataError);
}
