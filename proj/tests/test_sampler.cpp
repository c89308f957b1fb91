#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "ctm/corpus.hpp"
#include "ctm/sampler.hpp"

using namespace ctm;

namespace {

Document make_doc(std::initializer_list<std::pair<int, int>> entries) {
    Document doc;
    for (const auto& [token, count] : entries) doc.entries.push_back({token, count});
    return doc;
}

std::vector<TokenScore> make_scores(std::initializer_list<std::pair<int, double>> s) {
    std::vector<TokenScore> out;
    for (const auto& [token, score] : s) out.push_back({token, score});
    return out;
}

}  // namespace

TEST_CASE("importance measures") {
    const auto doc = make_doc({{0, 3}, {2, 1}, {3, 2}});
    const std::vector<float> tfidf_row{4.5f, 1.4f, 2.0f};

    SECTION("tf returns raw counts") {
        const auto s = importance_scores(doc, tfidf_row, ImportanceMeasure::tf);
        REQUIRE(s.size() == 3);
        REQUIRE(s[0].token == 0);
        REQUIRE(s[0].score == 3.0);
        REQUIRE(s[1].score == 1.0);
        REQUIRE(s[2].score == 2.0);
    }
    SECTION("tfidf passes the precomputed row through") {
        const auto s = importance_scores(doc, tfidf_row, ImportanceMeasure::tfidf);
        REQUIRE(s[0].score == Catch::Approx(4.5));
        REQUIRE(s[1].score == Catch::Approx(1.4));
        REQUIRE(s[2].score == Catch::Approx(2.0));
    }
    SECTION("idf recovers tfidf / count") {
        const auto s = importance_scores(doc, tfidf_row, ImportanceMeasure::idf);
        REQUIRE(s[0].score == Catch::Approx(1.5));
        REQUIRE(s[1].score == Catch::Approx(1.4));
        REQUIRE(s[2].score == Catch::Approx(1.0));
    }
    SECTION("misaligned row is rejected") {
        const std::vector<float> wrong{1.0f};
        REQUIRE_THROWS_AS(importance_scores(doc, wrong, ImportanceMeasure::tf), DataError);
    }
}

TEST_CASE("idf importance ranks ubiquitous tokens lowest") {
    auto corpus = ingest({"aa bb cc", "aa dd", "aa bb"}, 1, {}, 1);
    compute_tfidf(corpus);
    const int everywhere = corpus.vocab.id_of("aa");
    const auto& doc = corpus.docs[0];
    const auto s = importance_scores(doc, corpus.tfidf[0], ImportanceMeasure::idf);
    double min_score = 1e300;
    int min_token = -1;
    for (const auto& ts : s) {
        if (ts.score < min_score) {
            min_score = ts.score;
            min_token = ts.token;
        }
    }
    REQUIRE(min_token == everywhere);
}

TEST_CASE("word-based pair substitutes reconstructed weights") {
    // x = (3,0,1,2), recon = (2.5,0.2,0.9,1.1); token 0 ranks highest,
    // token 2 lowest among present tokens
    Vec x(4);
    x << 3, 0, 1, 2;
    Vec recon(4);
    recon << 2.5, 0.2, 0.9, 1.1;
    const auto scores = make_scores({{0, 5.0}, {2, 0.5}, {3, 2.0}});

    const auto pair = word_based_pair(x, recon, scores, 1);
    REQUIRE(pair.neg_indices == std::vector<int>{0});
    REQUIRE(pair.pos_indices == std::vector<int>{2});
    REQUIRE(pair.x_neg(0) == Catch::Approx(2.5));
    REQUIRE(pair.x_neg(1) == 0.0);
    REQUIRE(pair.x_neg(2) == 1.0);
    REQUIRE(pair.x_neg(3) == 2.0);
    REQUIRE(pair.x_pos(0) == 3.0);
    REQUIRE(pair.x_pos(2) == Catch::Approx(0.9));
    REQUIRE_FALSE(pair.degenerate);
}

TEST_CASE("k shrinks to half the distinct-token count") {
    Vec x(5);
    x << 1, 1, 1, 0, 0;
    Vec recon = Vec::Constant(5, 0.5);
    const auto scores = make_scores({{0, 3.0}, {1, 2.0}, {2, 1.0}});
    const auto pair = word_based_pair(x, recon, scores, 15);
    REQUIRE(pair.neg_indices.size() == 1);  // floor(3/2) = 1
    REQUIRE(pair.pos_indices.size() == 1);
    REQUIRE(pair.neg_indices[0] == 0);
    REQUIRE(pair.pos_indices[0] == 2);
}

TEST_CASE("single-token documents degenerate") {
    Vec x(3);
    x << 0, 4, 0;
    Vec recon = Vec::Constant(3, 1.0);
    const auto pair = word_based_pair(x, recon, make_scores({{1, 2.0}}), 5);
    REQUIRE(pair.degenerate);
    REQUIRE(pair.x_pos == x);
    REQUIRE(pair.x_neg == x);
    REQUIRE(pair.pos_indices.empty());

    REQUIRE_THROWS_AS(word_based_pair(x, recon, make_scores({{1, 2.0}}), 0), DataError);
}

TEST_CASE("zero-sampling forces substituted weights to zero") {
    Vec x(4);
    x << 3, 0, 1, 2;
    const auto scores = make_scores({{0, 5.0}, {2, 0.5}, {3, 2.0}});

    const auto pair = zero_sampling_pair(x, scores, 1);
    REQUIRE(pair.x_neg(0) == 0.0);
    REQUIRE(pair.x_neg(2) == 1.0);
    REQUIRE(pair.x_pos(2) == 0.0);
    REQUIRE(pair.x_pos(0) == 3.0);
}

TEST_CASE("equal scores rank by token id and stay disjoint") {
    Vec x(6);
    x << 1, 1, 1, 1, 1, 1;
    Vec recon = Vec::Constant(6, 0.4);
    const auto scores =
        make_scores({{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}, {4, 1.0}, {5, 1.0}});

    const auto pair = word_based_pair(x, recon, scores, 3);
    REQUIRE(pair.neg_indices == std::vector<int>{0, 1, 2});
    REQUIRE(pair.pos_indices == std::vector<int>{5, 4, 3});

    // all counts equal, k = d: the shrink rule kicks in
    const auto shrunk = word_based_pair(x, recon, scores, 6);
    REQUIRE(shrunk.neg_indices.size() == 3);
    REQUIRE(shrunk.pos_indices.size() == 3);
}

TEST_CASE("pair locality and disjointness over random documents") {
    Rng rng(63);
    for (int it = 0; it < 200; ++it) {
        const int vocab = 20;
        Vec x = Vec::Zero(vocab);
        std::vector<TokenScore> scores;
        for (int v = 0; v < vocab; ++v) {
            if (rng.uniform01() < 0.5) {
                x(v) = 1.0 + static_cast<double>(rng.below(5));
                // coarse scores force plenty of ties
                scores.push_back({v, static_cast<double>(rng.below(4))});
            }
        }
        if (scores.empty()) {
            x(0) = 1.0;
            scores.push_back({0, 1.0});
        }
        Vec recon = Vec::Constant(vocab, 0.3);
        const int k = 1 + static_cast<int>(rng.below(8));
        const auto pair = word_based_pair(x, recon, scores, k);

        std::set<int> pos(pair.pos_indices.begin(), pair.pos_indices.end());
        std::set<int> neg(pair.neg_indices.begin(), pair.neg_indices.end());
        for (int t : pos) REQUIRE_FALSE(neg.count(t));
        REQUIRE(pos.size() == pair.pos_indices.size());
        REQUIRE(neg.size() == pair.neg_indices.size());

        int pos_diff = 0, neg_diff = 0;
        for (int v = 0; v < vocab; ++v) {
            if (pair.x_pos(v) != x(v)) pos_diff += 1;
            if (pair.x_neg(v) != x(v)) neg_diff += 1;
        }
        REQUIRE(pos_diff <= k);
        REQUIRE(neg_diff <= k);
    }
}

TEST_CASE("perfect reconstruction degenerates the pair toward the prototype") {
    Vec x(5);
    x << 2, 0, 3, 1, 4;
    const auto scores = make_scores({{0, 4.0}, {2, 3.0}, {3, 1.0}, {4, 2.0}});
    const auto pair = word_based_pair(x, x, scores, 2);
    REQUIRE(pair.x_pos == x);
    REQUIRE(pair.x_neg == x);
    REQUIRE_FALSE(pair.degenerate);  // indices chosen, values identical
}

TEST_CASE("identical inputs produce identical pairs") {
    Vec x(5);
    x << 1, 2, 0, 3, 0;
    Vec recon = Vec::Constant(5, 0.7);
    const auto scores = make_scores({{0, 2.0}, {1, 3.0}, {3, 1.0}});
    const auto a = word_based_pair(x, recon, scores, 1);
    const auto b = word_based_pair(x, recon, scores, 1);
    REQUIRE(a.x_pos == b.x_pos);
    REQUIRE(a.x_neg == b.x_neg);
    REQUIRE(a.pos_indices == b.pos_indices);
    REQUIRE(a.neg_indices == b.neg_indices);
}

TEST_CASE("random-doc negatives draw a different document") {
    auto corpus = ingest({"first doc tokens", "second doc words"}, 1, {}, 1);
    SECTION("two documents force the other one") {
        Rng rng(1);
        const Vec neg = random_doc_negative(corpus, 0, rng);
        const Vec expected = dense_counts(corpus.docs[1], corpus.vocab.size());
        REQUIRE(neg == expected);
    }
    SECTION("never draws the prototype") {
        auto big = ingest({"aa bb", "cc dd", "ee ff", "gg hh", "ii jj"}, 1, {}, 1);
        Rng rng(9);
        for (int it = 0; it < 200; ++it) {
            const int pick = random_doc_negative_index(big.num_docs(), 2, rng);
            REQUIRE(pick != 2);
            REQUIRE(pick >= 0);
            REQUIRE(pick < big.num_docs());
        }
    }
    SECTION("fixed seed reproduces the draw sequence") {
        auto big = ingest({"aa bb", "cc dd", "ee ff", "gg hh"}, 1, {}, 1);
        Rng r1(33), r2(33);
        for (int it = 0; it < 50; ++it) {
            REQUIRE(random_doc_negative_index(4, 1, r1) ==
                    random_doc_negative_index(4, 1, r2));
        }
    }
    SECTION("single-document corpus is rejected") {
        auto solo = ingest({"only doc"}, 1, {}, 1);
        Rng rng(2);
        REQUIRE_THROWS_AS(random_doc_negative(solo, 0, rng), DataError);
    }
}

TEST_CASE("topic-based pair draws salient words from dominant topics") {
    const int vocab = 8;
    Mat topic_word(2, vocab);
    topic_word.row(0) << 9, 8, 7, 0, 0, 0, 0, 0;  // topic 0: tokens 0,1,2
    topic_word.row(1) << 0, 0, 0, 0, 9, 8, 7, 0;  // topic 1: tokens 4,5,6
    Vec x(vocab);
    x << 2, 1, 0, 3, 1, 0, 0, 2;
    Vec recon = Vec::Constant(vocab, 0.5);

    SECTION("M = 1 takes the single dominant topic's top words") {
        Vec theta(2);
        theta << 0.9, 0.1;
        const auto pair = topic_based_pair(x, theta, topic_word, 1, 3, recon);
        REQUIRE(pair.neg_indices == std::vector<int>{0, 1, 2});
        for (int t : pair.neg_indices) REQUIRE(pair.x_neg(t) == Catch::Approx(0.5));
        // positives come from present tokens outside the salient set
        for (int t : pair.pos_indices) {
            REQUIRE(x(t) > 0.0);
            REQUIRE(std::find(pair.neg_indices.begin(), pair.neg_indices.end(), t) ==
                    pair.neg_indices.end());
        }
    }
    SECTION("M = k takes one word per selected topic") {
        Vec theta(2);
        theta << 0.6, 0.4;
        const auto pair = topic_based_pair(x, theta, topic_word, 2, 2, recon);
        REQUIRE(pair.neg_indices == std::vector<int>{0, 4});
    }
    SECTION("uniform theta breaks the topic tie by index") {
        Vec theta(2);
        theta << 0.5, 0.5;
        const auto pair = topic_based_pair(x, theta, topic_word, 1, 2, recon);
        REQUIRE(pair.neg_indices == std::vector<int>{0, 1});  // topic 0 wins the tie
    }
    SECTION("M out of range is rejected") {
        Vec theta(2);
        theta << 0.5, 0.5;
        REQUIRE_THROWS_AS(topic_based_pair(x, theta, topic_word, 3, 2, recon), DataError);
        REQUIRE_THROWS_AS(topic_based_pair(x, theta, topic_word, 0, 2, recon), DataError);
    }
}
