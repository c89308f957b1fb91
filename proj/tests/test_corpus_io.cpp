#include <catch2/catch_amalgamated.hpp>

#include "ctm/corpus.hpp"
#include "ctm/corpus_io.hpp"

using namespace ctm;

namespace {

Corpus fixture_corpus() {
    const std::vector<int> labels{0, 1, 0, 1};
    auto corpus = ingest({"red fox jumps", "lazy dog sleeps", "red dog barks",
                          "fox and dog play"},
                         1, {"and"}, 1, 0, &labels);
    compute_tfidf(corpus);
    split_corpus(corpus, 0.5, 0.25, 0.25, 42);
    return corpus;
}

}  // namespace

TEST_CASE("corpus round-trips bit-exactly") {
    const auto corpus = fixture_corpus();
    const auto bytes = serialize_corpus(corpus);
    const auto loaded = deserialize_corpus(bytes);

    REQUIRE(loaded.vocab.tokens == corpus.vocab.tokens);
    REQUIRE(loaded.vocab.doc_freq == corpus.vocab.doc_freq);
    REQUIRE(loaded.docs.size() == corpus.docs.size());
    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
        REQUIRE(loaded.docs[d].label == corpus.docs[d].label);
        REQUIRE(loaded.docs[d].entries.size() == corpus.docs[d].entries.size());
        for (std::size_t i = 0; i < corpus.docs[d].entries.size(); ++i) {
            REQUIRE(loaded.docs[d].entries[i].token == corpus.docs[d].entries[i].token);
            REQUIRE(loaded.docs[d].entries[i].count == corpus.docs[d].entries[i].count);
        }
        // tfidf stored as f32 on both sides: bit-exact equality
        REQUIRE(loaded.tfidf[d] == corpus.tfidf[d]);
    }
    REQUIRE(loaded.split_tag == corpus.split_tag);

    const auto bytes_again = serialize_corpus(loaded);
    REQUIRE(bytes_again == bytes);
}

TEST_CASE("corpus without tfidf or split round-trips") {
    const auto corpus = ingest({"some words here", "more words there"}, 1, {}, 1);
    const auto loaded = deserialize_corpus(serialize_corpus(corpus));
    REQUIRE_FALSE(loaded.has_tfidf());
    REQUIRE_FALSE(loaded.has_split());
    REQUIRE(loaded.vocab.tokens == corpus.vocab.tokens);
}

TEST_CASE("deserialize rejects malformed input") {
    REQUIRE_THROWS_AS(deserialize_corpus("not a corpus"), DataError);
    REQUIRE_THROWS_AS(deserialize_corpus(""), DataError);

    auto bytes = serialize_corpus(fixture_corpus());
    bytes.resize(bytes.size() / 2);  // truncate the binary section
    REQUIRE_THROWS_AS(deserialize_corpus(bytes), DataError);

    auto wrong_magic = serialize_corpus(fixture_corpus());
    wrong_magic[0] = 'X';
    REQUIRE_THROWS_AS(deserialize_corpus(wrong_magic), DataError);
}
