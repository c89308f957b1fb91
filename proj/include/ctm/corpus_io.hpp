#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctm/corpus.hpp"
#include "ctm/error.hpp"

// Corpus container format (single file):
//   bytes 0..3   magic "CTMC"
//   bytes 4..7   manifest length M, little-endian uint32
//   bytes 8..8+M JSON manifest (UTF-8): format_version, V, N, entries,
//                has_tfidf, vocab list, doc_freq, labels, splits
//   then         entries * 3 little-endian int32: (doc index, token id, count),
//                ordered by (doc ascending, token id ascending)
//   then, if has_tfidf, entries little-endian f32 tfidf values in the same order
//
// The entry ordering is canonical, so save(load(f)) reproduces f byte for byte.

namespace ctm {

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline void put_i32le(std::string& out, std::int32_t v) {
    put_u32le(out, static_cast<std::uint32_t>(v));
}

inline void put_f32le(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u32le(out, bits);
}

struct ByteReader {
    const unsigned char* p;
    const unsigned char* end;

    std::uint32_t u32le() {
        if (end - p < 4) throw DataError("corpus file: truncated binary section");
        const std::uint32_t v = static_cast<std::uint32_t>(p[0]) |
                                (static_cast<std::uint32_t>(p[1]) << 8) |
                                (static_cast<std::uint32_t>(p[2]) << 16) |
                                (static_cast<std::uint32_t>(p[3]) << 24);
        p += 4;
        return v;
    }

    std::int32_t i32le() { return static_cast<std::int32_t>(u32le()); }

    float f32le() {
        const std::uint32_t bits = u32le();
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
};

}  // namespace detail

inline std::string serialize_corpus(const Corpus& corpus) {
    std::size_t entries = 0;
    for (const auto& d : corpus.docs) entries += d.entries.size();

    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["V"] = corpus.vocab.size();
    manifest["N"] = corpus.num_docs();
    manifest["entries"] = entries;
    manifest["has_tfidf"] = corpus.has_tfidf();
    manifest["vocab"] = corpus.vocab.tokens;
    manifest["doc_freq"] = corpus.vocab.doc_freq;
    {
        std::vector<int> labels(corpus.docs.size());
        for (std::size_t d = 0; d < corpus.docs.size(); ++d) labels[d] = corpus.docs[d].label;
        manifest["labels"] = labels;
    }
    if (corpus.has_split()) {
        std::vector<int> tags(corpus.split_tag.size());
        for (std::size_t d = 0; d < corpus.split_tag.size(); ++d)
            tags[d] = static_cast<int>(corpus.split_tag[d]);
        manifest["splits"] = tags;
    }

    const std::string mtext = manifest.dump();
    std::string out;
    out.reserve(8 + mtext.size() + entries * 16);
    out += "CTMC";
    detail::put_u32le(out, static_cast<std::uint32_t>(mtext.size()));
    out += mtext;

    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
        for (const auto& e : corpus.docs[d].entries) {
            detail::put_i32le(out, static_cast<std::int32_t>(d));
            detail::put_i32le(out, e.token);
            detail::put_i32le(out, e.count);
        }
    }
    if (corpus.has_tfidf()) {
        for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
            for (float v : corpus.tfidf[d]) detail::put_f32le(out, v);
        }
    }
    return out;
}

inline Corpus deserialize_corpus(const std::string& bytes) {
    if (bytes.size() < 8 || bytes.compare(0, 4, "CTMC") != 0)
        throw DataError("corpus file: bad magic");
    detail::ByteReader header{
        reinterpret_cast<const unsigned char*>(bytes.data()) + 4,
        reinterpret_cast<const unsigned char*>(bytes.data()) + bytes.size()};
    const std::uint32_t mlen = header.u32le();
    if (bytes.size() < 8 + static_cast<std::size_t>(mlen))
        throw DataError("corpus file: truncated manifest");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(bytes.substr(8, mlen));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("corpus file: manifest parse error: ") + e.what());
    }

    Corpus corpus;
    const int v_count = manifest.at("V").get<int>();
    const int n_docs = manifest.at("N").get<int>();
    const auto entries = manifest.at("entries").get<std::size_t>();
    const bool has_tfidf = manifest.at("has_tfidf").get<bool>();
    corpus.vocab.tokens = manifest.at("vocab").get<std::vector<std::string>>();
    corpus.vocab.doc_freq = manifest.at("doc_freq").get<std::vector<int>>();
    if (static_cast<int>(corpus.vocab.tokens.size()) != v_count ||
        static_cast<int>(corpus.vocab.doc_freq.size()) != v_count)
        throw DataError("corpus file: vocab size mismatch");
    for (int i = 0; i < v_count; ++i)
        corpus.vocab.token_to_id.emplace(corpus.vocab.tokens[static_cast<std::size_t>(i)], i);

    const auto labels = manifest.at("labels").get<std::vector<int>>();
    if (static_cast<int>(labels.size()) != n_docs)
        throw DataError("corpus file: label count mismatch");

    detail::ByteReader body{
        reinterpret_cast<const unsigned char*>(bytes.data()) + 8 + mlen,
        reinterpret_cast<const unsigned char*>(bytes.data()) + bytes.size()};

    corpus.docs.resize(static_cast<std::size_t>(n_docs));
    for (int d = 0; d < n_docs; ++d) corpus.docs[static_cast<std::size_t>(d)].label = labels[static_cast<std::size_t>(d)];

    std::vector<int> entry_doc;
    entry_doc.reserve(entries);
    int last_doc = -1;
    int last_token = -1;
    for (std::size_t i = 0; i < entries; ++i) {
        const std::int32_t doc = body.i32le();
        const std::int32_t token = body.i32le();
        const std::int32_t count = body.i32le();
        if (doc < 0 || doc >= n_docs) throw DataError("corpus file: entry doc out of range");
        if (token < 0 || token >= v_count) throw DataError("corpus file: entry token out of range");
        if (count <= 0) throw DataError("corpus file: entry count must be positive");
        if (doc < last_doc || (doc == last_doc && token <= last_token))
            throw DataError("corpus file: entries not in canonical (doc, token) order");
        last_doc = doc;
        last_token = token;
        corpus.docs[static_cast<std::size_t>(doc)].entries.push_back({token, count});
        entry_doc.push_back(doc);
    }
    if (has_tfidf) {
        corpus.tfidf.resize(static_cast<std::size_t>(n_docs));
        for (int doc : entry_doc)
            corpus.tfidf[static_cast<std::size_t>(doc)].push_back(body.f32le());
    }

    if (manifest.contains("splits")) {
        const auto tags = manifest.at("splits").get<std::vector<int>>();
        if (static_cast<int>(tags.size()) != n_docs)
            throw DataError("corpus file: split tag count mismatch");
        corpus.split_tag.resize(static_cast<std::size_t>(n_docs));
        for (int d = 0; d < n_docs; ++d) {
            if (tags[static_cast<std::size_t>(d)] < 0 || tags[static_cast<std::size_t>(d)] > 2)
                throw DataError("corpus file: invalid split tag");
            corpus.split_tag[static_cast<std::size_t>(d)] =
                static_cast<Split>(tags[static_cast<std::size_t>(d)]);
        }
    }
    return corpus;
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    const std::string bytes = serialize_corpus(corpus);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path);
}

inline Corpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return deserialize_corpus(bytes);
}

}  // namespace ctm
