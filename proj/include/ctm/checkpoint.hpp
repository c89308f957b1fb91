#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctm/error.hpp"
#include "ctm/model.hpp"

// Checkpoint container (single file):
//   bytes 0..3   magic "CTMK"
//   bytes 4..7   manifest length M, little-endian uint32
//   bytes 8..8+M JSON manifest: format_version, V, T, H, C, beta0, config,
//                tensors: name -> {shape, dtype "f32le", offset (bytes into blob)}
//   then         one contiguous blob of row-major little-endian f32 values
//
// Tensor order in the blob is fixed (enc_w, enc_b, mu_w, mu_b, logvar_w,
// logvar_b, topic_word, word_bias); loading validates names, shapes and
// offsets against the declared dimensions.

namespace ctm {

namespace detail {

struct NamedTensor {
    const char* name;
    const Mat* mat;  // one of mat/vec set
    const Vec* vec;
};

inline std::vector<NamedTensor> tensor_table(const ModelParams& p) {
    return {
        {"enc_w", &p.enc_w, nullptr},      {"enc_b", nullptr, &p.enc_b},
        {"mu_w", &p.mu_w, nullptr},        {"mu_b", nullptr, &p.mu_b},
        {"logvar_w", &p.logvar_w, nullptr}, {"logvar_b", nullptr, &p.logvar_b},
        {"topic_word", &p.topic_word, nullptr}, {"word_bias", nullptr, &p.word_bias},
    };
}

inline void append_f32le(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    out.push_back(static_cast<char>(bits & 0xFF));
    out.push_back(static_cast<char>((bits >> 8) & 0xFF));
    out.push_back(static_cast<char>((bits >> 16) & 0xFF));
    out.push_back(static_cast<char>((bits >> 24) & 0xFF));
}

inline float read_f32le(const unsigned char* p) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                               (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) |
                               (static_cast<std::uint32_t>(p[3]) << 24);
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

}  // namespace detail

struct Checkpoint {
    ModelParams params;
    nlohmann::json config;  // resolved training configuration
    double beta0 = 1.0;
};

// Parameters as they will read back from an f32 checkpoint. Anything that
// must be reproducible from saved state (the audit record) is computed on
// these values.
inline ModelParams quantize_f32(ModelParams p) {
    p.for_each_tensor([](auto& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i)
            t.data()[i] = static_cast<double>(static_cast<float>(t.data()[i]));
    });
    return p;
}

inline std::string serialize_checkpoint(const ModelParams& params,
                                        const nlohmann::json& config, double beta0) {
    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["V"] = params.dims.vocab;
    manifest["T"] = params.dims.topics;
    manifest["H"] = params.dims.hidden;
    manifest["C"] = params.dims.covariates;
    manifest["beta0"] = beta0;
    manifest["config"] = config;

    std::string blob;
    nlohmann::json tensors;
    for (const auto& t : detail::tensor_table(params)) {
        nlohmann::json entry;
        entry["dtype"] = "f32le";
        entry["offset"] = blob.size();
        if (t.mat) {
            entry["shape"] = {t.mat->rows(), t.mat->cols()};
            for (Eigen::Index r = 0; r < t.mat->rows(); ++r)
                for (Eigen::Index c = 0; c < t.mat->cols(); ++c)
                    detail::append_f32le(blob, static_cast<float>((*t.mat)(r, c)));
        } else {
            entry["shape"] = {t.vec->size()};
            for (Eigen::Index i = 0; i < t.vec->size(); ++i)
                detail::append_f32le(blob, static_cast<float>((*t.vec)(i)));
        }
        tensors[t.name] = std::move(entry);
    }
    manifest["tensors"] = std::move(tensors);

    const std::string mtext = manifest.dump();
    std::string out;
    out.reserve(8 + mtext.size() + blob.size());
    out += "CTMK";
    const auto mlen = static_cast<std::uint32_t>(mtext.size());
    out.push_back(static_cast<char>(mlen & 0xFF));
    out.push_back(static_cast<char>((mlen >> 8) & 0xFF));
    out.push_back(static_cast<char>((mlen >> 16) & 0xFF));
    out.push_back(static_cast<char>((mlen >> 24) & 0xFF));
    out += mtext;
    out += blob;
    return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
    if (bytes.size() < 8 || bytes.compare(0, 4, "CTMK") != 0)
        throw DataError("checkpoint: bad magic");
    const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t mlen = static_cast<std::uint32_t>(u[4]) |
                               (static_cast<std::uint32_t>(u[5]) << 8) |
                               (static_cast<std::uint32_t>(u[6]) << 16) |
                               (static_cast<std::uint32_t>(u[7]) << 24);
    if (bytes.size() < 8 + static_cast<std::size_t>(mlen))
        throw DataError("checkpoint: truncated manifest");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(bytes.substr(8, mlen));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: manifest parse error: ") + e.what());
    }

    ModelDims dims;
    dims.vocab = manifest.at("V").get<int>();
    dims.topics = manifest.at("T").get<int>();
    dims.hidden = manifest.at("H").get<int>();
    dims.covariates = manifest.at("C").get<int>();

    Checkpoint ck;
    ck.params = ModelParams::zeros(dims);
    ck.beta0 = manifest.at("beta0").get<double>();
    if (manifest.contains("config")) ck.config = manifest.at("config");

    const unsigned char* blob = u + 8 + mlen;
    const std::size_t blob_size = bytes.size() - 8 - mlen;
    const auto& tensors = manifest.at("tensors");

    auto load = [&](const char* name, Mat* mat, Vec* vec) {
        if (!tensors.contains(name))
            throw DataError(std::string("checkpoint: missing tensor ") + name);
        const auto& entry = tensors.at(name);
        if (entry.at("dtype").get<std::string>() != "f32le")
            throw DataError(std::string("checkpoint: unsupported dtype for ") + name);
        const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
        const auto offset = entry.at("offset").get<std::size_t>();
        std::size_t count = 1;
        for (auto s : shape) count *= static_cast<std::size_t>(s);
        if (offset + count * 4 > blob_size)
            throw DataError(std::string("checkpoint: tensor out of bounds: ") + name);
        const unsigned char* src = blob + offset;
        if (mat) {
            if (shape.size() != 2 || shape[0] != mat->rows() || shape[1] != mat->cols())
                throw DataError(std::string("checkpoint: shape mismatch for ") + name);
            for (Eigen::Index r = 0; r < mat->rows(); ++r)
                for (Eigen::Index c = 0; c < mat->cols(); ++c, src += 4)
                    (*mat)(r, c) = static_cast<double>(detail::read_f32le(src));
        } else {
            if (shape.size() != 1 || shape[0] != vec->size())
                throw DataError(std::string("checkpoint: shape mismatch for ") + name);
            for (Eigen::Index i = 0; i < vec->size(); ++i, src += 4)
                (*vec)(i) = static_cast<double>(detail::read_f32le(src));
        }
    };

    load("enc_w", &ck.params.enc_w, nullptr);
    load("enc_b", nullptr, &ck.params.enc_b);
    load("mu_w", &ck.params.mu_w, nullptr);
    load("mu_b", nullptr, &ck.params.mu_b);
    load("logvar_w", &ck.params.logvar_w, nullptr);
    load("logvar_b", nullptr, &ck.params.logvar_b);
    load("topic_word", &ck.params.topic_word, nullptr);
    load("word_bias", nullptr, &ck.params.word_bias);
    return ck;
}

inline void save_checkpoint(const ModelParams& params, const nlohmann::json& config,
                            double beta0, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    const std::string bytes = serialize_checkpoint(params, config, beta0);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace ctm
