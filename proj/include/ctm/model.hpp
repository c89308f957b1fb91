#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ctm/corpus.hpp"
#include "ctm/rng.hpp"

namespace ctm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kLogvarClamp = 10.0;
inline constexpr double kProbFloor = 1e-12;

struct ModelDims {
    int vocab = 0;
    int topics = 0;
    int hidden = 0;
    int covariates = 0;  // one-hot width, 0 when unused

    int input_width() const { return vocab + covariates; }

    bool operator==(const ModelDims&) const = default;
};

// Encoder, variational heads and decoder of the topic VAE. The same struct
// doubles as the gradient accumulator (field-for-field shapes match).
struct ModelParams {
    ModelDims dims;
    Mat enc_w;      // hidden x (vocab + covariates)
    Vec enc_b;      // hidden
    Mat mu_w;       // topics x hidden
    Vec mu_b;       // topics
    Mat logvar_w;   // topics x hidden
    Vec logvar_b;   // topics
    Mat topic_word; // topics x vocab
    Vec word_bias;  // vocab

    static ModelParams zeros(ModelDims d) {
        ModelParams p;
        p.dims = d;
        p.enc_w = Mat::Zero(d.hidden, d.input_width());
        p.enc_b = Vec::Zero(d.hidden);
        p.mu_w = Mat::Zero(d.topics, d.hidden);
        p.mu_b = Vec::Zero(d.topics);
        p.logvar_w = Mat::Zero(d.topics, d.hidden);
        p.logvar_b = Vec::Zero(d.topics);
        p.topic_word = Mat::Zero(d.topics, d.vocab);
        p.word_bias = Vec::Zero(d.vocab);
        return p;
    }

    // Scaled-Gaussian init; weights get 1/sqrt(fan_in), biases start at zero.
    static ModelParams random_init(ModelDims d, Rng& rng) {
        ModelParams p = zeros(d);
        auto fill = [&rng](Mat& m, double scale) {
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                for (Eigen::Index i = 0; i < m.rows(); ++i)
                    m(i, j) = scale * rng.normal();
        };
        fill(p.enc_w, 1.0 / std::sqrt(static_cast<double>(d.input_width())));
        fill(p.mu_w, 1.0 / std::sqrt(static_cast<double>(d.hidden)));
        fill(p.logvar_w, 1.0 / std::sqrt(static_cast<double>(d.hidden)));
        fill(p.topic_word, 0.02);
        return p;
    }

    template <class F>
    void for_each_tensor(F&& f) {
        f(enc_w);
        f(enc_b);
        f(mu_w);
        f(mu_b);
        f(logvar_w);
        f(logvar_b);
        f(topic_word);
        f(word_bias);
    }

    template <class F>
    void for_each_tensor(F&& f) const {
        f(enc_w);
        f(enc_b);
        f(mu_w);
        f(mu_b);
        f(logvar_w);
        f(logvar_b);
        f(topic_word);
        f(word_bias);
    }

    template <class F>
    static void for_each_pair(ModelParams& a, const ModelParams& b, F&& f) {
        f(a.enc_w, b.enc_w);
        f(a.enc_b, b.enc_b);
        f(a.mu_w, b.mu_w);
        f(a.mu_b, b.mu_b);
        f(a.logvar_w, b.logvar_w);
        f(a.logvar_b, b.logvar_b);
        f(a.topic_word, b.topic_word);
        f(a.word_bias, b.word_bias);
    }

    bool all_finite() const {
        bool ok = true;
        for_each_tensor([&ok](const auto& t) { ok = ok && t.allFinite(); });
        return ok;
    }

    double grad_norm() const {
        double sq = 0.0;
        for_each_tensor([&sq](const auto& t) { sq += t.squaredNorm(); });
        return std::sqrt(sq);
    }
};

struct LatentState {
    Vec mu;
    Vec logvar;
    Vec noise;
    Vec z_raw;
    Vec theta;  // softmax(z_raw); the similarity space of the contrastive loss
};

struct ElboTerms {
    double recon = 0.0;
    double kl = 0.0;
};

struct LossBreakdown {
    double recon = 0.0;
    double kl = 0.0;
    double contrastive = 0.0;
    double total = 0.0;
    double beta_used = 0.0;
};

inline double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Vec softmax(const Vec& v) {
    const double m = v.maxCoeff();
    Vec e = (v.array() - m).exp();
    return e / e.sum();
}

// Forward-pass values kept for exact backpropagation.
struct ForwardCache {
    Vec input;       // encoder input (counts, plus covariate one-hot)
    Vec preact;      // hidden pre-activation
    Vec hidden;      // softplus(preact)
    Vec logvar_pre;  // before clamping, needed for the clamp mask
    LatentState lat;
    Vec logits;      // decoder logits (empty on mean-path sample encodings)
    Vec probs;       // softmax(logits)
    bool mean_path = false;  // theta = softmax(mu), no noise/KL branch
};

inline Vec one_hot(int label, int width) {
    Vec v = Vec::Zero(width);
    if (label >= 0 && label < width) v(label) = 1.0;
    return v;
}

inline Vec dense_counts(const Document& doc, int vocab_size) {
    Vec x = Vec::Zero(vocab_size);
    for (const auto& e : doc.entries) x(e.token) = static_cast<double>(e.count);
    return x;
}

namespace detail {

inline void encode_into(const Vec& x, const Vec* covariate, const ModelParams& p,
                        ForwardCache& fc) {
    if (x.size() != p.dims.vocab)
        throw std::logic_error("encode: input width does not match model vocab");
    if (!x.allFinite()) throw std::invalid_argument("encode: non-finite input");
    if (x.minCoeff() < 0.0) throw std::invalid_argument("encode: negative counts");
    if (x.maxCoeff() <= 0.0) throw std::invalid_argument("encode: all-zero input");

    if (p.dims.covariates > 0) {
        fc.input.resize(p.dims.input_width());
        fc.input.head(p.dims.vocab) = x;
        if (covariate) {
            if (covariate->size() != p.dims.covariates)
                throw std::logic_error("encode: covariate width mismatch");
            fc.input.tail(p.dims.covariates) = *covariate;
        } else {
            fc.input.tail(p.dims.covariates).setZero();
        }
    } else {
        fc.input = x;
    }

    fc.preact = p.enc_w * fc.input + p.enc_b;
    fc.hidden = fc.preact.unaryExpr([](double v) { return softplus(v); });
    fc.lat.mu = p.mu_w * fc.hidden + p.mu_b;
    fc.logvar_pre = p.logvar_w * fc.hidden + p.logvar_b;
    fc.lat.logvar = fc.logvar_pre.cwiseMax(-kLogvarClamp).cwiseMin(kLogvarClamp);
}

}  // namespace detail

// q(z|x): returns the variational mean and clamped log-variance.
inline std::pair<Vec, Vec> encode(const Vec& x, const Vec* covariate,
                                  const ModelParams& p) {
    ForwardCache fc;
    detail::encode_into(x, covariate, p, fc);
    return {fc.lat.mu, fc.lat.logvar};
}

inline LatentState reparameterize(const Vec& mu, const Vec& logvar, const Vec& noise) {
    LatentState s;
    s.mu = mu;
    s.logvar = logvar;
    s.noise = noise;
    s.z_raw = mu + (0.5 * logvar.array()).exp().matrix().cwiseProduct(noise);
    s.theta = softmax(s.z_raw);
    return s;
}

// p(x|z): word probabilities given topic proportions.
inline Vec decode(const Vec& theta, const ModelParams& p) {
    if (theta.size() != p.dims.topics)
        throw std::logic_error("decode: theta width does not match model topics");
    Vec logits = p.topic_word.transpose() * theta + p.word_bias;
    return softmax(logits);
}

// Multinomial negative log-likelihood plus closed-form KL against the
// standard-normal prior.
inline ElboTerms elbo_loss(const Vec& x, const Vec& recon_probs, const Vec& mu,
                           const Vec& logvar) {
    ElboTerms t;
    for (Eigen::Index v = 0; v < x.size(); ++v) {
        if (x(v) != 0.0)
            t.recon -= x(v) * std::log(std::max(recon_probs(v), kProbFloor));
    }
    t.kl = 0.5 * (logvar.array().exp() + mu.array().square() - 1.0 - logvar.array()).sum();
    return t;
}

// Reparameterized forward pass of the prototype document.
inline ForwardCache forward(const Vec& x, const Vec* covariate, const ModelParams& p,
                            const Vec& noise) {
    ForwardCache fc;
    detail::encode_into(x, covariate, p, fc);
    fc.lat = reparameterize(fc.lat.mu, fc.lat.logvar, noise);
    fc.logits = p.topic_word.transpose() * fc.lat.theta + p.word_bias;
    fc.probs = softmax(fc.logits);
    return fc;
}

// Noise-free pass used for sample encodings, beta initialization and latent
// export: theta = softmax(mu).
inline ForwardCache forward_mean(const Vec& x, const Vec* covariate,
                                 const ModelParams& p) {
    ForwardCache fc;
    detail::encode_into(x, covariate, p, fc);
    fc.mean_path = true;
    fc.lat.noise = Vec::Zero(p.dims.topics);
    fc.lat.z_raw = fc.lat.mu;
    fc.lat.theta = softmax(fc.lat.mu);
    return fc;
}

// VJP of theta = softmax(z): g_z = theta .* (g - <g, theta>).
inline Vec softmax_vjp(const Vec& theta, const Vec& g) {
    const double dot = g.dot(theta);
    return theta.cwiseProduct((g.array() - dot).matrix());
}

struct BackwardOptions {
    double recon_weight = 1.0;
    double kl_weight = 1.0;
};

namespace detail {

// Shared tail of both backward passes: from a z_raw-level gradient down
// through the mu head (and optionally the logvar head) into the encoder.
inline void backprop_encoder(const ForwardCache& fc, const ModelParams& p,
                             const Vec& g_mu, const Vec* g_logvar,
                             ModelParams& grads) {
    grads.mu_w += g_mu * fc.hidden.transpose();
    grads.mu_b += g_mu;
    Vec g_hidden = p.mu_w.transpose() * g_mu;
    if (g_logvar) {
        // clamp mask: gradient passes only strictly inside the clamp range
        Vec masked = *g_logvar;
        for (Eigen::Index t = 0; t < masked.size(); ++t) {
            if (std::abs(fc.logvar_pre(t)) >= kLogvarClamp) masked(t) = 0.0;
        }
        grads.logvar_w += masked * fc.hidden.transpose();
        grads.logvar_b += masked;
        g_hidden += p.logvar_w.transpose() * masked;
    }
    const Vec g_preact =
        g_hidden.cwiseProduct(fc.preact.unaryExpr([](double v) { return sigmoid(v); }));
    grads.enc_w += g_preact * fc.input.transpose();
    grads.enc_b += g_preact;
}

}  // namespace detail

// Exact gradients of recon + kl plus an arbitrary extra theta-level gradient
// (the contrastive term's pull on the prototype). Accumulates into `grads`.
inline void backward(const Vec& x, const ForwardCache& fc, const ModelParams& p,
                     const Vec& extra_theta_grad, ModelParams& grads,
                     const BackwardOptions& opt = {}) {
    if (fc.mean_path)
        throw std::logic_error("backward: cache came from the mean path");
    if (x.size() != p.dims.vocab || fc.lat.theta.size() != p.dims.topics ||
        extra_theta_grad.size() != p.dims.topics)
        throw std::logic_error("backward: shape mismatch");

    Vec g_theta = extra_theta_grad;
    if (opt.recon_weight != 0.0) {
        // d recon / d logits = (sum x) * p - x
        const double total = x.sum();
        const Vec g_logits = opt.recon_weight * (total * fc.probs - x);
        grads.topic_word += fc.lat.theta * g_logits.transpose();
        grads.word_bias += g_logits;
        g_theta += p.topic_word * g_logits;
    }

    const Vec g_z = softmax_vjp(fc.lat.theta, g_theta);
    Vec g_mu = g_z;
    Vec g_logvar =
        0.5 * g_z.cwiseProduct((0.5 * fc.lat.logvar.array()).exp().matrix())
                  .cwiseProduct(fc.lat.noise);
    if (opt.kl_weight != 0.0) {
        g_mu += opt.kl_weight * fc.lat.mu;
        g_logvar += (0.5 * opt.kl_weight) *
                    (fc.lat.logvar.array().exp() - 1.0).matrix();
    }
    detail::backprop_encoder(fc, p, g_mu, &g_logvar, grads);
}

// Gradient of a mean-path encoding (theta = softmax(mu)) given a theta-level
// gradient; used for the positive/negative sample branches, which carry no
// reconstruction or KL terms.
inline void backward_mean(const ForwardCache& fc, const ModelParams& p,
                          const Vec& theta_grad, ModelParams& grads) {
    if (!fc.mean_path)
        throw std::logic_error("backward_mean: cache came from the noise path");
    if (theta_grad.size() != p.dims.topics)
        throw std::logic_error("backward_mean: shape mismatch");
    const Vec g_mu = softmax_vjp(fc.lat.theta, theta_grad);
    detail::backprop_encoder(fc, p, g_mu, nullptr, grads);
}

// Token ids of the strongest words in one decoder row, descending weight,
// ties to the lower id.
inline std::vector<int> top_words(const ModelParams& p, int topic_index, int n) {
    if (topic_index < 0 || topic_index >= p.dims.topics)
        throw std::out_of_range("top_words: topic index out of range");
    const int take = std::min(n, p.dims.vocab);
    std::vector<int> ids(static_cast<std::size_t>(p.dims.vocab));
    std::iota(ids.begin(), ids.end(), 0);
    std::partial_sort(ids.begin(), ids.begin() + take, ids.end(),
                      [&](int a, int b) {
                          const double wa = p.topic_word(topic_index, a);
                          const double wb = p.topic_word(topic_index, b);
                          if (wa != wb) return wa > wb;
                          return a < b;
                      });
    ids.resize(static_cast<std::size_t>(take));
    return ids;
}

}  // namespace ctm
