#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctm/checkpoint.hpp"
#include "ctm/contrastive.hpp"
#include "ctm/corpus.hpp"
#include "ctm/error.hpp"
#include "ctm/eval.hpp"
#include "ctm/model.hpp"
#include "ctm/rng.hpp"
#include "ctm/sampler.hpp"

namespace ctm {

struct TrainConfig {
    int topics = 20;
    int hidden = 256;
    int k = 15;
    int epochs = 50;
    int batch_size = 200;
    double learning_rate = 0.002;
    std::uint64_t seed = 0;
    SamplerConfig sampler;
    ContrastiveConfig contrastive;
    bool covariates = false;
    std::string optimizer = "sgd";  // sgd | momentum | adam
    double momentum = 0.9;
    double clip_norm = 5.0;
    int npmi_top_n = 10;
};

inline nlohmann::json to_json(const TrainConfig& c) {
    nlohmann::json j;
    j["topics"] = c.topics;
    j["hidden"] = c.hidden;
    j["k"] = c.k;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["seed"] = c.seed;
    j["covariates"] = c.covariates;
    j["optimizer"] = c.optimizer;
    j["momentum"] = c.momentum;
    j["clip_norm"] = c.clip_norm;
    j["npmi_top_n"] = c.npmi_top_n;
    j["sampler"] = {{"strategy", strategy_name(c.sampler.strategy)},
                    {"importance", importance_name(c.sampler.importance)},
                    {"topics_m", c.sampler.topics_m}};
    j["contrastive"] = {{"variant", variant_name(c.contrastive.variant)},
                        {"beta0", c.contrastive.beta0},
                        {"total_steps", c.contrastive.total_steps},
                        {"alpha", c.contrastive.alpha},
                        {"epsilon_doc", c.contrastive.epsilon_doc}};
    if (c.contrastive.fixed_beta)
        j["contrastive"]["fixed_beta"] = *c.contrastive.fixed_beta;
    else
        j["contrastive"]["fixed_beta"] = nullptr;
    return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    auto get = [&j](const char* key, auto& out) {
        if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
    };
    get("topics", c.topics);
    get("hidden", c.hidden);
    get("k", c.k);
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("learning_rate", c.learning_rate);
    get("seed", c.seed);
    get("covariates", c.covariates);
    get("optimizer", c.optimizer);
    get("momentum", c.momentum);
    get("clip_norm", c.clip_norm);
    get("npmi_top_n", c.npmi_top_n);
    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        if (s.contains("strategy"))
            c.sampler.strategy = strategy_from_name(s.at("strategy").get<std::string>());
        if (s.contains("importance"))
            c.sampler.importance = importance_from_name(s.at("importance").get<std::string>());
        if (s.contains("topics_m")) c.sampler.topics_m = s.at("topics_m").get<int>();
    }
    if (j.contains("contrastive")) {
        const auto& k = j.at("contrastive");
        if (k.contains("variant"))
            c.contrastive.variant = variant_from_name(k.at("variant").get<std::string>());
        if (k.contains("beta0")) c.contrastive.beta0 = k.at("beta0").get<double>();
        if (k.contains("total_steps"))
            c.contrastive.total_steps = k.at("total_steps").get<std::int64_t>();
        if (k.contains("alpha")) c.contrastive.alpha = k.at("alpha").get<double>();
        if (k.contains("epsilon_doc"))
            c.contrastive.epsilon_doc = k.at("epsilon_doc").get<double>();
        if (k.contains("fixed_beta") && !k.at("fixed_beta").is_null())
            c.contrastive.fixed_beta = k.at("fixed_beta").get<double>();
    }
    return c;
}

struct MetricsRecord {
    int epoch = 0;
    std::int64_t step = 0;
    double recon = 0.0;
    double kl = 0.0;
    double contrastive = 0.0;
    double total = 0.0;
    double beta = 0.0;
    std::optional<double> val_npmi;
    bool audit = false;
    double wall_ms = 0.0;  // console reporting only; kept out of the log file
                           // so identical runs produce identical bytes
};

inline std::string metrics_json_line(const MetricsRecord& r) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["step"] = r.step;
    j["recon"] = r.recon;
    j["kl"] = r.kl;
    j["contrastive"] = r.contrastive;
    j["total"] = r.total;
    j["beta"] = r.beta;
    if (r.val_npmi) j["val_npmi"] = *r.val_npmi;
    if (r.audit) j["audit"] = true;
    return j.dump();
}

struct TrainResult {
    ModelParams params;
    std::vector<MetricsRecord> metrics;
    double beta0 = 1.0;
    std::int64_t total_steps = 0;
    double final_npmi = 0.0;
    std::int64_t degenerate_pairs = 0;
};

namespace detail {

inline double resolve_beta(const ContrastiveConfig& cfg, std::int64_t step,
                           std::int64_t total_steps, double beta0) {
    if (cfg.fixed_beta) return std::max(0.0, *cfg.fixed_beta);
    return beta_at(step, total_steps, beta0);
}

// Per-epoch document order; split_indices returns every document when the
// corpus carries no split tags.
inline std::vector<int> epoch_order(const Corpus& corpus, std::uint64_t seed, int epoch) {
    auto order = corpus.split_indices(Split::train);
    Rng rng(mix_seed(seed, 0xE70C4ull, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    return order;
}

struct DocContext {
    const Corpus* corpus = nullptr;
    const TrainConfig* cfg = nullptr;
    int covariate_width = 0;
    std::vector<int> train_pool;  // candidate negatives for random_doc
};

struct DocOutcome {
    LossBreakdown loss;
    bool degenerate = false;
};

// Forward pass, sampling, loss and (optionally) exact gradients for one
// document. The contrastive gradient flows through all three encoder
// branches; substituted reconstruction values inside the samples are data,
// not functions of the parameters.
inline DocOutcome process_document(const DocContext& ctx, const ModelParams& params,
                                   int doc_index, const Vec& noise, double beta,
                                   int epoch, ModelParams* grads) {
    const Corpus& corpus = *ctx.corpus;
    const TrainConfig& cfg = *ctx.cfg;
    const auto& doc = corpus.docs[static_cast<std::size_t>(doc_index)];

    const Vec x = dense_counts(doc, params.dims.vocab);
    Vec cov;
    const Vec* cov_ptr = nullptr;
    if (ctx.covariate_width > 0) {
        cov = one_hot(doc.label, ctx.covariate_width);
        cov_ptr = &cov;
    }

    const ForwardCache fc = forward(x, cov_ptr, params, noise);
    const ElboTerms elbo = elbo_loss(x, fc.probs, fc.lat.mu, fc.lat.logvar);

    DocOutcome out;
    out.loss.recon = elbo.recon;
    out.loss.kl = elbo.kl;
    out.loss.beta_used = beta;

    Vec d_theta = Vec::Zero(params.dims.topics);
    std::optional<ForwardCache> fc_pos;
    std::optional<ForwardCache> fc_neg;
    Vec d_theta_pos;
    Vec d_theta_neg;

    const ContrastiveVariant variant =
        cfg.sampler.strategy == SampleStrategy::random_doc
            ? ContrastiveVariant::negative_only  // no positive exists for this strategy
            : cfg.contrastive.variant;

    if (variant != ContrastiveVariant::elbo_only) {
        ContrastiveConfig ccfg = cfg.contrastive;
        ccfg.variant = variant;
        if (cfg.sampler.strategy == SampleStrategy::random_doc) {
            Rng doc_rng(mix_seed(cfg.seed ^ 0x52444F43ull,
                                 static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(doc_index)));
            const auto pool_pos = doc_rng.below(ctx.train_pool.size() - 1);
            int pick = ctx.train_pool[pool_pos];
            if (pick == doc_index) pick = ctx.train_pool.back();
            const auto& neg_doc = corpus.docs[static_cast<std::size_t>(pick)];
            const Vec x_neg = dense_counts(neg_doc, params.dims.vocab);
            Vec neg_cov;
            const Vec* neg_cov_ptr = nullptr;
            if (ctx.covariate_width > 0) {
                neg_cov = one_hot(neg_doc.label, ctx.covariate_width);
                neg_cov_ptr = &neg_cov;
            }
            fc_neg = forward_mean(x_neg, neg_cov_ptr, params);
            const Vec& theta_neg = fc_neg->lat.theta;
            out.loss.contrastive = variant_loss(ccfg, fc.lat.theta, fc.lat.theta, theta_neg, beta);
            const auto cg = variant_grads(ccfg, fc.lat.theta, fc.lat.theta, theta_neg, beta);
            d_theta = cg.d_theta;
            d_theta_neg = cg.d_theta_neg;
        } else {
            const Vec recon_counts = fc.probs * x.sum();
            SamplePair pair;
            if (cfg.sampler.strategy == SampleStrategy::topic_based) {
                pair = topic_based_pair(x, fc.lat.theta, params.topic_word,
                                        cfg.sampler.topics_m, cfg.sampler.k, recon_counts);
            } else {
                const auto scores = importance_scores(
                    doc, corpus.tfidf[static_cast<std::size_t>(doc_index)],
                    cfg.sampler.importance);
                pair = cfg.sampler.strategy == SampleStrategy::word_based
                           ? word_based_pair(x, recon_counts, scores, cfg.sampler.k)
                           : zero_sampling_pair(x, scores, cfg.sampler.k);
            }
            if (pair.degenerate) {
                out.degenerate = true;
            } else {
                fc_pos = forward_mean(pair.x_pos, cov_ptr, params);
                fc_neg = forward_mean(pair.x_neg, cov_ptr, params);
                const Vec& tp = fc_pos->lat.theta;
                const Vec& tn = fc_neg->lat.theta;
                out.loss.contrastive = variant_loss(ccfg, fc.lat.theta, tp, tn, beta);
                const auto cg = variant_grads(ccfg, fc.lat.theta, tp, tn, beta);
                d_theta = cg.d_theta;
                d_theta_pos = cg.d_theta_pos;
                d_theta_neg = cg.d_theta_neg;
            }
        }
    }

    out.loss.total = out.loss.recon + out.loss.kl + out.loss.contrastive;

    if (grads) {
        backward(x, fc, params, d_theta, *grads);
        if (fc_pos && d_theta_pos.size() > 0 && !d_theta_pos.isZero(0.0))
            backward_mean(*fc_pos, params, d_theta_pos, *grads);
        if (fc_neg && d_theta_neg.size() > 0 && !d_theta_neg.isZero(0.0))
            backward_mean(*fc_neg, params, d_theta_neg, *grads);
    }
    return out;
}

struct OptimizerState {
    ModelParams velocity;
    ModelParams adam_m;
    ModelParams adam_v;
    std::int64_t adam_t = 0;
};

inline void apply_update(ModelParams& params, ModelParams& grads,
                         OptimizerState& opt, const TrainConfig& cfg) {
    if (cfg.clip_norm > 0.0) {
        const double gn = grads.grad_norm();
        if (gn > cfg.clip_norm) {
            const double scale = cfg.clip_norm / gn;
            grads.for_each_tensor([scale](auto& t) { t *= scale; });
        }
    }
    const double lr = cfg.learning_rate;
    if (cfg.optimizer == "momentum") {
        ModelParams::for_each_pair(opt.velocity, grads, [&](auto& v, const auto& g) {
            v = cfg.momentum * v + g;
        });
        ModelParams::for_each_pair(params, opt.velocity,
                                   [lr](auto& p, const auto& v) { p -= lr * v; });
    } else if (cfg.optimizer == "adam") {
        opt.adam_t += 1;
        constexpr double b1 = 0.9;
        constexpr double b2 = 0.999;
        constexpr double eps = 1e-8;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(opt.adam_t));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(opt.adam_t));
        ModelParams::for_each_pair(opt.adam_m, grads, [&](auto& m, const auto& g) {
            m = b1 * m + (1.0 - b1) * g;
        });
        ModelParams::for_each_pair(opt.adam_v, grads, [&](auto& v, const auto& g) {
            v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        });
        // paired walk over (params, m, v) via two zips sharing the update
        ModelParams scaled = opt.adam_m;
        ModelParams::for_each_pair(scaled, opt.adam_v, [&](auto& m, const auto& v) {
            m = (m / c1).cwiseQuotient(((v / c2).cwiseSqrt().array() + eps).matrix());
        });
        ModelParams::for_each_pair(params, scaled,
                                   [lr](auto& p, const auto& s) { p -= lr * s; });
    } else if (cfg.optimizer == "sgd") {
        ModelParams::for_each_pair(params, grads,
                                   [lr](auto& p, const auto& g) { p -= lr * g; });
    } else {
        throw DataError("unknown optimizer: " + cfg.optimizer);
    }
}

}  // namespace detail

// Mean loss over a fixed audit batch (the first batch_size training
// documents in corpus order) with noise drawn from a dedicated stream.
// train() logs this as its final record; recomputing it from the saved
// checkpoint reproduces the logged value.
inline LossBreakdown audit_loss(const ModelParams& params, const Corpus& corpus,
                                TrainConfig cfg, double beta0,
                                std::int64_t total_steps) {
    cfg.sampler.k = cfg.k;
    detail::DocContext ctx;
    ctx.corpus = &corpus;
    ctx.cfg = &cfg;
    ctx.covariate_width = params.dims.covariates;
    ctx.train_pool = corpus.split_indices(Split::train);
    const auto n = std::min<std::size_t>(ctx.train_pool.size(),
                                         static_cast<std::size_t>(cfg.batch_size));
    Rng noise_rng(mix_seed(cfg.seed, 0xA0D17ull));
    const double beta = detail::resolve_beta(cfg.contrastive, total_steps, total_steps, beta0);
    LossBreakdown acc;
    acc.beta_used = beta;
    for (std::size_t i = 0; i < n; ++i) {
        Vec noise(params.dims.topics);
        for (int t = 0; t < params.dims.topics; ++t) noise(t) = noise_rng.normal();
        const auto out = detail::process_document(ctx, params, ctx.train_pool[i], noise,
                                                  beta, /*epoch=*/0, nullptr);
        acc.recon += out.loss.recon;
        acc.kl += out.loss.kl;
        acc.contrastive += out.loss.contrastive;
    }
    acc.recon /= static_cast<double>(n);
    acc.kl /= static_cast<double>(n);
    acc.contrastive /= static_cast<double>(n);
    acc.total = acc.recon + acc.kl + acc.contrastive;
    return acc;
}

// The full training loop: beta initialization on a seed-chosen batch, then
// per batch sampling, joint loss, exact gradients, clipped updates, and one
// metrics record per step. Deterministic given (corpus, config, seed).
inline TrainResult train(const Corpus& corpus, TrainConfig cfg,
                         const std::function<void(const MetricsRecord&)>& on_record = {}) {
    if (corpus.docs.empty()) throw DataError("train: empty corpus");
    if (cfg.topics < 1 || cfg.hidden < 1 || cfg.epochs < 1 || cfg.batch_size < 1 ||
        cfg.k < 1 || cfg.learning_rate <= 0.0)
        throw DataError("train: config values must be positive");
    cfg.sampler.k = cfg.k;

    const bool needs_scores = cfg.sampler.strategy == SampleStrategy::word_based ||
                              cfg.sampler.strategy == SampleStrategy::zero_sampling;
    if (needs_scores && !corpus.has_tfidf())
        throw DataError("train: corpus has no tf-idf scores; ingest/synth fill them");

    detail::DocContext ctx;
    ctx.corpus = &corpus;
    ctx.cfg = &cfg;
    ctx.train_pool = corpus.split_indices(Split::train);
    if (ctx.train_pool.empty()) throw DataError("train: no documents in the train split");
    if (cfg.sampler.strategy == SampleStrategy::random_doc && ctx.train_pool.size() < 2)
        throw DataError("train: random_doc sampling needs >= 2 training documents");

    int covariate_width = 0;
    if (cfg.covariates) {
        covariate_width = corpus.num_label_classes();
        if (covariate_width <= 0)
            throw DataError("train: covariates requested but corpus has no labels");
    }
    ctx.covariate_width = covariate_width;

    ModelDims dims;
    dims.vocab = corpus.vocab.size();
    dims.topics = cfg.topics;
    dims.hidden = cfg.hidden;
    dims.covariates = covariate_width;

    Rng init_rng(mix_seed(cfg.seed, 0x1417ull));
    ModelParams params = ModelParams::random_init(dims, init_rng);

    const auto n_train = static_cast<std::int64_t>(ctx.train_pool.size());
    const std::int64_t steps_per_epoch =
        (n_train + cfg.batch_size - 1) / cfg.batch_size;
    const std::int64_t total_steps =
        cfg.contrastive.total_steps > 0 ? cfg.contrastive.total_steps
                                        : cfg.epochs * steps_per_epoch;

    // beta0 from the first scheduled batch, mean (noise-free) encodings all
    // around, current (untrained) parameters.
    double beta0 = cfg.contrastive.beta0;
    if (!cfg.contrastive.fixed_beta &&
        cfg.contrastive.variant != ContrastiveVariant::elbo_only &&
        cfg.sampler.strategy != SampleStrategy::random_doc) {
        const auto order0 = detail::epoch_order(corpus, cfg.seed, 0);
        const auto first = std::min<std::size_t>(order0.size(),
                                                 static_cast<std::size_t>(cfg.batch_size));
        std::vector<LatentTriple> triples;
        for (std::size_t i = 0; i < first; ++i) {
            const int doc_index = order0[i];
            const auto& doc = corpus.docs[static_cast<std::size_t>(doc_index)];
            const Vec x = dense_counts(doc, dims.vocab);
            Vec cov;
            const Vec* cov_ptr = nullptr;
            if (covariate_width > 0) {
                cov = one_hot(doc.label, covariate_width);
                cov_ptr = &cov;
            }
            const auto fc = forward_mean(x, cov_ptr, params);
            const Vec recon_counts = decode(fc.lat.theta, params) * x.sum();
            SamplePair pair;
            if (cfg.sampler.strategy == SampleStrategy::topic_based) {
                pair = topic_based_pair(x, fc.lat.theta, params.topic_word,
                                        cfg.sampler.topics_m, cfg.sampler.k, recon_counts);
            } else {
                const auto scores = importance_scores(
                    doc, corpus.tfidf[static_cast<std::size_t>(doc_index)],
                    cfg.sampler.importance);
                pair = cfg.sampler.strategy == SampleStrategy::word_based
                           ? word_based_pair(x, recon_counts, scores, cfg.sampler.k)
                           : zero_sampling_pair(x, scores, cfg.sampler.k);
            }
            if (pair.degenerate) continue;
            LatentTriple triple;
            triple.theta = fc.lat.theta;
            triple.theta_pos = forward_mean(pair.x_pos, cov_ptr, params).lat.theta;
            triple.theta_neg = forward_mean(pair.x_neg, cov_ptr, params).lat.theta;
            triples.push_back(std::move(triple));
        }
        if (!triples.empty()) beta0 = init_beta(triples);
    }

    CooccurrenceStats npmi_stats = build_cooccurrence(
        corpus, corpus.has_split() ? std::optional<Split>(Split::train) : std::nullopt);

    TrainResult result;
    result.beta0 = beta0;
    result.total_steps = total_steps;

    detail::OptimizerState opt;
    if (cfg.optimizer == "momentum") opt.velocity = ModelParams::zeros(dims);
    if (cfg.optimizer == "adam") {
        opt.adam_m = ModelParams::zeros(dims);
        opt.adam_v = ModelParams::zeros(dims);
    }

    std::int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t_epoch = std::chrono::steady_clock::now();
        const auto order = detail::epoch_order(corpus, cfg.seed, epoch);
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            const auto batch_n = static_cast<double>(end - begin);
            const double beta = detail::resolve_beta(cfg.contrastive, step, total_steps, beta0);

            Rng noise_rng(mix_seed(cfg.seed, 0x4E01ull, static_cast<std::uint64_t>(step)));
            ModelParams grads = ModelParams::zeros(dims);
            LossBreakdown batch_loss;
            batch_loss.beta_used = beta;
            // fixed ascending-position reduction keeps accumulation deterministic
            for (std::size_t i = begin; i < end; ++i) {
                Vec noise(dims.topics);
                for (int t = 0; t < dims.topics; ++t) noise(t) = noise_rng.normal();
                const auto out = detail::process_document(ctx, params, order[i], noise,
                                                          beta, epoch, &grads);
                if (out.degenerate) result.degenerate_pairs += 1;
                batch_loss.recon += out.loss.recon;
                batch_loss.kl += out.loss.kl;
                batch_loss.contrastive += out.loss.contrastive;
            }
            batch_loss.recon /= batch_n;
            batch_loss.kl /= batch_n;
            batch_loss.contrastive /= batch_n;
            batch_loss.total = batch_loss.recon + batch_loss.kl + batch_loss.contrastive;
            if (!std::isfinite(batch_loss.total)) {
                std::ostringstream dump;
                dump << "train: non-finite loss at step " << step << " (epoch " << epoch
                     << ", beta " << beta << "): recon " << batch_loss.recon << ", kl "
                     << batch_loss.kl << ", contrastive " << batch_loss.contrastive
                     << "; batch docs";
                for (std::size_t i = begin; i < end; ++i) dump << ' ' << order[i];
                throw NumericError(dump.str());
            }

            grads.for_each_tensor([batch_n](auto& t) { t /= batch_n; });
            detail::apply_update(params, grads, opt, cfg);

            MetricsRecord rec;
            rec.epoch = epoch;
            rec.step = step;
            rec.recon = batch_loss.recon;
            rec.kl = batch_loss.kl;
            rec.contrastive = batch_loss.contrastive;
            rec.total = batch_loss.total;
            rec.beta = beta;
            result.metrics.push_back(rec);
            step += 1;
        }
        // periodic coherence snapshot on the epoch's final record
        auto& last = result.metrics.back();
        last.val_npmi = mean_npmi(params, npmi_stats, cfg.npmi_top_n);
        last.wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t_epoch)
                           .count();
        if (on_record) on_record(last);
    }

    // reproducible audit record: computed on f32-quantized parameters so the
    // identical value falls out of the saved checkpoint
    const auto audit = audit_loss(quantize_f32(params), corpus, cfg, beta0, total_steps);
    MetricsRecord audit_rec;
    audit_rec.epoch = cfg.epochs;
    audit_rec.step = step;
    audit_rec.recon = audit.recon;
    audit_rec.kl = audit.kl;
    audit_rec.contrastive = audit.contrastive;
    audit_rec.total = audit.total;
    audit_rec.beta = audit.beta_used;
    audit_rec.audit = true;
    result.metrics.push_back(audit_rec);

    result.final_npmi = mean_npmi(params, npmi_stats, cfg.npmi_top_n);
    result.params = std::move(params);
    return result;
}

struct SweepRow {
    int k = 0;
    double mean_npmi = 0.0;
    double std_npmi = 0.0;
    std::vector<double> per_seed;
};

inline std::vector<SweepRow> sweep_k(const Corpus& corpus, TrainConfig base,
                                     const std::vector<int>& k_values,
                                     const std::vector<std::uint64_t>& seeds) {
    if (k_values.empty()) throw DataError("sweep_k: no k values");
    if (seeds.empty()) throw DataError("sweep_k: no seeds");
    std::vector<SweepRow> rows;
    for (int k : k_values) {
        SweepRow row;
        row.k = k;
        for (auto seed : seeds) {
            TrainConfig cfg = base;
            cfg.k = k;
            cfg.seed = seed;
            row.per_seed.push_back(train(corpus, cfg).final_npmi);
        }
        double mean = 0.0;
        for (double v : row.per_seed) mean += v;
        mean /= static_cast<double>(row.per_seed.size());
        double var = 0.0;
        for (double v : row.per_seed) var += (v - mean) * (v - mean);
        row.mean_npmi = mean;
        row.std_npmi = row.per_seed.size() > 1
                           ? std::sqrt(var / static_cast<double>(row.per_seed.size() - 1))
                           : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

struct AblationRow {
    ContrastiveVariant variant = ContrastiveVariant::full;
    double mean_npmi = 0.0;
    double std_npmi = 0.0;
    std::vector<double> per_seed;
};

// Controlled comparison of the loss variants: identical corpus and seeds,
// only the objective changes.
inline std::vector<AblationRow> run_ablation(const Corpus& corpus, TrainConfig base,
                                             const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw DataError("run_ablation: no seeds");
    std::vector<AblationRow> rows;
    for (auto variant :
         {ContrastiveVariant::full, ContrastiveVariant::positive_only,
          ContrastiveVariant::negative_only, ContrastiveVariant::elbo_only}) {
        AblationRow row;
        row.variant = variant;
        for (auto seed : seeds) {
            TrainConfig cfg = base;
            cfg.contrastive.variant = variant;
            cfg.seed = seed;
            row.per_seed.push_back(train(corpus, cfg).final_npmi);
        }
        double mean = 0.0;
        for (double v : row.per_seed) mean += v;
        mean /= static_cast<double>(row.per_seed.size());
        double var = 0.0;
        for (double v : row.per_seed) var += (v - mean) * (v - mean);
        row.mean_npmi = mean;
        row.std_npmi = row.per_seed.size() > 1
                           ? std::sqrt(var / static_cast<double>(row.per_seed.size() - 1))
                           : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace ctm
