#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ctm/error.hpp"
#include "ctm/model.hpp"

namespace ctm {

enum class ContrastiveVariant { full, positive_only, negative_only, elbo_only };

inline const char* variant_name(ContrastiveVariant v) {
    switch (v) {
        case ContrastiveVariant::full: return "full";
        case ContrastiveVariant::positive_only: return "positive_only";
        case ContrastiveVariant::negative_only: return "negative_only";
        default: return "elbo_only";
    }
}

inline ContrastiveVariant variant_from_name(const std::string& name) {
    if (name == "full") return ContrastiveVariant::full;
    if (name == "positive_only") return ContrastiveVariant::positive_only;
    if (name == "negative_only") return ContrastiveVariant::negative_only;
    if (name == "elbo_only") return ContrastiveVariant::elbo_only;
    throw DataError("unknown loss variant: " + name);
}

struct ContrastiveConfig {
    ContrastiveVariant variant = ContrastiveVariant::full;
    double beta0 = 1.0;                // overwritten by init_beta unless fixed
    std::int64_t total_steps = 0;      // schedule horizon; 0 = resolve from run
    std::optional<double> fixed_beta;  // constant-beta runs bypass the schedule
    double alpha = 1.0;                // weight of the negative-only variant
    // Constraint strength of the underlying constrained objective. It cancels
    // out of the runtime loss and is kept for the config record only.
    double epsilon_doc = 0.0;
};

struct SimilarityTriple {
    double s_pos = 0.0;  // theta . theta_pos
    double s_neg = 0.0;  // theta . theta_neg
};

inline SimilarityTriple similarities(const Vec& theta, const Vec& theta_pos,
                                     const Vec& theta_neg) {
    return {theta.dot(theta_pos), theta.dot(theta_neg)};
}

// Weighted contrastive loss, negated for minimization:
//   -log[ exp(s+) / (exp(s+) + beta exp(s-)) ] = log1p(beta exp(s- - s+)).
// Simplex dot products keep |s| <= 1, so the stable form cannot overflow.
inline double contrastive_loss_s(double s_pos, double s_neg, double beta) {
    if (beta <= 0.0) return 0.0;
    return std::log1p(beta * std::exp(s_neg - s_pos));
}

inline double contrastive_loss(const Vec& theta, const Vec& theta_pos,
                               const Vec& theta_neg, double beta) {
    const auto s = similarities(theta, theta_pos, theta_neg);
    return contrastive_loss_s(s.s_pos, s.s_neg, beta);
}

// dL/ds+ = -w and dL/ds- = +w with w = beta exp(s- - s+) / (1 + beta exp(s- - s+)),
// the closed-form denominator exp(s+)/beta + exp(s-) rewritten stably.
inline double contrastive_weight(double s_pos, double s_neg, double beta) {
    if (beta <= 0.0) return 0.0;
    const double r = beta * std::exp(s_neg - s_pos);
    return r / (1.0 + r);
}

// Gradient of the minimized loss with respect to the prototype theta:
//   -(theta_pos - theta_neg) * exp(s-) / (exp(s+)/beta + exp(s-)).
inline Vec contrastive_grad(const Vec& theta, const Vec& theta_pos,
                            const Vec& theta_neg, double beta) {
    const auto s = similarities(theta, theta_pos, theta_neg);
    const double w = contrastive_weight(s.s_pos, s.s_neg, beta);
    if (w == 0.0) return Vec::Zero(theta.size());
    return -w * (theta_pos - theta_neg);
}

// All three branch gradients of the contrastive term. The positive and
// negative encodings receive -w * theta and +w * theta respectively.
struct ContrastiveGrads {
    Vec d_theta;
    Vec d_theta_pos;
    Vec d_theta_neg;
};

inline ContrastiveGrads contrastive_grads(const Vec& theta, const Vec& theta_pos,
                                          const Vec& theta_neg, double beta) {
    const auto s = similarities(theta, theta_pos, theta_neg);
    const double w = contrastive_weight(s.s_pos, s.s_neg, beta);
    ContrastiveGrads g;
    g.d_theta = -w * (theta_pos - theta_neg);
    g.d_theta_pos = -w * theta;
    g.d_theta_neg = w * theta;
    return g;
}

struct LatentTriple {
    Vec theta;
    Vec theta_pos;
    Vec theta_neg;
};

// Algorithm: beta0 = mean over the batch of (z.z+)/(z.z-), each denominator
// floored at 1e-6 and each ratio clamped to [0, 100] so near-orthogonal
// negatives cannot blow the initial weight up.
inline double init_beta(const std::vector<LatentTriple>& batch) {
    if (batch.empty()) throw DataError("init_beta: empty batch");
    double acc = 0.0;
    for (const auto& triple : batch) {
        const auto s = similarities(triple.theta, triple.theta_pos, triple.theta_neg);
        const double gamma = s.s_pos / std::max(s.s_neg, 1e-6);
        acc += std::clamp(gamma, 0.0, 100.0);
    }
    return acc / static_cast<double>(batch.size());
}

// Triangle schedule: beta_t = 1/2 - |T/2 - t| / T + beta0, floored at zero.
// Exact at the endpoints (beta0) and the midpoint (beta0 + 1/2).
inline double beta_at(std::int64_t t, std::int64_t total_steps, double beta0) {
    const double half = static_cast<double>(total_steps) / 2.0;
    const double tri =
        0.5 - std::abs(half - static_cast<double>(t)) / static_cast<double>(total_steps);
    return std::max(0.0, tri + beta0);
}

// Loss variants: the full weighted-contrastive form, the positive-only
// pull -(z.z+), the negative-only push alpha*(z.z-), or nothing.
inline double variant_loss(const ContrastiveConfig& cfg, const Vec& theta,
                           const Vec& theta_pos, const Vec& theta_neg, double beta) {
    switch (cfg.variant) {
        case ContrastiveVariant::full:
            return contrastive_loss(theta, theta_pos, theta_neg, beta);
        case ContrastiveVariant::positive_only:
            return -theta.dot(theta_pos);
        case ContrastiveVariant::negative_only:
            return cfg.alpha * theta.dot(theta_neg);
        default:
            return 0.0;
    }
}

inline ContrastiveGrads variant_grads(const ContrastiveConfig& cfg, const Vec& theta,
                                      const Vec& theta_pos, const Vec& theta_neg,
                                      double beta) {
    const auto n = theta.size();
    switch (cfg.variant) {
        case ContrastiveVariant::full:
            return contrastive_grads(theta, theta_pos, theta_neg, beta);
        case ContrastiveVariant::positive_only:
            return {-theta_pos, -theta, Vec::Zero(n)};
        case ContrastiveVariant::negative_only:
            return {cfg.alpha * theta_neg, Vec::Zero(n), cfg.alpha * theta};
        default:
            return {Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)};
    }
}

// The always-true link of the bound chain:
//   log[exp(s+) / (exp(s+) + beta exp(s-))] <= s+ - s- - ln(beta),
// i.e. log(a/(a+b)) <= log(a/b) for positive a, b.
inline bool bound_check(double s_pos, double s_neg, double beta) {
    const double lhs = -contrastive_loss_s(s_pos, s_neg, beta);
    const double rhs = s_pos - s_neg - std::log(beta);
    return lhs <= rhs + 1e-12;
}

}  // namespace ctm
