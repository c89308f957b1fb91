#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace ctm {

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    // splitmix64 finalizer, folded into the running hash
    v += 0x9E3779B97F4A7C15ull;
    v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ull;
    v = (v ^ (v >> 27)) * 0x94D049BB133111EBull;
    v ^= v >> 31;
    return (h ^ v) * 0x2545F4914F6CDD1Dull + 0x9E3779B97F4A7C15ull;
}

// Derives an independent stream seed from up to three components
// (e.g. base seed, epoch, document index).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = 0x6A09E667F3BCC909ull;
    h = hash_combine(h, a);
    h = hash_combine(h, b);
    h = hash_combine(h, c);
    return h;
}

// Deterministic random source. The engine (mt19937_64) is fully specified
// by the standard; all variate transforms are implemented here rather than
// with std:: distributions, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::size_t below(std::size_t n) {
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() / n * n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % n);
    }

    // Standard normal via Box-Muller (no cached spare, so the draw count
    // per call is fixed).
    double normal() {
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // Gamma(alpha, 1) by Marsaglia-Tsang; the alpha < 1 case boosts through
    // Gamma(alpha + 1).
    double gamma(double alpha) {
        if (alpha < 1.0) {
            double u;
            do {
                u = uniform01();
            } while (u <= 0.0);
            return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u;
            do {
                u = uniform01();
            } while (u <= 0.0);
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Symmetric Dirichlet(alpha) over n categories.
    std::vector<double> dirichlet(double alpha, std::size_t n) {
        std::vector<double> draw(n);
        double total = 0.0;
        for (auto& g : draw) {
            g = gamma(alpha);
            total += g;
        }
        if (total <= 0.0) {
            for (auto& g : draw) g = 1.0 / static_cast<double>(n);
            return draw;
        }
        for (auto& g : draw) g /= total;
        return draw;
    }

    // Index draw from an unnormalized weight vector.
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double r = uniform01() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            r -= weights[i];
            if (r < 0.0) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ctm
