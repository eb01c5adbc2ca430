#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "stressnet/errors.hpp"

namespace stressnet {

/// SplitMix64 finalizer, used as the seed-derivation mixing step.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Derives a child seed from a master seed, a stage label and an index.
/// The rule is fixed so that consumers (ensemble members, scenario draws)
/// are reproducible independently of execution order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                    std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(master ^ fnv1a64(label));
    return splitmix64(s ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
}

/// Deterministic random source. All variates are generated from explicit
/// mt19937_64 words rather than std::*_distribution, so a given seed yields
/// the same stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller (second variate cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0)
            u1 = uniform01();
        double u2 = uniform01();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

    /// Gamma(shape, 1) via Marsaglia-Tsang squeeze; shape < 1 handled by boosting.
    double gamma(double shape) {
        if (shape <= 0.0)
            throw Error("gamma: shape must be positive");
        if (shape < 1.0) {
            double u = 0.0;
            while (u == 0.0)
                u = uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = 0.0;
            while (u == 0.0)
                u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x)
                return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v;
        }
    }

    /// Beta(a, b) as X/(X+Y) with X ~ Gamma(a), Y ~ Gamma(b).
    double beta(double a, double b) {
        double x = gamma(a);
        double y = gamma(b);
        return x / (x + y);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace stressnet
