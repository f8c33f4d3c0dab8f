#include "rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mmqkd {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

SeededRng::SeededRng(std::uint64_t seed) : key_(seed) {
    init_state(seed);
}

SeededRng::SeededRng(std::uint64_t key, bool) : key_(key) {
    init_state(key);
}

void SeededRng::init_state(std::uint64_t key) {
    std::uint64_t sm = key;
    for (auto& word : s_)
        word = splitmix64(sm);
}

SeededRng SeededRng::stream(std::string_view label) const {
    std::uint64_t mixed = key_ ^ rotl(fnv1a64(label), 17);
    std::uint64_t sm = mixed;
    return SeededRng(splitmix64(sm), true);
}

SeededRng SeededRng::substream(std::uint64_t index) const {
    std::uint64_t mixed = key_ ^ (index * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL);
    std::uint64_t sm = mixed;
    return SeededRng(splitmix64(sm), true);
}

std::uint64_t SeededRng::next_u64() {
    // xoshiro256**
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double SeededRng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double SeededRng::normal(double mean, double sigma) {
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return mean + sigma * spare_normal_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform01() - 1.0;
        v = 2.0 * uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * f;
    has_spare_normal_ = true;
    return mean + sigma * u * f;
}

std::uint64_t SeededRng::poisson(double mean) {
    if (!(mean >= 0.0))
        throw std::domain_error("poisson: mean must be >= 0");
    if (mean == 0.0)
        return 0;
    if (mean < 10.0) {
        // Knuth multiplication method.
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double prod = uniform01();
        while (prod > limit) {
            ++k;
            prod *= uniform01();
        }
        return k;
    }
    // PTRD transformed-rejection sampler (Hormann), exact for large means.
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        double u = uniform01() - 0.5;
        double v = uniform01();
        const double us = 0.5 - std::abs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r)
            return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us))
            continue;
        const double log_accept = kf * log_mean - mean - std::lgamma(kf + 1.0);
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <= log_accept)
            return static_cast<std::uint64_t>(kf);
    }
}

} // namespace mmqkd
