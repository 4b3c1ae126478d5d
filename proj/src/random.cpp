#include "driftlab/random.hpp"

#include <cmath>

namespace driftlab {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
constexpr std::int64_t kInversionLimit = 1000;
} // namespace

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RandomStream::RandomStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : key_(mix64(mix64(master_seed + kGamma) ^ mix64(stream_id * kGamma + 0x632be59bd9b4e019ULL))) {}

RandomStream RandomStream::split(std::uint64_t child_id) const {
    RandomStream child;
    child.key_ = mix64(key_ ^ mix64(child_id + 0x2545f4914f6cdd1dULL));
    return child;
}

RandomStream::result_type RandomStream::next() {
    return mix64(key_ + (++counter_) * kGamma);
}

double RandomStream::uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::uniform_below(std::uint64_t bound) {
    // Lemire's multiply-shift with rejection
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            x = next();
            m = static_cast<__uint128_t>(x) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

bool RandomStream::bernoulli_ratio(std::int64_t numerator, std::int64_t denominator) {
    if (numerator <= 0) return false;
    if (numerator >= denominator) return true;
    return uniform_below(static_cast<std::uint64_t>(denominator)) < static_cast<std::uint64_t>(numerator);
}

std::int64_t RandomStream::binomial(std::int64_t trials, double p) {
    if (trials <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return trials;
    if (p > 0.5) return trials - binomial(trials, 1.0 - p);

    const double log_q0 = static_cast<double>(trials) * std::log1p(-p);
    if (trials > kInversionLimit || log_q0 < -700.0) {
        std::int64_t ones = 0;
        for (std::int64_t i = 0; i < trials; ++i) ones += bernoulli(p) ? 1 : 0;
        return ones;
    }

    const double u = uniform01();
    const double odds = p / (1.0 - p);
    double pmf = std::exp(log_q0);
    double cdf = pmf;
    std::int64_t k = 0;
    while (u >= cdf && k < trials) {
        pmf *= odds * static_cast<double>(trials - k) / static_cast<double>(k + 1);
        ++k;
        cdf += pmf;
    }
    return k;
}

} // namespace driftlab
