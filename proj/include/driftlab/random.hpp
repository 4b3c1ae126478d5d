#pragma once

/// @file random.hpp
/// @brief Counter-based random streams.
///
/// A RandomStream is addressed by a 64-bit key and a 64-bit counter. The i-th
/// output is a SplitMix64 finalizer applied to key + i * golden-gamma, so any
/// position can be reached in O(1) and streams derived from (master_seed,
/// replica) are independent of the order in which replicas execute.

#include <cstdint>
#include <limits>

namespace driftlab {

class RandomStream {
  public:
    using result_type = std::uint64_t;

    RandomStream() : RandomStream(0, 0) {}
    RandomStream(std::uint64_t master_seed, std::uint64_t stream_id);

    /// Child stream; distinct child ids give distinct keys.
    [[nodiscard]] RandomStream split(std::uint64_t child_id) const;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return next(); }
    result_type next();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01();
    /// Uniform integer in [0, bound), unbiased. bound must be positive.
    std::uint64_t uniform_below(std::uint64_t bound);
    bool bernoulli(double p) { return uniform01() < p; }
    /// Exact Bernoulli(numerator / denominator) for grid frequencies.
    bool bernoulli_ratio(std::int64_t numerator, std::int64_t denominator);
    /// Exact-distribution binomial draw (sequential inversion).
    std::int64_t binomial(std::int64_t trials, double p);

    [[nodiscard]] std::uint64_t key() const { return key_; }
    [[nodiscard]] std::uint64_t counter() const { return counter_; }
    void seek(std::uint64_t counter) { counter_ = counter; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

} // namespace driftlab
