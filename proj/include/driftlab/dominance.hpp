#pragma once

/// @file dominance.hpp
/// @brief Exact one-step frequency laws under a fitness function and
/// first-order stochastic dominance checks between runs.
///
/// X dominates Y (X >= Y in the usual stochastic order) iff
/// Pr[X <= x] <= Pr[Y <= x] for every x.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "driftlab/eda.hpp"

namespace driftlab {

struct DiscreteDistribution {
    std::vector<double> support;
    std::vector<double> masses;

    static DiscreteDistribution point_mass(double x) { return {{x}, {1.0}}; }
    /// Builds from value -> mass pairs; zero masses are dropped.
    static DiscreteDistribution from_map(const std::map<double, double>& law);

    /// Throws DomainError unless the support is strictly increasing, masses
    /// are nonnegative and sum to 1 within 1e-12.
    void validate() const;
    [[nodiscard]] double cdf(double x) const;
    [[nodiscard]] double mean() const;
};

struct DominanceVerdict {
    bool dominates = true;
    /// max over x of CDF_a(x) - CDF_b(x), floored at 0.
    double max_cdf_violation = 0.0;
    /// Point of the worst violation.
    double witness = 0.0;
};

/// a >= b iff CDF_a(x) <= CDF_b(x) + tol on the merged support.
DominanceVerdict stochastic_dominance(const DiscreteDistribution& a, const DiscreteDistribution& b,
                                      double tol = 1e-12);

/// Exact law of the whole next frequency vector, enumerating every sample
/// outcome. Selection ties are averaged over all tie resolutions with equal
/// weight; the cGA ranks the first sample first on ties. `t` selects the
/// learning rate for CE schedules. Throws InfeasibleSize when more than 16
/// sampled bits are random.
std::map<FrequencyVector, double> exact_onestep_law(const EdaSpec& spec, const FitnessFunction& fitness,
                                                    const FrequencyVector& freq, std::size_t t = 1);

/// Marginal of exact_onestep_law on one bit.
DiscreteDistribution exact_onestep_distribution(const EdaSpec& spec, const FitnessFunction& fitness,
                                                const FrequencyVector& freq, std::size_t bit, std::size_t t = 1);

DiscreteDistribution marginal(const std::map<FrequencyVector, double>& law, std::size_t bit);

/// One run of the comparison: algorithm, fitness and start vector.
struct DominanceSide {
    EdaSpec spec;
    FitnessFunction fitness = FitnessFunction::onemax();
    std::optional<FrequencyVector> start;
};

enum class DominanceMode { Exact, MonteCarlo };

struct DominanceOptions {
    std::size_t steps = 5;
    DominanceMode mode = DominanceMode::Exact;
    std::size_t bit = 0;
    /// Exact mode: tolerance on CDF differences.
    double tolerance = 1e-12;
    /// Exact mode: bound on the number of distinct reachable vectors.
    std::size_t max_states = 4096;
    /// Monte Carlo mode.
    std::size_t replicas = 100000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    double level = 1e-3;
};

struct StepReport {
    std::size_t t = 0;
    DominanceVerdict verdict;
    /// Allowed CDF excess: the tolerance (exact) or the one-sided DKW bound.
    double slack = 0.0;
};

/// For t = 0..steps, whether the bit frequency of side `f` dominates that of
/// side `g`. Exact mode propagates the full-vector laws; Monte Carlo mode
/// compares empirical CDFs with a two-sample one-sided DKW slack at `level`.
std::vector<StepReport> multistep_dominance_check(const DominanceSide& f, const DominanceSide& g,
                                                  const DominanceOptions& options);

/// sqrt(ln(2/level)/(2n)) + sqrt(ln(2/level)/(2m)): with probability at
/// least 1 - level, sup_x (F_n - G_m) exceeds sup_x (F - G) by less than this.
double dkw_two_sample_slack(std::size_t n, std::size_t m, double level);

/// Restricted mean of T0 = first t with the watched frequency <= level,
/// censored at `budget`, for two EDA runs.
struct LowerHitComparison {
    double mean_f = 0.0;
    double mean_g = 0.0;
    double stderr_f = 0.0;
    double stderr_g = 0.0;
    std::size_t censored_f = 0;
    std::size_t censored_g = 0;
    /// mean_f >= mean_g - 3 * pooled standard error.
    bool consistent = false;
};
LowerHitComparison compare_lower_hitting(const DominanceSide& f, const DominanceSide& g, double level,
                                         std::size_t replicas, std::size_t budget, std::uint64_t seed,
                                         unsigned threads = 0, std::size_t bit = 0);

/// A pair whose one-step laws are to be compared (f expected to dominate g).
struct DominanceCase {
    DominanceSide f;
    DominanceSide g;
    std::size_t bit = 0;
};

struct DominanceViolation {
    std::size_t case_index = 0;
    DominanceVerdict verdict;
};

/// First case whose exact one-step laws violate dominance, if any. Used to
/// search for counterexamples when both functions prefer a one.
std::optional<DominanceViolation> find_onestep_violation(std::span<const DominanceCase> cases, double tol = 1e-12);

} // namespace driftlab
