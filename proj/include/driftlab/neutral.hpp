#pragma once

/// @file neutral.hpp
/// @brief The one-dimensional frequency process of a neutral bit.
///
/// For a neutral bit the frequency evolves independently of the fitness
/// function, of D (without margins) and, for PBIL, of lambda:
///
///   PBIL: p_t = (1 - rho) p_{t-1} + (rho / mu) Y,  Y ~ Bin(mu, p_{t-1})
///   cGA:  p_t = p_{t-1} +- 1/K, each with probability p_{t-1}(1 - p_{t-1})
///
/// Both are martingales.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "driftlab/eda.hpp"
#include "driftlab/random.hpp"
#include "driftlab/stopping.hpp"

namespace driftlab {

/// Exact frequency numerator / denominator.
struct GridValue {
    std::int64_t num = 0;
    std::int64_t den = 1;
    [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const GridValue&, const GridValue&) = default;
};

struct NeutralProcessSpec {
    enum class Kind { PBIL, CGA };

    Kind kind = Kind::PBIL;
    std::int64_t mu = 1;
    double rho = 1.0;
    /// Time-dependent rates (CE); empty means constant rho.
    std::vector<double> rho_schedule;
    std::int64_t K = 2;
    std::optional<std::size_t> margins_dim;

    static NeutralProcessSpec pbil(std::int64_t mu, double rho);
    static NeutralProcessSpec umda(std::int64_t mu) { return pbil(mu, 1.0); }
    static NeutralProcessSpec ce(std::int64_t mu, std::vector<double> schedule);
    static NeutralProcessSpec cga(std::int64_t K);
    /// The reduced process of the first bit of `spec`; lambda, D (without
    /// margins) and the fitness function drop out.
    static NeutralProcessSpec from_eda(const EdaSpec& spec);

    [[nodiscard]] NeutralProcessSpec with_margins(std::size_t dim) const;

    void validate() const;

    [[nodiscard]] double rate_at(std::size_t t) const;
    [[nodiscard]] double min_rate_from(std::size_t t) const;
    [[nodiscard]] double max_rate() const;
    [[nodiscard]] std::optional<Margins> margins() const;
    /// Denominator of the cGA grid (K, or 2K when 1/2 or the margins need it).
    [[nodiscard]] std::int64_t cga_denominator() const;
};

/// One PBIL step of the neutral frequency: (1 - rho) p + rho * Bin(mu, p) / mu.
double pbil_neutral_step(double p, std::int64_t mu, double rho, RandomStream& rng);

/// Same step, also reporting the binomial draw.
double pbil_neutral_step(double p, std::int64_t mu, double rho, RandomStream& rng, std::int64_t& ones);

/// One cGA step of the neutral frequency on the grid p.den, with step
/// p.den / K. Both samples are drawn exactly from Bernoulli(p).
GridValue cga_neutral_step(GridValue p, std::int64_t K, RandomStream& rng);

/// True iff mu * q / rho <= epsilon with q = min(p, 1 - p): by a union bound
/// over all future samples, the probability that the bit is ever sampled at
/// the minority value again is at most epsilon. For rho >= 1 this holds only
/// when q == 0.
bool certify_runaway(double p, std::int64_t mu, double rho, double epsilon);

/// Iteration budget of 200 times the Theta-scale of the process (K^2 for the
/// cGA, mu / rho^2 for PBIL), plus the run-away certification tail.
std::size_t default_budget(const NeutralProcessSpec& spec, const StoppingRule& stop);

/// Runs the process from p_0 = 1/2 until `stop` fires or `budget` iterations
/// have run. Budget exhaustion is reported with Trigger::BudgetExhausted.
HittingRecord simulate_until(const NeutralProcessSpec& spec, const StoppingRule& stop, RandomStream& rng,
                             std::size_t budget);

/// p_1 ... p_horizon of one trajectory from p_0 = 1/2.
std::vector<double> simulate_path(const NeutralProcessSpec& spec, std::size_t horizon, RandomStream& rng);

} // namespace driftlab
