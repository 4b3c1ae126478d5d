#pragma once

/// @file lab.hpp
/// @brief Monte Carlo hitting-time campaigns, power-law fits, tail-bound
/// validation and the population-size advisor.
///
/// Replica r of a campaign draws from RandomStream(master_seed, r), and
/// results are folded in replica order, so summaries do not depend on the
/// number of worker threads.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "driftlab/eda.hpp"
#include "driftlab/neutral.hpp"
#include "driftlab/stopping.hpp"

namespace driftlab {

/// A full EDA run watched on one bit.
struct EdaModel {
    EdaSpec spec;
    FitnessFunction fitness = FitnessFunction::neutral(0);
    std::size_t watch_bit = 0;
};

using Model = std::variant<NeutralProcessSpec, EdaModel>;

enum class SweepParameter { Mu, Rho, K };

std::string_view to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(std::string_view name);

struct Sweep {
    SweepParameter parameter = SweepParameter::K;
    std::vector<double> values;
};

struct ExperimentConfig {
    Model model = NeutralProcessSpec::cga(2);
    StoppingRule stop;
    std::size_t replicas = 1000;
    std::uint64_t master_seed = 1;
    /// Iteration cap per replica; default_budget() when empty.
    std::optional<std::size_t> budget;
    /// Worker cap; 0 defers to resolve_threads().
    unsigned threads = 0;
    std::optional<Sweep> sweep;

    /// Throws InvalidSpec; every sweep value is checked against the model.
    void validate() const;
    [[nodiscard]] std::size_t effective_budget() const;
};

/// `model` with the swept parameter replaced by `value`.
Model apply_sweep_value(const Model& model, SweepParameter parameter, double value);

struct HittingSummary {
    std::size_t n = 0;
    /// Over replicas that stopped within the budget.
    double mean = 0.0;
    double std_error = 0.0;
    double ci95_lo = 0.0;
    double ci95_hi = 0.0;
    double median = 0.0;
    std::size_t budget_exhausted = 0;
    /// budget_exhausted > 0.1% of n: the mean is biased low.
    bool flagged = false;
    /// Run-away campaigns: bound on the probability that a certified time is wrong.
    std::optional<double> certification_bias;
    /// Indexed by replica.
    std::vector<HittingRecord> samples;
};

/// Summary statistics of replica records: normal-approximation 95% CI,
/// budget-exhausted replicas excluded from mean and median. Throws
/// ExperimentFailed if every replica exhausted its budget.
HittingSummary summarize(std::vector<HittingRecord> samples);

HittingSummary run_hitting_experiment(const ExperimentConfig& config);

struct SweepPoint {
    double value = 0.0;
    HittingSummary summary;
};

/// One campaign per sweep value, all with the same master seed.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& config);

struct ScalingFit {
    double exponent = 0.0;
    double multiplier = 0.0;
    double r_squared = 0.0;
};

/// Least squares of log(mean) on log(parameter): mean ~ multiplier * x^exponent.
/// Needs at least 3 positive points.
ScalingFit fit_scaling_law(const std::vector<std::pair<double, double>>& points);

struct TailEntry {
    std::size_t horizon = 0;
    /// 2 exp(-gamma^2 mu / (2 rho^2 T)) or 2 exp(-gamma^2 K^2 / (2 T)).
    double bound = 0.0;
    double empirical = 0.0;
    /// One-sided 99% Wilson limits for the empirical probability.
    double lower99 = 0.0;
    double upper99 = 0.0;
    /// From the exact chain, when one exists (cGA with even K, UMDA with even mu).
    std::optional<double> exact;
    /// Lower limit above the bound, or exact probability above it.
    bool violated = false;
};

struct TailReport {
    double gamma = 0.25;
    std::size_t replicas = 0;
    std::vector<TailEntry> entries;
    [[nodiscard]] bool any_violation() const;
};

/// Analytic bound on Pr[exists t <= T: |p_t - 1/2| >= gamma] for the neutral process.
double tail_bound(const NeutralProcessSpec& spec, double gamma, std::size_t horizon);

/// Empirical and exact exit probabilities from [1/2 - gamma, 1/2 + gamma]
/// against tail_bound(). Requires gamma in (0, 1/2] and horizons >= 1.
TailReport validate_tail_bound(const NeutralProcessSpec& spec, double gamma, const std::vector<std::size_t>& horizons,
                               std::size_t replicas, std::uint64_t seed, unsigned threads = 0);

/// Probabilities Pr[exists t <= T: |p_t - 1/2| >= gamma] for T = 0..horizon
/// from the exact chain, or nullopt if the process has none.
std::optional<std::vector<double>> exact_exit_distribution(const NeutralProcessSpec& spec, double gamma,
                                                           std::size_t horizon);

struct AdviceRequest {
    Algorithm algorithm = Algorithm::CGA;
    double budget_evals = 10000;
    std::size_t dim = 100;
    double gamma = 0.25;
    double delta = 0.1;
    /// PBIL family: evaluations per iteration.
    std::int64_t lambda = 1;
    /// PBIL: learning rate; UMDA uses 1.
    double rho = 1.0;

    void validate() const;
};

struct Advice {
    /// K for the cGA, mu for the PBIL family.
    std::int64_t value = 0;
    /// Unrounded lower bound on the parameter.
    double raw_bound = 0.0;
    /// Iterations covered by the budget.
    double iterations = 0.0;
};

/// Smallest parameter for which, by the tail bound and a union bound over D
/// neutral bits, no bit leaves [1/2 - gamma, 1/2 + gamma] within the budget
/// with probability at least 1 - delta. cGA: T = F/2 and the smallest even
/// K >= sqrt(2T ln(2D/delta)) / gamma. PBIL: T = floor(F/lambda) and
/// mu >= 2 rho^2 T ln(2D/delta) / gamma^2.
Advice advise_parameters(const AdviceRequest& request);

/// Run-away times of PBIL with rho < 1 and c in (1/2, 1/sqrt(2)).
HittingSummary runaway_campaign(std::int64_t mu, double rho, double c, double epsilon, std::size_t replicas,
                                std::uint64_t seed, unsigned threads = 0,
                                std::optional<std::size_t> budget = std::nullopt);

} // namespace driftlab
