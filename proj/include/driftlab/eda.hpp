#pragma once

/// @file eda.hpp
/// @brief The n-Bernoulli-lambda-EDA framework: frequency vectors, sampling,
/// selection, and the PBIL family and cGA update schemes.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftlab/random.hpp"
#include "driftlab/stopping.hpp"

namespace driftlab {

enum class Algorithm { PBIL, UMDA, LambdaMMAS, CGA, CE };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

/// Sampling frequencies p in [0,1]^D.
///
/// Either every entry is an exact rational numerator / denominator (cGA and
/// UMDA without margins) or every entry is a double (PBIL with rho < 1, CE,
/// clamped UMDA).
class FrequencyVector {
  public:
    FrequencyVector() = default;

    static FrequencyVector continuous(std::vector<double> values);
    static FrequencyVector grid(std::int64_t denominator, std::vector<std::int64_t> numerators);
    /// (1/2, ..., 1/2) on the given grid; denominator 0 means continuous.
    static FrequencyVector half(std::size_t dim, std::int64_t denominator);

    [[nodiscard]] std::size_t size() const { return is_grid() ? numerators_.size() : values_.size(); }
    [[nodiscard]] bool is_grid() const { return denominator_ > 0; }
    [[nodiscard]] std::int64_t denominator() const { return denominator_; }
    [[nodiscard]] std::int64_t numerator(std::size_t j) const { return numerators_.at(j); }
    [[nodiscard]] const std::vector<std::int64_t>& numerators() const { return numerators_; }

    [[nodiscard]] double operator[](std::size_t j) const;
    [[nodiscard]] std::vector<double> values() const;

    void set(std::size_t j, double value);
    void set_numerator(std::size_t j, std::int64_t numerator);

    friend bool operator==(const FrequencyVector&, const FrequencyVector&) = default;
    friend auto operator<=>(const FrequencyVector&, const FrequencyVector&) = default;

  private:
    std::int64_t denominator_ = 0;
    std::vector<std::int64_t> numerators_;
    std::vector<double> values_;
};

/// Algorithm identity and parameters.
struct EdaSpec {
    Algorithm algorithm = Algorithm::PBIL;
    std::int64_t mu = 1;
    std::int64_t lambda = 1;
    double rho = 1.0;
    /// CE learning rates rho_1, rho_2, ...; the last entry repeats forever.
    std::vector<double> rho_schedule;
    std::int64_t K = 2;
    bool margins = false;
    std::size_t dim = 1;

    static EdaSpec pbil(std::int64_t mu, std::int64_t lambda, double rho, std::size_t dim = 1);
    static EdaSpec umda(std::int64_t mu, std::int64_t lambda, std::size_t dim = 1);
    static EdaSpec mmas(std::int64_t lambda, double rho, std::size_t dim = 1);
    static EdaSpec cga(std::int64_t K, std::size_t dim = 1);
    static EdaSpec ce(std::int64_t mu, std::int64_t lambda, std::vector<double> schedule, std::size_t dim = 1);

    /// Throws InvalidSpec naming the offending parameter.
    void validate() const;

    [[nodiscard]] bool is_pbil_family() const { return algorithm != Algorithm::CGA; }
    /// Learning rate used in iteration t >= 1.
    [[nodiscard]] double rate_at(std::size_t t) const;
    /// Smallest learning rate used from iteration t on.
    [[nodiscard]] double min_rate_from(std::size_t t) const;
    [[nodiscard]] double max_rate() const;
    [[nodiscard]] std::optional<Margins> margin_bounds() const;
    /// Denominator of the exact grid the frequencies live on, 0 if continuous.
    [[nodiscard]] std::int64_t grid_denominator() const;
    [[nodiscard]] FrequencyVector initial() const { return FrequencyVector::half(dim, grid_denominator()); }
};

/// lambda bitstrings of length D with their fitness values, row-major.
struct Population {
    std::size_t dim = 0;
    std::vector<std::uint8_t> bits;
    std::vector<double> fitness;

    [[nodiscard]] std::size_t size() const { return fitness.size(); }
    [[nodiscard]] std::span<const std::uint8_t> individual(std::size_t i) const {
        return {bits.data() + i * dim, dim};
    }
    [[nodiscard]] std::int64_t column_sum(std::size_t j) const;
    void push_back(std::span<const std::uint8_t> x, double f);
};

enum class FitnessKind { Neutral, OneMax, LeadingOnes, WeakPreferOne, WeakPreferZero, Custom };

std::string_view to_string(FitnessKind kind);

/// Pseudo-boolean fitness function to be maximised.
class FitnessFunction {
  public:
    using Evaluator = std::function<double(std::span<const std::uint8_t>)>;

    /// OneMax over every bit except `bit`; `bit` never influences fitness.
    static FitnessFunction neutral(std::size_t bit = 0);
    static FitnessFunction onemax();
    static FitnessFunction leading_ones();
    /// weight * x[bit] + OneMax over the other bits, weight >= 0.
    static FitnessFunction weak_prefer_one(std::size_t bit = 0, double weight = 1.0);
    /// -weight * x[bit] + OneMax over the other bits, weight >= 0.
    static FitnessFunction weak_prefer_zero(std::size_t bit = 0, double weight = 1.0);
    static FitnessFunction custom(std::string name, Evaluator evaluator);

    double operator()(std::span<const std::uint8_t> x) const { return evaluator_(x); }

    [[nodiscard]] FitnessKind kind() const { return kind_; }
    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] std::size_t bit() const { return bit_; }
    [[nodiscard]] double weight() const { return weight_; }

  private:
    FitnessFunction(FitnessKind kind, std::string name, Evaluator evaluator, std::size_t bit, double weight)
        : kind_(kind), name_(std::move(name)), evaluator_(std::move(evaluator)), bit_(bit), weight_(weight) {}

    FitnessKind kind_;
    std::string name_;
    Evaluator evaluator_;
    std::size_t bit_ = 0;
    double weight_ = 0.0;
};

/// Sign of f(x with bit=1) - f(x with bit=0) over all 2^(D-1) suffixes:
/// +1 weakly prefers one, -1 weakly prefers zero, 0 neutral. nullopt if mixed.
/// Exhaustive; D <= 20.
std::optional<int> bit_preference(const FitnessFunction& f, std::size_t bit, std::size_t dim);

Population sample_population(const FrequencyVector& freq, const EdaSpec& spec, const FitnessFunction& fitness,
                             RandomStream& rng);

/// The mu fittest individuals; equal-fitness individuals are ordered uniformly
/// at random. Throws InvalidSpec if mu > lambda.
Population select_mu_best(const Population& population, std::int64_t mu, RandomStream& rng);

/// p'_j = (1 - rho) p_j + (rho / mu) * (column sum of selected), then clamped
/// to the margins. With rho == 1 and no margins the result stays on an exact grid.
FrequencyVector pbil_update(const FrequencyVector& freq, const Population& selected, double rho,
                            std::optional<Margins> margins = std::nullopt);

/// Move each bit 1/K towards the winner wherever winner and loser differ.
/// `freq` must be on a grid whose denominator is a multiple of K.
FrequencyVector cga_update(const FrequencyVector& freq, std::span<const std::uint8_t> first,
                           std::span<const std::uint8_t> second, bool first_is_better, std::int64_t K,
                           std::optional<Margins> margins = std::nullopt);

/// One full iteration t (sample, select, update).
struct StepOutcome {
    FrequencyVector next;
    /// Ones in each bit among the individuals that drove the update
    /// (mu selected for PBIL; winner for the cGA).
    std::vector<std::int64_t> selected_ones;
};
StepOutcome eda_step(const FrequencyVector& freq, const EdaSpec& spec, const FitnessFunction& fitness, std::size_t t,
                     RandomStream& rng);

struct RunOptions {
    std::size_t watch_bit = 0;
    bool record_history = true;
    std::optional<FrequencyVector> start;
};

struct EdaTrace {
    std::vector<FrequencyVector> history;
    FrequencyVector final;
    HittingRecord record;
};

/// Runs Algorithm-1 style iterations from p^0 = (1/2, ..., 1/2) until `stop`
/// fires on the watched bit or `budget` iterations have run.
EdaTrace run_eda(const EdaSpec& spec, const FitnessFunction& fitness, const StoppingRule& stop, RandomStream& rng,
                 std::size_t budget, const RunOptions& options = {});

} // namespace driftlab
