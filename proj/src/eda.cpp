#include "driftlab/eda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "driftlab/errors.hpp"

namespace driftlab {

std::string_view to_string(Algorithm algorithm) {
    switch (algorithm) {
    case Algorithm::PBIL: return "pbil";
    case Algorithm::UMDA: return "umda";
    case Algorithm::LambdaMMAS: return "mmas";
    case Algorithm::CGA: return "cga";
    case Algorithm::CE: return "ce";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view name) {
    if (name == "pbil") return Algorithm::PBIL;
    if (name == "umda") return Algorithm::UMDA;
    if (name == "mmas") return Algorithm::LambdaMMAS;
    if (name == "cga") return Algorithm::CGA;
    if (name == "ce") return Algorithm::CE;
    throw InvalidSpec("algo: unknown algorithm '" + std::string(name) + "' (expected pbil, umda, mmas, cga, ce)");
}

std::string_view to_string(FitnessKind kind) {
    switch (kind) {
    case FitnessKind::Neutral: return "neutral";
    case FitnessKind::OneMax: return "onemax";
    case FitnessKind::LeadingOnes: return "leading-ones";
    case FitnessKind::WeakPreferOne: return "prefer-one";
    case FitnessKind::WeakPreferZero: return "prefer-zero";
    case FitnessKind::Custom: return "custom";
    }
    return "?";
}

// ---------------------------------------------------------------- FrequencyVector

FrequencyVector FrequencyVector::continuous(std::vector<double> values) {
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("frequency outside [0,1]");
    }
    FrequencyVector f;
    f.values_ = std::move(values);
    return f;
}

FrequencyVector FrequencyVector::grid(std::int64_t denominator, std::vector<std::int64_t> numerators) {
    if (denominator <= 0) throw DomainError("grid denominator must be positive");
    for (auto n : numerators) {
        if (n < 0 || n > denominator) throw DomainError("grid frequency outside [0,1]");
    }
    FrequencyVector f;
    f.denominator_ = denominator;
    f.numerators_ = std::move(numerators);
    return f;
}

FrequencyVector FrequencyVector::half(std::size_t dim, std::int64_t denominator) {
    if (denominator == 0) return continuous(std::vector<double>(dim, 0.5));
    if (denominator % 2 != 0) throw InvalidSpec("1/2 is not on a grid with odd denominator");
    return grid(denominator, std::vector<std::int64_t>(dim, denominator / 2));
}

double FrequencyVector::operator[](std::size_t j) const {
    if (is_grid()) return static_cast<double>(numerators_[j]) / static_cast<double>(denominator_);
    return values_[j];
}

std::vector<double> FrequencyVector::values() const {
    std::vector<double> out(size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = (*this)[j];
    return out;
}

void FrequencyVector::set(std::size_t j, double value) {
    if (is_grid()) throw std::logic_error("set() on a grid frequency vector");
    values_.at(j) = value;
}

void FrequencyVector::set_numerator(std::size_t j, std::int64_t numerator) {
    if (!is_grid()) throw std::logic_error("set_numerator() on a continuous frequency vector");
    if (numerator < 0 || numerator > denominator_) throw std::logic_error("grid frequency left [0,1]");
    numerators_.at(j) = numerator;
}

// ---------------------------------------------------------------- EdaSpec

EdaSpec EdaSpec::pbil(std::int64_t mu, std::int64_t lambda, double rho, std::size_t dim) {
    EdaSpec s;
    s.algorithm = Algorithm::PBIL;
    s.mu = mu;
    s.lambda = lambda;
    s.rho = rho;
    s.dim = dim;
    return s;
}

EdaSpec EdaSpec::umda(std::int64_t mu, std::int64_t lambda, std::size_t dim) {
    EdaSpec s = pbil(mu, lambda, 1.0, dim);
    s.algorithm = Algorithm::UMDA;
    return s;
}

EdaSpec EdaSpec::mmas(std::int64_t lambda, double rho, std::size_t dim) {
    EdaSpec s = pbil(1, lambda, rho, dim);
    s.algorithm = Algorithm::LambdaMMAS;
    return s;
}

EdaSpec EdaSpec::cga(std::int64_t K, std::size_t dim) {
    EdaSpec s;
    s.algorithm = Algorithm::CGA;
    s.mu = 1;
    s.lambda = 2;
    s.K = K;
    s.dim = dim;
    return s;
}

EdaSpec EdaSpec::ce(std::int64_t mu, std::int64_t lambda, std::vector<double> schedule, std::size_t dim) {
    EdaSpec s = pbil(mu, lambda, schedule.empty() ? 1.0 : schedule.front(), dim);
    s.algorithm = Algorithm::CE;
    s.rho_schedule = std::move(schedule);
    return s;
}

namespace {
bool valid_rate(double r) { return r > 0.0 && r <= 1.0; }
} // namespace

void EdaSpec::validate() const {
    if (dim < 1) throw InvalidSpec("dim: must be >= 1");
    if (margins && dim < 2) throw InvalidSpec("dim: margins [1/D, 1-1/D] need D >= 2");

    if (algorithm == Algorithm::CGA) {
        if (lambda != 2) throw InvalidSpec("lambda: the cGA samples exactly 2 individuals");
        if (K < 2) throw InvalidSpec("K: must be >= 2");
        if (!margins) {
            if (K % 2 != 0) throw InvalidSpec("K: must be even so that 1/2 lies on the 1/K grid");
        } else {
            const auto D = static_cast<std::int64_t>(dim);
            // (1 - 2/D) must be an even multiple of 1/K, i.e. (D-2)K/D is an even integer
            if (((D - 2) * K) % D != 0 || (((D - 2) * K) / D) % 2 != 0) {
                std::ostringstream msg;
                msg << "K: with margins, 1 - 2/D must be an even multiple of 1/K (D=" << D << ", K=" << K << ")";
                throw InvalidSpec(msg.str());
            }
        }
        return;
    }

    if (mu < 1) throw InvalidSpec("mu: must be >= 1");
    if (lambda < mu) throw InvalidSpec("lambda: must be >= mu");
    switch (algorithm) {
    case Algorithm::UMDA:
        if (rho != 1.0) throw InvalidSpec("rho: UMDA is PBIL with rho = 1");
        break;
    case Algorithm::LambdaMMAS:
        if (mu != 1) throw InvalidSpec("mu: lambda-MMAS selects mu = 1");
        if (!valid_rate(rho)) throw InvalidSpec("rho: must lie in (0, 1]");
        break;
    case Algorithm::PBIL:
        if (!valid_rate(rho)) throw InvalidSpec("rho: must lie in (0, 1]");
        break;
    case Algorithm::CE:
        if (rho_schedule.empty()) throw InvalidSpec("schedule: CE needs at least one learning rate");
        for (double r : rho_schedule) {
            if (!valid_rate(r)) throw InvalidSpec("schedule: every rate must lie in (0, 1]");
        }
        break;
    case Algorithm::CGA: break;
    }
}

double EdaSpec::rate_at(std::size_t t) const {
    if (algorithm != Algorithm::CE) return rho;
    const std::size_t i = t == 0 ? 0 : t - 1;
    return i < rho_schedule.size() ? rho_schedule[i] : rho_schedule.back();
}

double EdaSpec::min_rate_from(std::size_t t) const {
    if (algorithm != Algorithm::CE) return rho;
    const std::size_t i = t == 0 ? 0 : std::min(t - 1, rho_schedule.size() - 1);
    return *std::min_element(rho_schedule.begin() + static_cast<std::ptrdiff_t>(i), rho_schedule.end());
}

double EdaSpec::max_rate() const {
    if (algorithm != Algorithm::CE) return rho;
    return *std::max_element(rho_schedule.begin(), rho_schedule.end());
}

std::optional<Margins> EdaSpec::margin_bounds() const {
    if (!margins) return std::nullopt;
    return Margins{dim};
}

std::int64_t EdaSpec::grid_denominator() const {
    if (algorithm == Algorithm::CGA) return (!margins && K % 2 == 0) ? K : 2 * K;
    const bool unit_rate = algorithm != Algorithm::CE && rho == 1.0;
    if (unit_rate && !margins) return mu % 2 == 0 ? mu : 2 * mu;
    return 0;
}

// ---------------------------------------------------------------- Population

std::int64_t Population::column_sum(std::size_t j) const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += bits[i * dim + j];
    return s;
}

void Population::push_back(std::span<const std::uint8_t> x, double f) {
    bits.insert(bits.end(), x.begin(), x.end());
    fitness.push_back(f);
}

// ---------------------------------------------------------------- FitnessFunction

namespace {
double ones_except(std::span<const std::uint8_t> x, std::size_t bit) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (j != bit) s += x[j];
    }
    return s;
}
} // namespace

FitnessFunction FitnessFunction::neutral(std::size_t bit) {
    return {FitnessKind::Neutral, "neutral", [bit](std::span<const std::uint8_t> x) { return ones_except(x, bit); },
            bit, 0.0};
}

FitnessFunction FitnessFunction::onemax() {
    return {FitnessKind::OneMax, "onemax",
            [](std::span<const std::uint8_t> x) {
                return static_cast<double>(std::accumulate(x.begin(), x.end(), 0));
            },
            0, 1.0};
}

FitnessFunction FitnessFunction::leading_ones() {
    return {FitnessKind::LeadingOnes, "leadingones",
            [](std::span<const std::uint8_t> x) {
                std::size_t n = 0;
                while (n < x.size() && x[n] == 1) ++n;
                return static_cast<double>(n);
            },
            0, 1.0};
}

FitnessFunction FitnessFunction::weak_prefer_one(std::size_t bit, double weight) {
    if (!(weight >= 0.0)) throw InvalidSpec("weight: must be >= 0");
    return {FitnessKind::WeakPreferOne, "prefer-one",
            [bit, weight](std::span<const std::uint8_t> x) { return weight * x[bit] + ones_except(x, bit); }, bit,
            weight};
}

FitnessFunction FitnessFunction::weak_prefer_zero(std::size_t bit, double weight) {
    if (!(weight >= 0.0)) throw InvalidSpec("weight: must be >= 0");
    return {FitnessKind::WeakPreferZero, "prefer-zero",
            [bit, weight](std::span<const std::uint8_t> x) { return -weight * x[bit] + ones_except(x, bit); }, bit,
            weight};
}

FitnessFunction FitnessFunction::custom(std::string name, Evaluator evaluator) {
    return {FitnessKind::Custom, std::move(name), std::move(evaluator), 0, 0.0};
}

std::optional<int> bit_preference(const FitnessFunction& f, std::size_t bit, std::size_t dim) {
    if (dim > 20) throw InfeasibleSize("bit_preference: exhaustive check limited to D <= 20");
    if (bit >= dim) throw DomainError("bit_preference: bit index out of range");
    bool up = false;
    bool down = false;
    std::vector<std::uint8_t> x(dim);
    const std::uint64_t combos = std::uint64_t{1} << dim;
    for (std::uint64_t mask = 0; mask < combos; ++mask) {
        if ((mask >> bit) & 1U) continue;
        for (std::size_t j = 0; j < dim; ++j) x[j] = static_cast<std::uint8_t>((mask >> j) & 1U);
        const double f0 = f(x);
        x[bit] = 1;
        const double f1 = f(x);
        up = up || f1 > f0;
        down = down || f1 < f0;
    }
    if (up && down) return std::nullopt;
    return up ? 1 : (down ? -1 : 0);
}

// ---------------------------------------------------------------- operations

Population sample_population(const FrequencyVector& freq, const EdaSpec& spec, const FitnessFunction& fitness,
                             RandomStream& rng) {
    const std::size_t dim = freq.size();
    Population pop;
    pop.dim = dim;
    pop.bits.resize(static_cast<std::size_t>(spec.lambda) * dim);
    pop.fitness.resize(static_cast<std::size_t>(spec.lambda));
    for (std::size_t i = 0; i < pop.fitness.size(); ++i) {
        std::uint8_t* row = pop.bits.data() + i * dim;
        for (std::size_t j = 0; j < dim; ++j) {
            const bool one = freq.is_grid() ? rng.bernoulli_ratio(freq.numerator(j), freq.denominator())
                                            : rng.bernoulli(freq[j]);
            row[j] = one ? 1 : 0;
        }
        pop.fitness[i] = fitness(pop.individual(i));
    }
    return pop;
}

Population select_mu_best(const Population& population, std::int64_t mu, RandomStream& rng) {
    if (mu < 1 || static_cast<std::size_t>(mu) > population.size()) {
        throw InvalidSpec("mu: cannot select " + std::to_string(mu) + " of " + std::to_string(population.size()));
    }
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates, then a stable sort: equal-fitness individuals keep a uniform random order
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.uniform_below(i)]);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return population.fitness[a] > population.fitness[b]; });
    Population selected;
    selected.dim = population.dim;
    for (std::size_t k = 0; k < static_cast<std::size_t>(mu); ++k) {
        selected.push_back(population.individual(order[k]), population.fitness[order[k]]);
    }
    return selected;
}

FrequencyVector pbil_update(const FrequencyVector& freq, const Population& selected, double rho,
                            std::optional<Margins> margins) {
    const std::size_t dim = freq.size();
    const auto mu = static_cast<std::int64_t>(selected.size());
    if (mu == 0) throw InvalidSpec("mu: empty selection");

    if (rho == 1.0 && !margins) {
        const std::int64_t den = mu % 2 == 0 ? mu : 2 * mu;
        std::vector<std::int64_t> num(dim);
        for (std::size_t j = 0; j < dim; ++j) num[j] = selected.column_sum(j) * (den / mu);
        return FrequencyVector::grid(den, std::move(num));
    }

    std::vector<double> next(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        const double s = static_cast<double>(selected.column_sum(j));
        double p = (1.0 - rho) * freq[j] + rho * s / static_cast<double>(mu);
        p = std::clamp(p, 0.0, 1.0);
        if (margins) p = std::clamp(p, margins->lo(), margins->hi());
        next[j] = p;
    }
    return FrequencyVector::continuous(std::move(next));
}

FrequencyVector cga_update(const FrequencyVector& freq, std::span<const std::uint8_t> first,
                           std::span<const std::uint8_t> second, bool first_is_better, std::int64_t K,
                           std::optional<Margins> margins) {
    if (!freq.is_grid() || freq.denominator() % K != 0) {
        throw std::logic_error("cga_update: frequency vector is not on the 1/K grid");
    }
    const std::int64_t den = freq.denominator();
    const std::int64_t step = den / K;
    std::int64_t lo = 0;
    std::int64_t hi = den;
    if (margins) {
        const auto D = static_cast<std::int64_t>(margins->dim);
        if (den % D != 0) throw std::logic_error("cga_update: margin 1/D is not on the frequency grid");
        lo = den / D;
        hi = den - lo;
    }
    const auto winner = first_is_better ? first : second;
    const auto loser = first_is_better ? second : first;

    FrequencyVector next = freq;
    for (std::size_t j = 0; j < freq.size(); ++j) {
        std::int64_t n = freq.numerator(j);
        if (winner[j] > loser[j]) n += step;
        else if (winner[j] < loser[j]) n -= step;
        n = std::clamp(n, lo, hi);
        next.set_numerator(j, n);
    }
    return next;
}

StepOutcome eda_step(const FrequencyVector& freq, const EdaSpec& spec, const FitnessFunction& fitness, std::size_t t,
                     RandomStream& rng) {
    const Population pop = sample_population(freq, spec, fitness, rng);
    StepOutcome out;
    out.selected_ones.resize(freq.size());
    if (spec.algorithm == Algorithm::CGA) {
        const bool first_wins = pop.fitness[0] >= pop.fitness[1];
        out.next = cga_update(freq, pop.individual(0), pop.individual(1), first_wins, spec.K, spec.margin_bounds());
        const auto winner = pop.individual(first_wins ? 0 : 1);
        for (std::size_t j = 0; j < freq.size(); ++j) out.selected_ones[j] = winner[j];
        return out;
    }
    const Population selected = select_mu_best(pop, spec.mu, rng);
    out.next = pbil_update(freq, selected, spec.rate_at(t), spec.margin_bounds());
    for (std::size_t j = 0; j < freq.size(); ++j) out.selected_ones[j] = selected.column_sum(j);
    return out;
}

EdaTrace run_eda(const EdaSpec& spec, const FitnessFunction& fitness, const StoppingRule& stop, RandomStream& rng,
                 std::size_t budget, const RunOptions& options) {
    spec.validate();
    stop.validate();
    if (options.watch_bit >= spec.dim) throw InvalidSpec("watch_bit: out of range");
    if (stop.kind == StopKind::RunAway && spec.algorithm == Algorithm::CGA) {
        throw InvalidSpec("stop: run-away is defined for the PBIL family only");
    }

    EdaTrace trace;
    FrequencyVector p = options.start ? *options.start : spec.initial();
    if (p.size() != spec.dim) throw InvalidSpec("start: dimension mismatch");
    if (options.record_history) trace.history.push_back(p);

    const std::int64_t driver_count = spec.algorithm == Algorithm::CGA ? 1 : spec.mu;
    StopMonitor monitor(stop, spec.margin_bounds(), driver_count, spec.max_rate());
    if (auto hit = monitor.start(p[options.watch_bit])) {
        trace.final = p;
        trace.record = *hit;
        return trace;
    }
    for (std::size_t t = 1; t <= budget; ++t) {
        StepOutcome step = eda_step(p, spec, fitness, t, rng);
        p = std::move(step.next);
        if (options.record_history) trace.history.push_back(p);
        auto hit = monitor.observe(t, p[options.watch_bit], step.selected_ones[options.watch_bit],
                                   spec.min_rate_from(t + 1));
        if (hit) {
            trace.final = p;
            trace.record = *hit;
            return trace;
        }
    }
    trace.final = p;
    trace.record = HittingRecord{budget, p[options.watch_bit], Trigger::BudgetExhausted, false};
    return trace;
}

} // namespace driftlab
