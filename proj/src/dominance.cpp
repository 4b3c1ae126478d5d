#include "driftlab/dominance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "driftlab/errors.hpp"
#include "driftlab/parallel.hpp"

namespace driftlab {

DiscreteDistribution DiscreteDistribution::from_map(const std::map<double, double>& law) {
    DiscreteDistribution d;
    for (const auto& [x, m] : law) {
        if (m == 0.0) continue;
        d.support.push_back(x);
        d.masses.push_back(m);
    }
    return d;
}

void DiscreteDistribution::validate() const {
    if (support.size() != masses.size() || support.empty()) {
        throw DomainError("distribution: support and masses must be nonempty and of equal length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (i > 0 && !(support[i] > support[i - 1])) throw DomainError("distribution: support not increasing");
        if (!(masses[i] >= 0.0)) throw DomainError("distribution: negative mass");
        total += masses[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("distribution: masses do not sum to 1");
}

double DiscreteDistribution::cdf(double x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < support.size() && support[i] <= x; ++i) acc += masses[i];
    return acc;
}

double DiscreteDistribution::mean() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) acc += support[i] * masses[i];
    return acc;
}

DominanceVerdict stochastic_dominance(const DiscreteDistribution& a, const DiscreteDistribution& b, double tol) {
    a.validate();
    b.validate();
    std::vector<double> xs = a.support;
    xs.insert(xs.end(), b.support.begin(), b.support.end());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    DominanceVerdict v;
    double fa = 0.0;
    double fb = 0.0;
    std::size_t ia = 0;
    std::size_t ib = 0;
    for (double x : xs) {
        while (ia < a.support.size() && a.support[ia] <= x) fa += a.masses[ia++];
        while (ib < b.support.size() && b.support[ib] <= x) fb += b.masses[ib++];
        const double excess = fa - fb;
        if (excess > v.max_cdf_violation) {
            v.max_cdf_violation = excess;
            v.witness = x;
        }
    }
    v.dominates = v.max_cdf_violation <= tol;
    return v;
}

namespace {

constexpr std::size_t kMaxRandomCells = 16;

double choose(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (std::int64_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

/// Adds the selection law of one sampled population, averaging over the
/// equally likely tie resolutions.
void add_pbil_outcomes(const Population& pop, const EdaSpec& spec, const FrequencyVector& freq, double rho,
                       double weight, std::map<FrequencyVector, double>& law) {
    const std::size_t lambda = pop.size();
    const auto mu = static_cast<std::size_t>(spec.mu);
    std::vector<std::size_t> order(lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pop.fitness[a] > pop.fitness[b]; });
    const double threshold = pop.fitness[order[mu - 1]];

    Population base;
    base.dim = pop.dim;
    std::map<std::vector<std::uint8_t>, std::int64_t> tied;
    std::int64_t group = 0;
    for (std::size_t i = 0; i < lambda; ++i) {
        const auto x = pop.individual(i);
        if (pop.fitness[i] > threshold) {
            base.push_back(x, pop.fitness[i]);
        } else if (pop.fitness[i] == threshold) {
            ++tied[std::vector<std::uint8_t>(x.begin(), x.end())];
            ++group;
        }
    }
    const auto need = static_cast<std::int64_t>(mu - base.size());
    const double total = choose(group, need);

    std::vector<std::pair<std::vector<std::uint8_t>, std::int64_t>> types(tied.begin(), tied.end());
    std::vector<std::int64_t> take(types.size(), 0);
    const auto margins = spec.margin_bounds();

    // Depth-first over compositions (n_1, ..., n_k) with sum `need`.
    auto recurse = [&](auto&& self, std::size_t k, std::int64_t left, double ways) -> void {
        if (k == types.size()) {
            if (left != 0) return;
            Population selected = base;
            for (std::size_t i = 0; i < types.size(); ++i) {
                for (std::int64_t c = 0; c < take[i]; ++c) selected.push_back(types[i].first, threshold);
            }
            law[pbil_update(freq, selected, rho, margins)] += weight * ways / total;
            return;
        }
        const std::int64_t cap = std::min(left, types[k].second);
        for (std::int64_t n = 0; n <= cap; ++n) {
            take[k] = n;
            self(self, k + 1, left - n, ways * choose(types[k].second, n));
        }
        take[k] = 0;
    };
    recurse(recurse, 0, need, 1.0);
}

} // namespace

std::map<FrequencyVector, double> exact_onestep_law(const EdaSpec& spec, const FitnessFunction& fitness,
                                                    const FrequencyVector& freq, std::size_t t) {
    spec.validate();
    if (freq.size() != spec.dim) throw InvalidSpec("start: frequency vector length differs from dim");
    const std::size_t dim = spec.dim;
    const auto lambda = static_cast<std::size_t>(spec.lambda);

    std::vector<std::size_t> free_bits;
    for (std::size_t j = 0; j < dim; ++j) {
        if (freq[j] > 0.0 && freq[j] < 1.0) free_bits.push_back(j);
    }
    const std::size_t cells = free_bits.size() * lambda;
    if (cells > kMaxRandomCells) {
        throw InfeasibleSize("exact one-step law: " + std::to_string(cells) +
                             " random sampled bits exceed the enumeration limit of 16");
    }

    std::vector<std::uint8_t> fixed(dim);
    for (std::size_t j = 0; j < dim; ++j) fixed[j] = freq[j] >= 1.0 ? 1 : 0;

    const double rho = spec.is_pbil_family() ? spec.rate_at(t) : 0.0;
    std::map<FrequencyVector, double> law;
    std::vector<std::uint8_t> x(dim);
    for (std::uint64_t outcome = 0; outcome < (std::uint64_t{1} << cells); ++outcome) {
        Population pop;
        pop.dim = dim;
        double prob = 1.0;
        std::size_t cell = 0;
        for (std::size_t i = 0; i < lambda; ++i) {
            x = fixed;
            for (std::size_t j : free_bits) {
                const bool one = ((outcome >> cell++) & 1U) != 0;
                x[j] = one ? 1 : 0;
                prob *= one ? freq[j] : 1.0 - freq[j];
            }
            pop.push_back(x, fitness(x));
        }
        if (prob == 0.0) continue;

        if (spec.algorithm == Algorithm::CGA) {
            const bool first_wins = pop.fitness[0] >= pop.fitness[1];
            law[cga_update(freq, pop.individual(0), pop.individual(1), first_wins, spec.K, spec.margin_bounds())] +=
                prob;
        } else {
            add_pbil_outcomes(pop, spec, freq, rho, prob, law);
        }
    }
    return law;
}

DiscreteDistribution marginal(const std::map<FrequencyVector, double>& law, std::size_t bit) {
    std::map<double, double> m;
    for (const auto& [state, w] : law) m[state[bit]] += w;
    return DiscreteDistribution::from_map(m);
}

DiscreteDistribution exact_onestep_distribution(const EdaSpec& spec, const FitnessFunction& fitness,
                                                const FrequencyVector& freq, std::size_t bit, std::size_t t) {
    if (bit >= spec.dim) throw InvalidSpec("bit: out of range");
    return marginal(exact_onestep_law(spec, fitness, freq, t), bit);
}

double dkw_two_sample_slack(std::size_t n, std::size_t m, double level) {
    if (n == 0 || m == 0) throw InsufficientData("dominance: empty sample");
    if (!(level > 0.0 && level < 1.0)) throw InvalidSpec("level: must lie in (0, 1)");
    const double l = std::log(2.0 / level);
    return std::sqrt(l / (2.0 * static_cast<double>(n))) + std::sqrt(l / (2.0 * static_cast<double>(m)));
}

namespace {

FrequencyVector start_of(const DominanceSide& side) { return side.start ? *side.start : side.spec.initial(); }

DominanceVerdict empirical_dominance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    DominanceVerdict v;
    std::size_t ia = 0;
    std::size_t ib = 0;
    while (ia < a.size() || ib < b.size()) {
        double x = 0.0;
        if (ib >= b.size() || (ia < a.size() && a[ia] <= b[ib])) x = a[ia];
        else x = b[ib];
        while (ia < a.size() && a[ia] <= x) ++ia;
        while (ib < b.size() && b[ib] <= x) ++ib;
        const double excess = static_cast<double>(ia) / na - static_cast<double>(ib) / nb;
        if (excess > v.max_cdf_violation) {
            v.max_cdf_violation = excess;
            v.witness = x;
        }
    }
    return v;
}

std::vector<StepReport> exact_multistep(const DominanceSide& f, const DominanceSide& g, const DominanceOptions& o) {
    std::map<FrequencyVector, double> lf{{start_of(f), 1.0}};
    std::map<FrequencyVector, double> lg{{start_of(g), 1.0}};
    std::vector<StepReport> out;
    auto report = [&](std::size_t t) {
        StepReport r;
        r.t = t;
        r.slack = o.tolerance;
        r.verdict = stochastic_dominance(marginal(lf, o.bit), marginal(lg, o.bit), o.tolerance);
        out.push_back(r);
    };
    auto advance = [&](const DominanceSide& side, const std::map<FrequencyVector, double>& law, std::size_t t) {
        std::map<FrequencyVector, double> next;
        for (const auto& [state, w] : law) {
            for (const auto& [s, m] : exact_onestep_law(side.spec, side.fitness, state, t)) next[s] += w * m;
        }
        if (next.size() > o.max_states) {
            throw InfeasibleSize("exact dominance: " + std::to_string(next.size()) +
                                 " reachable frequency vectors exceed max_states");
        }
        return next;
    };
    report(0);
    for (std::size_t t = 1; t <= o.steps; ++t) {
        lf = advance(f, lf, t);
        lg = advance(g, lg, t);
        report(t);
    }
    return out;
}

std::vector<StepReport> monte_carlo_multistep(const DominanceSide& f, const DominanceSide& g,
                                              const DominanceOptions& o) {
    if (o.replicas == 0) throw InvalidSpec("replicas: must be positive");
    const std::size_t n = o.replicas;
    std::vector<std::vector<double>> sf(o.steps + 1, std::vector<double>(n));
    std::vector<std::vector<double>> sg(o.steps + 1, std::vector<double>(n));
    const FrequencyVector f0 = start_of(f);
    const FrequencyVector g0 = start_of(g);

    parallel_for(n, resolve_threads(o.threads), [&](std::size_t r) {
        const RandomStream root(o.seed, r);
        RandomStream rf = root.split(0);
        RandomStream rg = root.split(1);
        FrequencyVector pf = f0;
        FrequencyVector pg = g0;
        sf[0][r] = pf[o.bit];
        sg[0][r] = pg[o.bit];
        for (std::size_t t = 1; t <= o.steps; ++t) {
            pf = eda_step(pf, f.spec, f.fitness, t, rf).next;
            pg = eda_step(pg, g.spec, g.fitness, t, rg).next;
            sf[t][r] = pf[o.bit];
            sg[t][r] = pg[o.bit];
        }
    });

    const double slack = dkw_two_sample_slack(n, n, o.level);
    std::vector<StepReport> out;
    for (std::size_t t = 0; t <= o.steps; ++t) {
        StepReport r;
        r.t = t;
        r.slack = slack;
        r.verdict = empirical_dominance(std::move(sf[t]), std::move(sg[t]));
        r.verdict.dominates = r.verdict.max_cdf_violation <= slack;
        out.push_back(r);
    }
    return out;
}

} // namespace

std::vector<StepReport> multistep_dominance_check(const DominanceSide& f, const DominanceSide& g,
                                                  const DominanceOptions& options) {
    f.spec.validate();
    g.spec.validate();
    if (options.bit >= f.spec.dim || options.bit >= g.spec.dim) throw InvalidSpec("bit: out of range");
    if (options.mode == DominanceMode::Exact) return exact_multistep(f, g, options);
    return monte_carlo_multistep(f, g, options);
}

LowerHitComparison compare_lower_hitting(const DominanceSide& f, const DominanceSide& g, double level,
                                         std::size_t replicas, std::size_t budget, std::uint64_t seed,
                                         unsigned threads, std::size_t bit) {
    if (replicas < 2) throw InsufficientData("replicas: need at least 2");
    const StoppingRule stop = StoppingRule::lower_hit(level);
    std::vector<double> tf(replicas);
    std::vector<double> tg(replicas);
    std::vector<std::uint8_t> cf(replicas);
    std::vector<std::uint8_t> cg(replicas);

    parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
        const RandomStream root(seed, r);
        RandomStream rf = root.split(0);
        RandomStream rg = root.split(1);
        const auto a = run_eda(f.spec, f.fitness, stop, rf, budget, {bit, false, f.start});
        const auto b = run_eda(g.spec, g.fitness, stop, rg, budget, {bit, false, g.start});
        cf[r] = a.record.trigger == Trigger::BudgetExhausted;
        cg[r] = b.record.trigger == Trigger::BudgetExhausted;
        tf[r] = cf[r] ? static_cast<double>(budget) : static_cast<double>(a.record.stopping_time);
        tg[r] = cg[r] ? static_cast<double>(budget) : static_cast<double>(b.record.stopping_time);
    });

    auto summarize = [&](const std::vector<double>& xs, double& mean, double& se) {
        const double n = static_cast<double>(xs.size());
        mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        se = std::sqrt(ss / (n - 1.0) / n);
    };
    LowerHitComparison c;
    summarize(tf, c.mean_f, c.stderr_f);
    summarize(tg, c.mean_g, c.stderr_g);
    c.censored_f = static_cast<std::size_t>(std::count(cf.begin(), cf.end(), 1));
    c.censored_g = static_cast<std::size_t>(std::count(cg.begin(), cg.end(), 1));
    c.consistent = c.mean_f >= c.mean_g - 3.0 * std::hypot(c.stderr_f, c.stderr_g);
    return c;
}

std::optional<DominanceViolation> find_onestep_violation(std::span<const DominanceCase> cases, double tol) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        const auto a = exact_onestep_distribution(c.f.spec, c.f.fitness, start_of(c.f), c.bit);
        const auto b = exact_onestep_distribution(c.g.spec, c.g.fitness, start_of(c.g), c.bit);
        const auto v = stochastic_dominance(a, b, tol);
        if (!v.dominates) return DominanceViolation{i, v};
    }
    return std::nullopt;
}

} // namespace driftlab
