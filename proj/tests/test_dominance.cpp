#include <doctest.h>

#include <cmath>
#include <map>

#include "driftlab/dominance.hpp"
#include "driftlab/errors.hpp"

using namespace driftlab;

TEST_CASE("dominance of discrete distributions") {
    const auto hi = DiscreteDistribution::point_mass(1.0);
    const auto lo = DiscreteDistribution::point_mass(0.0);
    CHECK(stochastic_dominance(hi, lo).dominates);
    const auto v = stochastic_dominance(lo, hi);
    CHECK_FALSE(v.dominates);
    CHECK(v.max_cdf_violation == 1.0);
    CHECK(v.witness == 0.0);

    const DiscreteDistribution a{{0.0, 1.0}, {0.3, 0.7}};
    const DiscreteDistribution b{{0.0, 0.5, 1.0}, {0.3, 0.4, 0.3}};
    CHECK(stochastic_dominance(a, b).dominates);
    CHECK(stochastic_dominance(a, a).dominates);
    const auto w = stochastic_dominance(b, a);
    CHECK_FALSE(w.dominates);
    CHECK(w.max_cdf_violation == doctest::Approx(0.4));
    CHECK(w.witness == 0.5);

    CHECK_THROWS_AS((DiscreteDistribution{{0.0, 0.0}, {0.5, 0.5}}.validate()), DomainError);
    CHECK_THROWS_AS((DiscreteDistribution{{0.0}, {0.9}}.validate()), DomainError);
    CHECK_THROWS_AS((DiscreteDistribution{{0.0, 1.0}, {-0.1, 1.1}}.validate()), DomainError);
}

TEST_CASE("exact one-step laws are distributions") {
    const std::vector<EdaSpec> specs{EdaSpec::cga(6, 3), EdaSpec::umda(2, 4, 3), EdaSpec::pbil(2, 5, 0.3, 2),
                                     EdaSpec::mmas(4, 0.5, 2)};
    for (const auto& spec : specs) {
        const auto law = exact_onestep_law(spec, FitnessFunction::onemax(), spec.initial());
        double total = 0.0;
        double mean0 = 0.0;
        for (const auto& [state, w] : law) {
            total += w;
            mean0 += w * state[0];
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
        // OneMax strictly prefers ones: the bit drifts up
        CHECK(mean0 > 0.5);
    }
}

TEST_CASE("exact law of a neutral bit is the reduced process") {
    // UMDA mu=2, lambda=4 on two bits with bit 0 neutral: next frequency of
    // bit 0 is Bin(2, 1/2) / 2.
    const auto spec = EdaSpec::umda(2, 4, 2);
    const auto d = exact_onestep_distribution(spec, FitnessFunction::neutral(0), spec.initial(), 0);
    REQUIRE(d.support == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(d.masses[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(d.masses[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(d.masses[2] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("exact tie averaging matches sampled selection") {
    const auto spec = EdaSpec::umda(2, 5, 2);
    const auto start = FrequencyVector::grid(2, {1, 1});
    const auto fitness = FitnessFunction::leading_ones();
    const auto law = exact_onestep_law(spec, fitness, start);
    std::map<FrequencyVector, long> counts;
    const long n = 200000;
    RandomStream rng(3, 3);
    for (long i = 0; i < n; ++i) ++counts[eda_step(start, spec, fitness, 1, rng).next];
    for (const auto& [state, p] : law) {
        const double f = static_cast<double>(counts[state]) / n;
        CHECK(std::abs(f - p) < 4.5 * std::sqrt(p * (1 - p) / n) + 1e-12);
    }
    CHECK(counts.size() == law.size());
}

TEST_CASE("enumeration size is bounded") {
    const auto spec = EdaSpec::umda(2, 9, 2);
    CHECK_THROWS_AS(exact_onestep_law(spec, FitnessFunction::onemax(), spec.initial()), InfeasibleSize);
    // fixed bits are not random and do not count
    const auto fixed = FrequencyVector::grid(2, {1, 2});
    CHECK_NOTHROW(exact_onestep_law(spec, FitnessFunction::onemax(), fixed));
}

TEST_CASE("a bit preferring one dominates a neutral bit") {
    const auto spec = EdaSpec::cga(4, 2);
    DominanceSide f{spec, FitnessFunction::weak_prefer_one(0, 1.0), std::nullopt};
    DominanceSide g{spec, FitnessFunction::neutral(0), std::nullopt};
    const auto steps = multistep_dominance_check(f, g, DominanceOptions{});
    REQUIRE(steps.size() == 6);
    for (const auto& s : steps) CHECK(s.verdict.dominates);
    // and not the other way round once the signal has acted
    const auto back = multistep_dominance_check(g, f, DominanceOptions{});
    CHECK_FALSE(back.back().verdict.dominates);
}

TEST_CASE("state bound of exact propagation") {
    const auto spec = EdaSpec::pbil(1, 3, 0.3, 3);
    DominanceSide f{spec, FitnessFunction::onemax(), std::nullopt};
    DominanceOptions o;
    o.steps = 10;
    o.max_states = 50;
    CHECK_THROWS_AS(multistep_dominance_check(f, f, o), InfeasibleSize);
}

TEST_CASE("counterexample search between two functions preferring one") {
    // both weakly prefer a one in bit 0; the one weighting bit 0 more moves it further
    const auto spec = EdaSpec::cga(8, 2);
    const auto f = FitnessFunction::custom("x0+10x1", [](std::span<const std::uint8_t> x) { return x[0] + 10.0 * x[1]; });
    const auto g = FitnessFunction::custom("10x0+x1", [](std::span<const std::uint8_t> x) { return 10.0 * x[0] + x[1]; });
    REQUIRE(bit_preference(f, 0, 2) == 1);
    REQUIRE(bit_preference(g, 0, 2) == 1);

    const std::vector<DominanceCase> safe{{{spec, g, std::nullopt}, {spec, FitnessFunction::neutral(0), std::nullopt}, 0}};
    CHECK_FALSE(find_onestep_violation(safe).has_value());

    const std::vector<DominanceCase> cases{
        {{spec, g, std::nullopt}, {spec, f, std::nullopt}, 0},
        {{spec, f, std::nullopt}, {spec, g, std::nullopt}, 0},
    };
    const auto hit = find_onestep_violation(cases);
    REQUIRE(hit.has_value());
    CHECK(hit->case_index == 1);
    CHECK(hit->verdict.max_cdf_violation > 1e-3);
}

TEST_CASE("DKW slack") {
    CHECK(dkw_two_sample_slack(100, 100, 1e-3) == doctest::Approx(2.0 * std::sqrt(std::log(2000.0) / 200.0)));
    CHECK_THROWS_AS(dkw_two_sample_slack(0, 10, 0.1), InsufficientData);
    CHECK_THROWS_AS(dkw_two_sample_slack(10, 10, 1.0), InvalidSpec);
}

TEST_CASE("Monte Carlo mode on identical sides stays within slack") {
    const auto spec = EdaSpec::pbil(2, 4, 0.4, 3);
    DominanceSide f{spec, FitnessFunction::neutral(0), std::nullopt};
    DominanceOptions o;
    o.mode = DominanceMode::MonteCarlo;
    o.steps = 4;
    o.replicas = 20000;
    o.threads = 2;
    for (const auto& s : multistep_dominance_check(f, f, o)) {
        CHECK(s.verdict.dominates);
        CHECK(s.slack > 0.0);
    }
}

TEST_CASE("lower hitting times are ordered like the frequencies") {
    const auto spec = EdaSpec::cga(8, 2);
    DominanceSide one{spec, FitnessFunction::weak_prefer_one(0, 1.0), std::nullopt};
    DominanceSide neutral{spec, FitnessFunction::neutral(0), std::nullopt};
    DominanceSide zero{spec, FitnessFunction::weak_prefer_zero(0, 1.0), std::nullopt};
    const auto a = compare_lower_hitting(one, neutral, 0.25, 4000, 20000, 9, 1);
    CHECK(a.consistent);
    CHECK(a.mean_f > a.mean_g);
    const auto b = compare_lower_hitting(neutral, zero, 0.25, 4000, 20000, 9, 1);
    CHECK(b.consistent);
    CHECK(b.mean_f > b.mean_g);
}
