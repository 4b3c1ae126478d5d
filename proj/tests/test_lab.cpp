#include <doctest.h>

#include <cmath>

#include "driftlab/errors.hpp"
#include "driftlab/lab.hpp"
#include "driftlab/markov.hpp"

using namespace driftlab;

namespace {

HittingRecord rec(std::size_t t, Trigger trigger = Trigger::Absorption) {
    HittingRecord r;
    r.stopping_time = t;
    r.trigger = trigger;
    return r;
}

} // namespace

TEST_CASE("summaries exclude exhausted replicas and flag them") {
    const auto s = summarize({rec(1), rec(2), rec(6), rec(100, Trigger::BudgetExhausted)});
    CHECK(s.n == 4);
    CHECK(s.mean == 3.0);
    CHECK(s.median == 2.0);
    CHECK(s.budget_exhausted == 1);
    CHECK(s.flagged);
    // sample variance (4 + 1 + 9) / 2 = 7
    CHECK(s.std_error == doctest::Approx(std::sqrt(7.0 / 3.0)));
    CHECK(s.ci95_lo < s.mean);
    CHECK(s.samples.size() == 4);

    std::vector<HittingRecord> many(2000, rec(3));
    many[0].trigger = Trigger::BudgetExhausted;
    CHECK_FALSE(summarize(many).flagged);
    many[1].trigger = Trigger::BudgetExhausted;
    many[2].trigger = Trigger::BudgetExhausted;
    CHECK(summarize(many).flagged);

    CHECK_THROWS_AS(summarize({rec(5, Trigger::BudgetExhausted)}), ExperimentFailed);
}

TEST_CASE("power-law fit recovers an exact law") {
    std::vector<std::pair<double, double>> pts;
    for (double k : {8.0, 16.0, 32.0, 64.0}) pts.emplace_back(k, 3.0 * k * k);
    const auto fit = fit_scaling_law(pts);
    CHECK(fit.exponent == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.multiplier == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(fit_scaling_law({{1.0, 1.0}, {2.0, 2.0}}), InsufficientData);
    CHECK_THROWS_AS(fit_scaling_law({{1.0, 1.0}, {2.0, 0.0}, {3.0, 1.0}}), DomainError);
}

TEST_CASE("UMDA with mu = 1 has hitting time exactly 1") {
    ExperimentConfig c;
    c.model = NeutralProcessSpec::umda(1);
    c.replicas = 500;
    const auto s = run_hitting_experiment(c);
    CHECK(s.mean == 1.0);
    CHECK(s.std_error == 0.0);
    CHECK(s.budget_exhausted == 0);
}

TEST_CASE("results do not depend on the thread count") {
    ExperimentConfig c;
    c.model = NeutralProcessSpec::pbil(3, 0.4);
    c.replicas = 3000;
    c.master_seed = 77;
    c.threads = 1;
    const auto one = run_hitting_experiment(c);
    c.threads = 4;
    const auto four = run_hitting_experiment(c);
    REQUIRE(one.samples.size() == four.samples.size());
    for (std::size_t i = 0; i < one.samples.size(); ++i) {
        REQUIRE(one.samples[i].stopping_time == four.samples[i].stopping_time);
        REQUIRE(one.samples[i].terminal_frequency == four.samples[i].terminal_frequency);
    }
    CHECK(one.mean == four.mean);
}

TEST_CASE("Monte Carlo exit time agrees with the exact chain") {
    ExperimentConfig c;
    c.model = NeutralProcessSpec::cga(32);
    c.stop = StoppingRule::exit_middle();
    c.replicas = 10000;
    c.master_seed = 5;
    const auto s = run_hitting_experiment(c);
    const double exact = exit_time_from_interval(build_cga_kernel(32), 0.25, 0.75, 16);
    CHECK(std::abs(s.mean - exact) < 0.05 * exact);
}

TEST_CASE("full EDA model and sweeps") {
    ExperimentConfig c;
    EdaModel m;
    m.spec = EdaSpec::cga(6, 3);
    m.fitness = FitnessFunction::onemax();
    m.watch_bit = 1;
    c.model = m;
    c.replicas = 200;
    c.sweep = Sweep{SweepParameter::K, {4, 8}};
    const auto pts = run_sweep(c);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].value == 4.0);
    CHECK(pts[0].summary.mean < pts[1].summary.mean);

    c.sweep = Sweep{SweepParameter::K, {5}};
    CHECK_THROWS_AS(c.validate(), InvalidSpec);
    c.sweep.reset();
    c.stop = StoppingRule::margin_hit();
    CHECK_THROWS_AS(c.validate(), InvalidSpec);
}

TEST_CASE("tail bound values and a vacuous horizon") {
    CHECK(tail_bound(NeutralProcessSpec::cga(16), 0.25, 32) == doctest::Approx(2.0 * std::exp(-0.0625 * 256 / 64.0)));
    CHECK(tail_bound(NeutralProcessSpec::pbil(8, 0.5), 0.25, 10) ==
          doctest::Approx(2.0 * std::exp(-0.0625 * 8 / (2 * 0.25 * 10))));
    const auto report = validate_tail_bound(NeutralProcessSpec::cga(8), 0.25, {1, 4, 100000}, 2000, 3, 1);
    REQUIRE(report.entries.size() == 3);
    CHECK(report.entries[2].bound >= 1.0);
    CHECK(report.entries[0].empirical == 0.0);
    REQUIRE(report.entries[1].exact.has_value());
    CHECK_FALSE(report.any_violation());
    CHECK_THROWS_AS(validate_tail_bound(NeutralProcessSpec::cga(8), 0.0, {1}, 10, 1), InvalidSpec);
}

TEST_CASE("exact exit distribution exists only for even grids") {
    CHECK(exact_exit_distribution(NeutralProcessSpec::cga(8), 0.25, 10).has_value());
    CHECK(exact_exit_distribution(NeutralProcessSpec::umda(6), 0.25, 10).has_value());
    CHECK_FALSE(exact_exit_distribution(NeutralProcessSpec::pbil(6, 0.5), 0.25, 10).has_value());
}

TEST_CASE("advisor") {
    AdviceRequest r;
    const auto a = advise_parameters(r);
    CHECK(a.value == 1104);
    CHECK(a.value % 2 == 0);
    CHECK(a.iterations == 5000.0);
    CHECK(a.raw_bound == doctest::Approx(4.0 * std::sqrt(10000.0 * std::log(2000.0))));

    r.delta = 0.01;
    CHECK(advise_parameters(r).value > a.value);

    AdviceRequest u;
    u.algorithm = Algorithm::UMDA;
    u.budget_evals = 100;
    u.dim = 10;
    CHECK(advise_parameters(u).value == 16955);

    u.delta = 1.5;
    CHECK_THROWS_AS(advise_parameters(u), DomainError);
}

TEST_CASE("run-away campaigns") {
    const auto s = runaway_campaign(8, 0.5, 0.6, 1e-9, 300, 4, 1);
    CHECK(s.budget_exhausted == 0);
    REQUIRE(s.certification_bias.has_value());
    CHECK(*s.certification_bias == 1e-9);
    for (const auto& r : s.samples) CHECK(r.certified);
    CHECK_THROWS_AS(runaway_campaign(8, 1.0, 0.6, 1e-9, 10, 1), InvalidSpec);
    CHECK_THROWS_AS(runaway_campaign(8, 0.5, 0.8, 1e-9, 10, 1), InvalidSpec);
}
