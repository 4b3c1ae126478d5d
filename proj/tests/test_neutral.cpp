#include <doctest.h>

#include <cmath>

#include "driftlab/errors.hpp"
#include "driftlab/neutral.hpp"

using namespace driftlab;

TEST_CASE("UMDA with mu = 1 absorbs after exactly one iteration") {
    RandomStream rng(2, 0);
    for (int r = 0; r < 100; ++r) {
        const auto rec = simulate_until(NeutralProcessSpec::umda(1), StoppingRule::absorption(), rng, 10);
        REQUIRE(rec.trigger == Trigger::Absorption);
        REQUIRE(rec.stopping_time == 1);
    }
}

TEST_CASE("the neutral frequency is a martingale") {
    // E[p_t] = 1/2 for every t; checked at t = 20.
    struct Case {
        NeutralProcessSpec spec;
        const char* name;
    };
    const Case cases[] = {{NeutralProcessSpec::pbil(4, 0.3), "pbil"},
                          {NeutralProcessSpec::umda(6), "umda"},
                          {NeutralProcessSpec::cga(12), "cga"},
                          {NeutralProcessSpec::ce(3, {0.9, 0.4, 0.2}), "ce"}};
    for (const auto& c : cases) {
        CAPTURE(c.name);
        const int n = 40000;
        double sum = 0.0;
        double sq = 0.0;
        for (int r = 0; r < n; ++r) {
            RandomStream rng(31, static_cast<std::uint64_t>(r));
            const double p = simulate_path(c.spec, 20, rng).back();
            sum += p;
            sq += p * p;
        }
        const double mean = sum / n;
        const double sd = std::sqrt(std::max(1e-30, sq / n - mean * mean));
        CHECK(std::abs(mean - 0.5) < 4.5 * sd / std::sqrt(n));
    }
}

TEST_CASE("cGA steps stay on the grid and move by at most 1/K") {
    RandomStream rng(4, 4);
    GridValue p{5, 16};
    for (int i = 0; i < 1000; ++i) {
        const GridValue q = cga_neutral_step(p, 8, rng);
        REQUIRE(q.den == 16);
        REQUIRE(std::llabs(q.num - p.num) % 2 == 0);
        REQUIRE(std::llabs(q.num - p.num) <= 2);
        p = q.num <= 0 || q.num >= 16 ? GridValue{8, 16} : q;
    }
    CHECK_THROWS_AS(cga_neutral_step(GridValue{1, 3}, 2, rng), std::logic_error);
}

TEST_CASE("run-away certification") {
    CHECK(certify_runaway(0.0, 10, 0.5, 1e-9));
    CHECK(certify_runaway(1.0, 10, 0.5, 1e-9));
    CHECK_FALSE(certify_runaway(0.01, 10, 0.5, 1e-9));
    CHECK(certify_runaway(1e-12, 10, 0.5, 1e-9)); // 10 * 1e-12 / 0.5 = 2e-11
    CHECK(certify_runaway(1.0 - 1e-12, 10, 0.5, 1e-9));
    CHECK_FALSE(certify_runaway(1e-12, 10, 1.0, 1e-9));
}

TEST_CASE("run-away times are certified and consistent with their side") {
    const auto spec = NeutralProcessSpec::pbil(8, 0.5);
    const auto stop = StoppingRule::run_away(0.6, 1e-9);
    const std::size_t budget = default_budget(spec, stop);
    for (std::uint64_t r = 0; r < 200; ++r) {
        RandomStream rng(7, r);
        const auto rec = simulate_until(spec, stop, rng, budget);
        REQUIRE(rec.trigger == Trigger::RunAway);
        CHECK(rec.certified);
        const double q = std::min(rec.terminal_frequency, 1.0 - rec.terminal_frequency);
        // the run-away phase starts inside [0, c rho / mu] or its mirror image
        CHECK(q <= 0.6 * 0.5 / 8.0 + 1e-15);
    }
}

TEST_CASE("run-away is rejected for the cGA") {
    RandomStream rng(1, 1);
    CHECK_THROWS_AS(simulate_until(NeutralProcessSpec::cga(4), StoppingRule::run_away(), rng, 10), InvalidSpec);
}

TEST_CASE("default budgets scale with the process") {
    CHECK(default_budget(NeutralProcessSpec::cga(10), StoppingRule::absorption()) == 20000);
    CHECK(default_budget(NeutralProcessSpec::pbil(4, 0.5), StoppingRule::absorption()) == 3200);
    CHECK(default_budget(NeutralProcessSpec::umda(2), StoppingRule::absorption()) == 1000);
    CHECK(default_budget(NeutralProcessSpec::cga(10), StoppingRule::at_horizon(17)) == 17);
}

TEST_CASE("margins keep the reduced process inside [1/D, 1-1/D]") {
    const auto spec = NeutralProcessSpec::cga(8).with_margins(4);
    RandomStream rng(3, 3);
    for (double p : simulate_path(spec, 2000, rng)) {
        REQUIRE(p >= 0.25);
        REQUIRE(p <= 0.75);
    }
    const auto rec = simulate_until(spec, StoppingRule::margin_hit(), rng, 100000);
    CHECK(rec.trigger == Trigger::MarginHit);

    const auto pbil = NeutralProcessSpec::pbil(3, 0.4).with_margins(5);
    for (double p : simulate_path(pbil, 2000, rng)) {
        REQUIRE(p >= 0.2);
        REQUIRE(p <= 0.8);
    }
}

TEST_CASE("exit-middle and lower-hit triggers") {
    RandomStream rng(5, 5);
    for (int r = 0; r < 100; ++r) {
        const auto a = simulate_until(NeutralProcessSpec::cga(16), StoppingRule::exit_middle(), rng, 100000);
        REQUIRE(a.trigger == Trigger::ExitMiddle);
        CHECK((a.terminal_frequency <= 0.25 || a.terminal_frequency >= 0.75));
        // absorption at 1 before reaching 1/4 leaves the rule unfired
        const auto b = simulate_until(NeutralProcessSpec::cga(16), StoppingRule::lower_hit(0.25), rng, 5000);
        if (b.trigger == Trigger::LowerHit) CHECK(b.terminal_frequency <= 0.25);
        else CHECK(b.terminal_frequency == 1.0);
    }
}

TEST_CASE("horizon zero fires before any step") {
    RandomStream rng(0, 0);
    const auto rec = simulate_until(NeutralProcessSpec::cga(4), StoppingRule::at_horizon(0), rng, 0);
    CHECK(rec.trigger == Trigger::Horizon);
    CHECK(rec.stopping_time == 0);
    CHECK(rec.terminal_frequency == 0.5);
}
