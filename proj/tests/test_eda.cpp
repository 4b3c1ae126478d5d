#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "driftlab/eda.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/neutral.hpp"

using namespace driftlab;

TEST_CASE("spec validation names the offending parameter") {
    CHECK_NOTHROW(EdaSpec::cga(8, 3).validate());
    EdaSpec bad = EdaSpec::cga(8);
    bad.lambda = 3;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("lambda"), InvalidSpec);
    CHECK_THROWS_WITH_AS(EdaSpec::cga(7).validate(), doctest::Contains("K"), InvalidSpec);
    CHECK_THROWS_WITH_AS(EdaSpec::pbil(4, 3, 0.5).validate(), doctest::Contains("lambda"), InvalidSpec);
    CHECK_THROWS_WITH_AS(EdaSpec::pbil(2, 3, 0.0).validate(), doctest::Contains("rho"), InvalidSpec);
    CHECK_THROWS_WITH_AS(EdaSpec::pbil(2, 3, 1.5).validate(), doctest::Contains("rho"), InvalidSpec);
    CHECK_THROWS_AS(EdaSpec::ce(2, 2, {}).validate(), InvalidSpec);

    EdaSpec m = EdaSpec::cga(8, 4);
    m.margins = true;
    CHECK_NOTHROW(m.validate()); // (4-2)*8/4 = 4
    m.dim = 3;
    CHECK_THROWS_AS(m.validate(), InvalidSpec); // 8/3 not integral
    m.dim = 1;
    CHECK_THROWS_AS(m.validate(), InvalidSpec);
}

TEST_CASE("grid denominators") {
    CHECK(EdaSpec::cga(8).grid_denominator() == 8);
    EdaSpec m = EdaSpec::cga(8, 4);
    m.margins = true;
    CHECK(m.grid_denominator() == 16);
    CHECK(EdaSpec::umda(4, 8).grid_denominator() == 4);
    CHECK(EdaSpec::umda(3, 8).grid_denominator() == 6);
    CHECK(EdaSpec::pbil(3, 8, 0.5).grid_denominator() == 0);
    const auto half = EdaSpec::umda(3, 8, 2).initial();
    CHECK(half[0] == 0.5);
    CHECK(half.numerator(1) == 3);
}

TEST_CASE("CE schedule repeats its last rate") {
    const auto s = EdaSpec::ce(2, 4, {0.9, 0.5, 0.7, 0.3});
    CHECK(s.rate_at(1) == 0.9);
    CHECK(s.rate_at(4) == 0.3);
    CHECK(s.rate_at(100) == 0.3);
    CHECK(s.min_rate_from(1) == 0.3);
    CHECK(s.max_rate() == 0.9);
}

TEST_CASE("pbil_update is the convex combination with the selected mean") {
    Population sel;
    sel.dim = 3;
    const std::uint8_t a[] = {1, 0, 1};
    const std::uint8_t b[] = {1, 1, 0};
    sel.push_back(a, 0.0);
    sel.push_back(b, 0.0);
    const auto p = FrequencyVector::continuous({0.2, 0.5, 0.9});
    const auto q = pbil_update(p, sel, 0.25);
    CHECK(q[0] == doctest::Approx(0.75 * 0.2 + 0.25 * 1.0).epsilon(1e-15));
    CHECK(q[1] == doctest::Approx(0.75 * 0.5 + 0.25 * 0.5).epsilon(1e-15));
    CHECK(q[2] == doctest::Approx(0.75 * 0.9 + 0.25 * 0.5).epsilon(1e-15));

    const auto u = pbil_update(p, sel, 1.0);
    REQUIRE(u.is_grid());
    CHECK(u.denominator() == 2);
    CHECK(u.numerators() == std::vector<std::int64_t>{2, 1, 1});

    const auto clamped = pbil_update(p, sel, 1.0, Margins{3});
    CHECK(clamped[0] == doctest::Approx(2.0 / 3.0));
    CHECK(clamped[1] == 0.5);
}

TEST_CASE("cga_update moves 1/K toward the winner on differing bits only") {
    const auto p = FrequencyVector::grid(8, {4, 4, 1, 7});
    const std::uint8_t x[] = {1, 0, 1, 1};
    const std::uint8_t y[] = {0, 0, 0, 1};
    const auto q = cga_update(p, x, y, true, 8);
    CHECK(q.numerators() == std::vector<std::int64_t>{5, 4, 2, 7});
    const auto r = cga_update(p, x, y, false, 8);
    CHECK(r.numerators() == std::vector<std::int64_t>{3, 4, 0, 7});

    // margins on the 2K grid: [1/4, 3/4] = [4/16, 12/16], step 2
    const auto m = FrequencyVector::grid(16, {4, 12, 8, 8});
    const std::uint8_t w[] = {0, 1, 1, 0};
    const std::uint8_t l[] = {1, 0, 0, 0};
    const auto c = cga_update(m, w, l, true, 8, Margins{4});
    CHECK(c.numerators() == std::vector<std::int64_t>{4, 12, 10, 8});
}

TEST_CASE("select_mu_best keeps the fittest and breaks ties uniformly") {
    Population pop;
    pop.dim = 1;
    const std::uint8_t zero[] = {0};
    const std::uint8_t one[] = {1};
    pop.push_back(zero, 1.0);
    pop.push_back(one, 1.0);
    pop.push_back(zero, 0.0);
    pop.push_back(one, 3.0);
    RandomStream rng(4, 0);
    long picked_one = 0;
    const long n = 40000;
    for (long i = 0; i < n; ++i) {
        const auto sel = select_mu_best(pop, 2, rng);
        REQUIRE(sel.fitness[0] == 3.0);
        REQUIRE(sel.fitness[1] == 1.0);
        picked_one += sel.individual(1)[0];
    }
    CHECK(std::abs(static_cast<double>(picked_one) / n - 0.5) < 5.0 * std::sqrt(0.25 / n));
    CHECK_THROWS_AS(select_mu_best(pop, 5, rng), InvalidSpec);
}

TEST_CASE("bit preferences of the built-in fitness functions") {
    CHECK(bit_preference(FitnessFunction::neutral(1), 1, 4) == 0);
    CHECK(bit_preference(FitnessFunction::onemax(), 2, 4) == 1);
    CHECK(bit_preference(FitnessFunction::leading_ones(), 3, 4) == 1);
    CHECK(bit_preference(FitnessFunction::weak_prefer_one(0, 10.0), 0, 3) == 1);
    CHECK(bit_preference(FitnessFunction::weak_prefer_zero(0, 2.0), 0, 3) == -1);
    const auto mixed = FitnessFunction::custom("xor", [](std::span<const std::uint8_t> x) {
        return static_cast<double>(x[0] ^ x[1]);
    });
    CHECK_FALSE(bit_preference(mixed, 0, 2).has_value());
}

TEST_CASE("run_eda reports budget exhaustion and history") {
    RandomStream rng(1, 0);
    const auto spec = EdaSpec::cga(64, 3);
    const auto trace = run_eda(spec, FitnessFunction::neutral(0), StoppingRule::absorption(), rng, 5);
    CHECK(trace.record.trigger == Trigger::BudgetExhausted);
    CHECK(trace.record.stopping_time == 5);
    CHECK(trace.history.size() == 6);
    CHECK_THROWS_AS(run_eda(spec, FitnessFunction::neutral(0), StoppingRule::run_away(), rng, 5), InvalidSpec);
}

TEST_CASE("margins are never left during a run") {
    EdaSpec spec = EdaSpec::umda(2, 4, 5);
    spec.margins = true;
    RandomStream rng(8, 0);
    const auto trace = run_eda(spec, FitnessFunction::onemax(), StoppingRule::at_horizon(300), rng, 300);
    for (const auto& p : trace.history) {
        for (std::size_t j = 0; j < p.size(); ++j) {
            REQUIRE(p[j] >= 0.2 - 1e-15);
            REQUIRE(p[j] <= 0.8 + 1e-15);
        }
    }
}

namespace {

// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

} // namespace

TEST_CASE("a neutral bit in the full EDA follows the reduced process") {
    // Marginal of p_t for t = 6 from the full algorithm (with a fitness signal
    // on the other bits) against the one-dimensional process.
    const std::vector<EdaSpec> specs{EdaSpec::pbil(3, 7, 0.3, 4), EdaSpec::umda(4, 10, 3), EdaSpec::cga(10, 4),
                                     EdaSpec::mmas(5, 0.4, 3)};
    for (const auto& spec : specs) {
        CAPTURE(to_string(spec.algorithm));
        const auto reduced = NeutralProcessSpec::from_eda(spec);
        const int n = 20000;
        std::vector<double> full(n);
        std::vector<double> one(n);
        for (int r = 0; r < n; ++r) {
            RandomStream a(21, static_cast<std::uint64_t>(r));
            auto p = spec.initial();
            for (std::size_t t = 1; t <= 6; ++t) p = eda_step(p, spec, FitnessFunction::neutral(0), t, a).next;
            full[r] = p[0];
            RandomStream b(22, static_cast<std::uint64_t>(r));
            one[r] = simulate_path(reduced, 6, b).back();
        }
        // two-sample KS critical value at level 1e-4: sqrt(-ln(5e-5) / 2 * (n + n) / (n * n))
        CHECK(ks_distance(full, one) < std::sqrt(-std::log(5e-5) / n));
    }
}
