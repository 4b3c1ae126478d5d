#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/random.hpp"

using namespace driftlab;

namespace {

// Binomial pmf by the recurrence P(k+1) = P(k) (n-k)/(k+1) p/(1-p).
std::vector<long double> binomial_pmf(int n, long double p) {
    std::vector<long double> pmf(n + 1);
    pmf[0] = std::pow(1.0L - p, n);
    for (int k = 0; k < n; ++k) pmf[k + 1] = pmf[k] * (n - k) / (k + 1) * p / (1.0L - p);
    return pmf;
}

// Pearson statistic after pooling tail cells with expected count below 5.
double chi_square(const std::vector<long double>& pmf, const std::vector<long>& counts, long draws, int& df) {
    double stat = 0.0;
    long double exp_acc = 0.0;
    long obs_acc = 0;
    df = -1;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        exp_acc += pmf[k] * draws;
        obs_acc += counts[k];
        if (exp_acc >= 5.0 || k + 1 == pmf.size()) {
            const double d = static_cast<double>(obs_acc - exp_acc);
            stat += d * d / static_cast<double>(exp_acc);
            ++df;
            exp_acc = 0.0;
            obs_acc = 0;
        }
    }
    return stat;
}

} // namespace

TEST_CASE("streams are reproducible and keyed by seed and id") {
    RandomStream a(42, 7);
    RandomStream b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

    RandomStream c(42, 8);
    RandomStream d(43, 7);
    RandomStream e(42, 7);
    CHECK(c.next() != e.next());
    CHECK(d.next() != RandomStream(42, 7).next());
}

TEST_CASE("split children differ from each other and from the parent") {
    const RandomStream root(5, 0);
    std::set<std::uint64_t> keys{root.key()};
    for (std::uint64_t id = 0; id < 1000; ++id) keys.insert(root.split(id).key());
    CHECK(keys.size() == 1001);
}

TEST_CASE("seek replays a stream position") {
    RandomStream a(1, 2);
    a.next();
    const auto pos = a.counter();
    const auto x = a.next();
    a.seek(pos);
    CHECK(a.next() == x);
}

TEST_CASE("uniform01 lies in [0,1) with mean 1/2") {
    RandomStream rng(3, 0);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // sd of the mean is sqrt(1/12/n)
    CHECK(std::abs(sum / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("uniform_below is unbiased over a non-power-of-two range") {
    RandomStream rng(9, 1);
    std::vector<long> counts(7, 0);
    const long n = 140000;
    for (long i = 0; i < n; ++i) ++counts[rng.uniform_below(7)];
    std::vector<long double> pmf(7, 1.0L / 7.0L);
    int df = 0;
    CHECK(chi_square(pmf, counts, n, df) < 30.0);
}

TEST_CASE("bernoulli_ratio hits the exact rate") {
    RandomStream rng(11, 0);
    const long n = 300000;
    long ones = 0;
    for (long i = 0; i < n; ++i) ones += rng.bernoulli_ratio(3, 16) ? 1 : 0;
    const double p = 3.0 / 16.0;
    CHECK(std::abs(static_cast<double>(ones) / n - p) < 5.0 * std::sqrt(p * (1 - p) / n));
    CHECK_FALSE(rng.bernoulli_ratio(0, 16));
    CHECK(rng.bernoulli_ratio(16, 16));
}

TEST_CASE("binomial draws follow the binomial pmf") {
    struct Case {
        int n;
        double p;
    };
    for (const Case c : {Case{1, 0.5}, Case{20, 0.3}, Case{64, 0.5}, Case{128, 0.9}, Case{7, 0.02}}) {
        CAPTURE(c.n);
        CAPTURE(c.p);
        RandomStream rng(17, static_cast<std::uint64_t>(c.n));
        const long draws = 100000;
        std::vector<long> counts(c.n + 1, 0);
        for (long i = 0; i < draws; ++i) {
            const auto k = rng.binomial(c.n, c.p);
            REQUIRE(k >= 0);
            REQUIRE(k <= c.n);
            ++counts[k];
        }
        int df = 0;
        const double stat = chi_square(binomial_pmf(c.n, c.p), counts, draws, df);
        // far beyond the 0.9999 quantile for df <= 40
        CHECK(stat < 3.0 * df + 40.0);
    }
}

TEST_CASE("binomial degenerate and large cases") {
    RandomStream rng(1, 1);
    CHECK(rng.binomial(10, 0.0) == 0);
    CHECK(rng.binomial(10, 1.0) == 10);
    CHECK(rng.binomial(0, 0.5) == 0);
    double sum = 0.0;
    for (int i = 0; i < 2000; ++i) sum += static_cast<double>(rng.binomial(5000, 0.4));
    CHECK(std::abs(sum / 2000 - 2000.0) < 5.0 * std::sqrt(5000 * 0.24 / 2000));
}
