#include "driftlab/markov.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <ostream>
#include <sstream>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {
constexpr double kResidualTarget = 1e-8;
constexpr std::size_t kDenseLimit = 4096;
} // namespace

TransitionKernel::TransitionKernel(std::size_t n, std::vector<std::vector<KernelEntry>> rows,
                                   std::int64_t exact_denominator)
    : n_(n), rows_(std::move(rows)), exact_denominator_(exact_denominator) {
    if (rows_.size() != n_ + 1) throw InvalidSpec("kernel: need n + 1 rows");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        double sum = 0.0;
        for (const auto& e : rows_[i]) {
            if (e.target > n_) throw InvalidSpec("kernel: target state out of range");
            if (!(e.probability >= 0.0)) throw InvalidSpec("kernel: negative probability");
            sum += e.probability;
            const auto gap = e.target > i ? e.target - i : i - e.target;
            if (gap > 1 && e.probability > 0.0) tridiagonal_ = false;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            std::ostringstream msg;
            msg << "kernel: row " << i << " sums to " << sum;
            throw InvalidSpec(msg.str());
        }
    }
}

double TransitionKernel::probability(std::size_t from, std::size_t to) const {
    for (const auto& e : rows_.at(from)) {
        if (e.target == to) return e.probability;
    }
    return 0.0;
}

bool TransitionKernel::is_absorbing(std::size_t i) const {
    const auto& r = rows_.at(i);
    return std::all_of(r.begin(), r.end(), [i](const KernelEntry& e) {
        return e.target == i ? e.probability == 1.0 : e.probability == 0.0;
    });
}

std::vector<std::size_t> TransitionKernel::absorbing_states() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i <= n_; ++i) {
        if (is_absorbing(i)) out.push_back(i);
    }
    return out;
}

void TransitionKernel::write_csv(std::ostream& out) const {
    out << "state,target,probability\n";
    char buf[64];
    for (std::size_t i = 0; i <= n_; ++i) {
        for (const auto& e : rows_[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", e.probability);
            out << i << ',' << e.target << ',' << buf << '\n';
        }
    }
}

TransitionKernel build_cga_kernel(std::int64_t K) {
    if (K < 2) throw InvalidSpec("K: must be >= 2");
    const std::int64_t den = K * K;
    const auto n = static_cast<std::size_t>(K);
    std::vector<std::vector<KernelEntry>> rows(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const auto ii = static_cast<std::int64_t>(i);
        const std::int64_t move = ii * (K - ii);
        const std::int64_t stay = den - 2 * move;
        auto prob = [den](std::int64_t num) { return static_cast<double>(num) / static_cast<double>(den); };
        if (move > 0) rows[i].push_back({i - 1, prob(move), move});
        rows[i].push_back({i, prob(stay), stay});
        if (move > 0) rows[i].push_back({i + 1, prob(move), move});
    }
    return TransitionKernel(n, std::move(rows), den);
}

TransitionKernel build_umda_kernel(std::int64_t mu) {
    if (mu < 1) throw InvalidSpec("mu: must be >= 1");
    const auto n = static_cast<std::size_t>(mu);
    std::vector<std::vector<KernelEntry>> rows(n + 1);
    rows[0].push_back({0, 1.0, 0});
    rows[n].push_back({n, 1.0, 0});
    const double m = static_cast<double>(mu);
    for (std::size_t i = 1; i < n; ++i) {
        const double p = static_cast<double>(i) / m;
        std::vector<double> pmf(n + 1);
        double sum = 0.0;
        for (std::size_t j = 0; j <= n; ++j) {
            const double k = static_cast<double>(j);
            const double log_pmf = std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) +
                                   k * std::log(p) + (m - k) * std::log1p(-p);
            pmf[j] = std::exp(log_pmf);
            sum += pmf[j];
        }
        for (std::size_t j = 0; j <= n; ++j) {
            if (pmf[j] > 0.0) rows[i].push_back({j, pmf[j] / sum, 0});
        }
    }
    return TransitionKernel(n, std::move(rows));
}

std::size_t half_state(const TransitionKernel& kernel) {
    if (kernel.grid_size() % 2 != 0) {
        throw InvalidSpec("start: 1/2 is not on the grid {0, 1/" + std::to_string(kernel.grid_size()) +
                          ", ..., 1}; use an even mu");
    }
    return kernel.grid_size() / 2;
}

std::vector<bool> outside_interval(const TransitionKernel& kernel, double lo, double hi) {
    std::vector<bool> out(kernel.state_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = kernel.state_value(i);
        out[i] = v <= lo || v >= hi;
    }
    return out;
}

namespace {

/// States from which the targets are hit with probability one.
std::vector<bool> almost_sure_hitters(const TransitionKernel& kernel, const std::vector<bool>& targets) {
    const std::size_t n = kernel.state_count();
    std::vector<std::vector<std::size_t>> reverse(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (targets[i]) continue;
        for (const auto& e : kernel.row(i)) {
            if (e.probability > 0.0) reverse[e.target].push_back(i);
        }
    }
    // can_reach: backward search from targets
    std::vector<bool> can_reach(targets);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
        if (targets[i]) queue.push_back(i);
    }
    while (!queue.empty()) {
        const std::size_t s = queue.front();
        queue.pop_front();
        for (std::size_t pred : reverse[s]) {
            if (!can_reach[pred]) {
                can_reach[pred] = true;
                queue.push_back(pred);
            }
        }
    }
    // bad: backward search from states that cannot reach the targets
    std::vector<bool> bad(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (!can_reach[i]) {
            bad[i] = true;
            queue.push_back(i);
        }
    }
    while (!queue.empty()) {
        const std::size_t s = queue.front();
        queue.pop_front();
        for (std::size_t pred : reverse[s]) {
            if (!bad[pred] && !targets[pred]) {
                bad[pred] = true;
                queue.push_back(pred);
            }
        }
    }
    std::vector<bool> good(n);
    for (std::size_t i = 0; i < n; ++i) good[i] = !bad[i];
    return good;
}

/// Thomas algorithm for a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = d[i].
std::vector<double> solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                      std::vector<double> d) {
    const std::size_t m = b.size();
    for (std::size_t i = 1; i < m; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    std::vector<double> x(m);
    x[m - 1] = d[m - 1] / b[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    return x;
}

} // namespace

HittingSolve solve_hitting_times(const TransitionKernel& kernel, const std::vector<bool>& targets, std::size_t start,
                                 SolveMethod method) {
    const std::size_t n = kernel.state_count();
    if (targets.size() != n) throw InvalidSpec("targets: size must equal the number of states");
    if (start >= n) throw InvalidSpec("start: state out of range");

    HittingSolve out;
    out.expected.assign(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        if (targets[i]) out.expected[i] = 0.0;
    }
    if (targets[start]) return out;

    const std::vector<bool> good = almost_sure_hitters(kernel, targets);
    if (!good[start]) {
        std::ostringstream msg;
        msg << "hitting-time system is singular: from state " << start << " (p=" << kernel.state_value(start)
            << ") the target set is avoided with positive probability";
        throw SingularSystem(msg.str());
    }

    std::vector<std::size_t> unknowns;
    std::vector<std::ptrdiff_t> index(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (good[i] && !targets[i]) {
            index[i] = static_cast<std::ptrdiff_t>(unknowns.size());
            unknowns.push_back(i);
        }
    }
    const std::size_t m = unknowns.size();
    if (m > kDenseLimit && (method == SolveMethod::Dense || !kernel.is_tridiagonal())) {
        throw InfeasibleSize("hitting-time system too large for the dense solver (" + std::to_string(m) + " states)");
    }

    // residual of (I - Q) h = 1, accumulated in long double
    auto residual_of = [&](const std::vector<double>& h, std::vector<double>& r) {
        double worst = 0.0;
        for (std::size_t u = 0; u < m; ++u) {
            long double acc = h[u];
            for (const auto& e : kernel.row(unknowns[u])) {
                const auto col = index[e.target];
                if (col >= 0) acc -= static_cast<long double>(e.probability) * h[static_cast<std::size_t>(col)];
            }
            r[u] = static_cast<double>(1.0L - acc);
            worst = std::max(worst, std::abs(r[u]));
        }
        return worst;
    };

    const bool contiguous = m > 0 && unknowns.back() - unknowns.front() + 1 == m;
    std::vector<double> h(m, 0.0);
    std::vector<double> r(m, 1.0);

    if (method == SolveMethod::Auto && kernel.is_tridiagonal() && contiguous) {
        out.used_tridiagonal = true;
        std::vector<double> a(m, 0.0), b(m, 1.0), c(m, 0.0);
        for (std::size_t u = 0; u < m; ++u) {
            for (const auto& e : kernel.row(unknowns[u])) {
                const auto col = index[e.target];
                if (col < 0) continue;
                const auto v = static_cast<std::size_t>(col);
                if (v == u) b[u] -= e.probability;
                else if (v + 1 == u) a[u] -= e.probability;
                else if (v == u + 1) c[u] -= e.probability;
            }
        }
        for (int pass = 0; pass < 4; ++pass) {
            const auto delta = solve_tridiagonal(a, b, c, r);
            for (std::size_t u = 0; u < m; ++u) h[u] += delta[u];
            out.residual = residual_of(h, r);
            if (out.residual <= kResidualTarget * 1e-3) break;
        }
    } else {
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t u = 0; u < m; ++u) {
            for (const auto& e : kernel.row(unknowns[u])) {
                const auto col = index[e.target];
                if (col >= 0) A(static_cast<Eigen::Index>(u), col) -= e.probability;
            }
        }
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
        for (int pass = 0; pass < 4; ++pass) {
            const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(m));
            const Eigen::VectorXd delta = lu.solve(rhs);
            for (std::size_t u = 0; u < m; ++u) h[u] += delta(static_cast<Eigen::Index>(u));
            out.residual = residual_of(h, r);
            if (out.residual <= kResidualTarget * 1e-3) break;
        }
    }
    if (!(out.residual <= kResidualTarget)) {
        std::ostringstream msg;
        msg << "hitting-time solve did not reach residual 1e-8 (got " << out.residual << ")";
        throw SingularSystem(msg.str());
    }
    for (std::size_t u = 0; u < m; ++u) out.expected[unknowns[u]] = h[u];
    return out;
}

double expected_hitting_time(const TransitionKernel& kernel, std::size_t start, const std::vector<bool>& targets) {
    return solve_hitting_times(kernel, targets, start).expected[start];
}

double expected_absorption_time(const TransitionKernel& kernel, std::size_t start) {
    std::vector<bool> targets(kernel.state_count(), false);
    for (std::size_t s : kernel.absorbing_states()) targets[s] = true;
    return expected_hitting_time(kernel, start, targets);
}

double exit_time_from_interval(const TransitionKernel& kernel, double lo, double hi, std::size_t start) {
    if (start >= kernel.state_count()) throw InvalidSpec("start: state out of range");
    const double v = kernel.state_value(start);
    if (!(lo < v && v < hi)) throw DomainError("start: frequency must lie strictly inside (lo, hi)");
    return expected_hitting_time(kernel, start, outside_interval(kernel, lo, hi));
}

std::vector<double> hitting_time_distribution(const TransitionKernel& kernel, std::size_t start,
                                              const std::vector<bool>& targets, std::size_t horizon) {
    const std::size_t n = kernel.state_count();
    if (targets.size() != n) throw InvalidSpec("targets: size must equal the number of states");
    if (start >= n) throw InvalidSpec("start: state out of range");
    std::vector<double> cdf(horizon + 1, 0.0);
    if (targets[start]) {
        std::fill(cdf.begin(), cdf.end(), 1.0);
        return cdf;
    }
    std::vector<double> mass(n, 0.0), next(n, 0.0);
    mass[start] = 1.0;
    double absorbed = 0.0;
    for (std::size_t t = 1; t <= horizon; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (mass[i] == 0.0) continue;
            for (const auto& e : kernel.row(i)) next[e.target] += mass[i] * e.probability;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (targets[i]) {
                absorbed += next[i];
                next[i] = 0.0;
            }
        }
        std::swap(mass, next);
        cdf[t] = std::clamp(absorbed, cdf[t - 1], 1.0);
    }
    return cdf;
}

} // namespace driftlab
