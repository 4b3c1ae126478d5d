#pragma once

/// @file markov.hpp
/// @brief Exact finite Markov chains for the neutral-bit frequency on the
/// grid {0, 1/n, ..., 1}: kernel construction, expected hitting times by
/// linear solves, and finite-horizon hitting-time distributions.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace driftlab {

struct KernelEntry {
    std::size_t target = 0;
    double probability = 0.0;
    /// Exact probability numerator over TransitionKernel::exact_denominator(),
    /// meaningful only when that denominator is nonzero.
    std::int64_t numerator = 0;
};

/// Row-stochastic sparse matrix over states 0..n representing frequencies i/n.
/// Immutable after construction.
class TransitionKernel {
  public:
    TransitionKernel(std::size_t n, std::vector<std::vector<KernelEntry>> rows, std::int64_t exact_denominator = 0);

    /// n; the states are 0..n.
    [[nodiscard]] std::size_t grid_size() const { return n_; }
    [[nodiscard]] std::size_t state_count() const { return n_ + 1; }
    [[nodiscard]] double state_value(std::size_t i) const {
        return static_cast<double>(i) / static_cast<double>(n_);
    }
    [[nodiscard]] const std::vector<KernelEntry>& row(std::size_t i) const { return rows_.at(i); }
    [[nodiscard]] double probability(std::size_t from, std::size_t to) const;
    [[nodiscard]] bool is_absorbing(std::size_t i) const;
    [[nodiscard]] std::vector<std::size_t> absorbing_states() const;
    [[nodiscard]] bool is_tridiagonal() const { return tridiagonal_; }
    [[nodiscard]] std::int64_t exact_denominator() const { return exact_denominator_; }

    /// Rows of "state,target,probability", 17 significant digits.
    void write_csv(std::ostream& out) const;

  private:
    std::size_t n_;
    std::vector<std::vector<KernelEntry>> rows_;
    std::int64_t exact_denominator_;
    bool tridiagonal_ = true;
};

/// cGA neutral chain: from i/K move +-1/K with probability p(1-p) each,
/// stored exactly with denominator K^2. Requires K >= 2.
TransitionKernel build_cga_kernel(std::int64_t K);

/// UMDA neutral chain: row i is the Binomial(mu, i/mu) pmf over targets j/mu.
TransitionKernel build_umda_kernel(std::int64_t mu);

/// State index of frequency 1/2. Throws InvalidSpec if n is odd (for the UMDA
/// chain: odd mu puts 1/2 off the grid).
std::size_t half_state(const TransitionKernel& kernel);

/// Indicator over states: value <= lo or value >= hi.
std::vector<bool> outside_interval(const TransitionKernel& kernel, double lo, double hi);

struct HittingSolve {
    /// Expected hitting time from every state; 0 on targets.
    std::vector<double> expected;
    /// ||(I - Q) h - 1||_inf over the solved states.
    double residual = 0.0;
    bool used_tridiagonal = false;
};

/// Auto uses the Thomas algorithm when the unknowns form a tridiagonal band
/// and dense LU otherwise; Dense always uses LU.
enum class SolveMethod { Auto, Dense };

/// Solves (I - Q) h = 1 over the states from which `targets` is hit almost
/// surely. Throws SingularSystem if `start` can avoid the targets forever.
HittingSolve solve_hitting_times(const TransitionKernel& kernel, const std::vector<bool>& targets, std::size_t start,
                                 SolveMethod method = SolveMethod::Auto);

double expected_hitting_time(const TransitionKernel& kernel, std::size_t start, const std::vector<bool>& targets);

/// Expected iterations until the chain is absorbed; 0 from an absorbing state.
double expected_absorption_time(const TransitionKernel& kernel, std::size_t start);

/// Expected iterations until the chain leaves the open interval (lo, hi).
/// Requires lo < start value < hi.
double exit_time_from_interval(const TransitionKernel& kernel, double lo, double hi, std::size_t start);

/// Pr[T_hit <= t] for t = 0..horizon (index t), where T_hit is the first
/// visit to `targets`. Nondecreasing, within [0,1].
std::vector<double> hitting_time_distribution(const TransitionKernel& kernel, std::size_t start,
                                              const std::vector<bool>& targets, std::size_t horizon);

} // namespace driftlab
