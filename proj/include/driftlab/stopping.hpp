#pragma once

/// @file stopping.hpp
/// @brief Stopping rules and hitting records shared by the full EDA and the
/// reduced one-bit processes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace driftlab {

enum class StopKind { Absorption, ExitMiddle, MarginHit, RunAway, Horizon, LowerHit };

enum class Trigger { Absorption, ExitMiddle, MarginHit, RunAway, Horizon, LowerHit, BudgetExhausted };

std::string_view to_string(StopKind kind);
std::string_view to_string(Trigger trigger);
StopKind parse_stop_kind(std::string_view name);

/// When to stop watching a frequency.
///
/// - Absorption: p in {0, 1}.
/// - ExitMiddle: p <= lo or p >= hi.
/// - MarginHit:  p <= 1/D or p >= 1 - 1/D (requires margins).
/// - RunAway:    p enters [0, c*rho/mu] or [1 - c*rho/mu, 1] and every later
///               sample agrees with that side, certified up to epsilon.
/// - Horizon:    t == horizon.
/// - LowerHit:   p <= level.
///
/// All rules except Horizon are evaluated for t >= 1.
struct StoppingRule {
    StopKind kind = StopKind::Absorption;
    double lo = 0.25;
    double hi = 0.75;
    double level = 0.25;
    double c = 0.6;
    double epsilon = 1e-9;
    std::size_t horizon = 0;

    static StoppingRule absorption() { return {}; }
    static StoppingRule exit_middle(double lo = 0.25, double hi = 0.75);
    static StoppingRule margin_hit();
    static StoppingRule run_away(double c = 0.6, double epsilon = 1e-9);
    static StoppingRule at_horizon(std::size_t t);
    static StoppingRule lower_hit(double level = 0.25);

    /// Throws InvalidSpec on out-of-range parameters.
    void validate() const;
};

struct HittingRecord {
    std::size_t stopping_time = 0;
    double terminal_frequency = 0.5;
    Trigger trigger = Trigger::BudgetExhausted;
    bool certified = false;
};

/// Margin bounds [1/D, 1 - 1/D].
struct Margins {
    std::size_t dim = 2;
    [[nodiscard]] double lo() const { return 1.0 / static_cast<double>(dim); }
    [[nodiscard]] double hi() const { return 1.0 - 1.0 / static_cast<double>(dim); }
};

/// Incremental evaluation of a StoppingRule along one trajectory.
class StopMonitor {
  public:
    /// `mu` and `rate` parameterise the run-away set [0, c*rate/mu]; they are
    /// ignored by the other rules.
    StopMonitor(const StoppingRule& rule, std::optional<Margins> margins, std::int64_t mu, double rate);

    /// Check at t = 0; only Horizon(0) can fire.
    std::optional<HittingRecord> start(double p0) const;

    /// Observe iteration t >= 1. `ones` is the number of ones among the mu
    /// samples that drove the update; `future_rate` lower-bounds every learning
    /// rate from iteration t + 1 on.
    std::optional<HittingRecord> observe(std::size_t t, double p, std::int64_t ones, double future_rate);

  private:
    StoppingRule rule_;
    std::optional<Margins> margins_;
    std::int64_t mu_;
    double runaway_threshold_;
    bool have_candidate_ = false;
    bool low_side_ = true;
    std::size_t candidate_t_ = 0;
    double candidate_p_ = 0.0;
};

} // namespace driftlab
