#include "driftlab/neutral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "driftlab/errors.hpp"

namespace driftlab {

// ---------------------------------------------------------------- stopping rules

std::string_view to_string(StopKind kind) {
    switch (kind) {
    case StopKind::Absorption: return "absorption";
    case StopKind::ExitMiddle: return "exit-middle";
    case StopKind::MarginHit: return "margin-hit";
    case StopKind::RunAway: return "runaway";
    case StopKind::Horizon: return "horizon";
    case StopKind::LowerHit: return "lower-hit";
    }
    return "?";
}

std::string_view to_string(Trigger trigger) {
    switch (trigger) {
    case Trigger::Absorption: return "absorption";
    case Trigger::ExitMiddle: return "exit-middle";
    case Trigger::MarginHit: return "margin-hit";
    case Trigger::RunAway: return "runaway";
    case Trigger::Horizon: return "horizon";
    case Trigger::LowerHit: return "lower-hit";
    case Trigger::BudgetExhausted: return "budget-exhausted";
    }
    return "?";
}

StopKind parse_stop_kind(std::string_view name) {
    if (name == "absorption") return StopKind::Absorption;
    if (name == "exit-middle") return StopKind::ExitMiddle;
    if (name == "margin-hit") return StopKind::MarginHit;
    if (name == "runaway") return StopKind::RunAway;
    if (name == "horizon") return StopKind::Horizon;
    if (name == "lower-hit") return StopKind::LowerHit;
    throw InvalidSpec("stop: unknown stopping rule '" + std::string(name) +
                      "' (expected absorption, exit-middle, margin-hit, runaway, horizon, lower-hit)");
}

StoppingRule StoppingRule::exit_middle(double lo, double hi) {
    StoppingRule r;
    r.kind = StopKind::ExitMiddle;
    r.lo = lo;
    r.hi = hi;
    return r;
}

StoppingRule StoppingRule::margin_hit() {
    StoppingRule r;
    r.kind = StopKind::MarginHit;
    return r;
}

StoppingRule StoppingRule::run_away(double c, double epsilon) {
    StoppingRule r;
    r.kind = StopKind::RunAway;
    r.c = c;
    r.epsilon = epsilon;
    return r;
}

StoppingRule StoppingRule::at_horizon(std::size_t t) {
    StoppingRule r;
    r.kind = StopKind::Horizon;
    r.horizon = t;
    return r;
}

StoppingRule StoppingRule::lower_hit(double level) {
    StoppingRule r;
    r.kind = StopKind::LowerHit;
    r.level = level;
    return r;
}

void StoppingRule::validate() const {
    switch (kind) {
    case StopKind::ExitMiddle:
        if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) throw InvalidSpec("lo/hi: need 0 <= lo < hi <= 1");
        break;
    case StopKind::RunAway:
        if (!(c > 0.5 && c < 1.0 / std::sqrt(2.0))) throw InvalidSpec("c: must lie in (1/2, 1/sqrt(2))");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidSpec("epsilon: must lie in (0, 1)");
        break;
    case StopKind::LowerHit:
        if (!(level >= 0.0 && level <= 1.0)) throw InvalidSpec("level: must lie in [0, 1]");
        break;
    default: break;
    }
}

StopMonitor::StopMonitor(const StoppingRule& rule, std::optional<Margins> margins, std::int64_t mu, double rate)
    : rule_(rule), margins_(margins), mu_(mu),
      runaway_threshold_(rule.c * rate / static_cast<double>(std::max<std::int64_t>(mu, 1))) {
    if (rule_.kind == StopKind::MarginHit && !margins_) {
        throw InvalidSpec("stop: margin-hit needs margins enabled");
    }
}

std::optional<HittingRecord> StopMonitor::start(double p0) const {
    if (rule_.kind == StopKind::Horizon && rule_.horizon == 0) return HittingRecord{0, p0, Trigger::Horizon, false};
    return std::nullopt;
}

std::optional<HittingRecord> StopMonitor::observe(std::size_t t, double p, std::int64_t ones, double future_rate) {
    switch (rule_.kind) {
    case StopKind::Absorption:
        if (p <= 0.0 || p >= 1.0) return HittingRecord{t, p, Trigger::Absorption, false};
        return std::nullopt;
    case StopKind::ExitMiddle:
        if (p <= rule_.lo || p >= rule_.hi) return HittingRecord{t, p, Trigger::ExitMiddle, false};
        return std::nullopt;
    case StopKind::MarginHit:
        if (p <= margins_->lo() || p >= margins_->hi()) return HittingRecord{t, p, Trigger::MarginHit, false};
        return std::nullopt;
    case StopKind::Horizon:
        if (t >= rule_.horizon) return HittingRecord{t, p, Trigger::Horizon, false};
        return std::nullopt;
    case StopKind::LowerHit:
        if (p <= rule_.level) return HittingRecord{t, p, Trigger::LowerHit, false};
        return std::nullopt;
    case StopKind::RunAway: break;
    }

    // A phase ends when the minority value is sampled after entering the run-away set.
    if (have_candidate_) {
        const bool consistent = low_side_ ? ones == 0 : ones == mu_;
        if (!consistent) have_candidate_ = false;
    }
    if (!have_candidate_) {
        if (p <= 0.5 && p <= runaway_threshold_) {
            have_candidate_ = true;
            low_side_ = true;
        } else if (p > 0.5 && 1.0 - p <= runaway_threshold_) {
            have_candidate_ = true;
            low_side_ = false;
        }
        if (have_candidate_) {
            candidate_t_ = t;
            candidate_p_ = p;
        }
    }
    if (have_candidate_) {
        const double q = low_side_ ? p : 1.0 - p;
        if (certify_runaway(q, mu_, future_rate, rule_.epsilon)) {
            return HittingRecord{candidate_t_, candidate_p_, Trigger::RunAway, true};
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- process spec

NeutralProcessSpec NeutralProcessSpec::pbil(std::int64_t mu, double rho) {
    NeutralProcessSpec s;
    s.kind = Kind::PBIL;
    s.mu = mu;
    s.rho = rho;
    return s;
}

NeutralProcessSpec NeutralProcessSpec::ce(std::int64_t mu, std::vector<double> schedule) {
    NeutralProcessSpec s = pbil(mu, schedule.empty() ? 1.0 : schedule.front());
    s.rho_schedule = std::move(schedule);
    return s;
}

NeutralProcessSpec NeutralProcessSpec::cga(std::int64_t K) {
    NeutralProcessSpec s;
    s.kind = Kind::CGA;
    s.K = K;
    return s;
}

NeutralProcessSpec NeutralProcessSpec::from_eda(const EdaSpec& spec) {
    spec.validate();
    NeutralProcessSpec s;
    if (spec.algorithm == Algorithm::CGA) {
        s = cga(spec.K);
    } else if (spec.algorithm == Algorithm::CE) {
        s = ce(spec.mu, spec.rho_schedule);
    } else {
        s = pbil(spec.mu, spec.rho);
    }
    if (spec.margins) s.margins_dim = spec.dim;
    return s;
}

NeutralProcessSpec NeutralProcessSpec::with_margins(std::size_t dim) const {
    NeutralProcessSpec s = *this;
    s.margins_dim = dim;
    return s;
}

void NeutralProcessSpec::validate() const {
    EdaSpec eda;
    if (kind == Kind::CGA) {
        eda = EdaSpec::cga(K, margins_dim.value_or(1));
    } else if (!rho_schedule.empty()) {
        eda = EdaSpec::ce(mu, mu, rho_schedule, margins_dim.value_or(1));
    } else {
        eda = EdaSpec::pbil(mu, mu, rho, margins_dim.value_or(1));
    }
    eda.margins = margins_dim.has_value();
    eda.validate();
}

double NeutralProcessSpec::rate_at(std::size_t t) const {
    if (rho_schedule.empty()) return rho;
    const std::size_t i = t == 0 ? 0 : t - 1;
    return i < rho_schedule.size() ? rho_schedule[i] : rho_schedule.back();
}

double NeutralProcessSpec::min_rate_from(std::size_t t) const {
    if (rho_schedule.empty()) return rho;
    const std::size_t i = t == 0 ? 0 : std::min(t - 1, rho_schedule.size() - 1);
    return *std::min_element(rho_schedule.begin() + static_cast<std::ptrdiff_t>(i), rho_schedule.end());
}

double NeutralProcessSpec::max_rate() const {
    if (rho_schedule.empty()) return rho;
    return *std::max_element(rho_schedule.begin(), rho_schedule.end());
}

std::optional<Margins> NeutralProcessSpec::margins() const {
    if (!margins_dim) return std::nullopt;
    return Margins{*margins_dim};
}

std::int64_t NeutralProcessSpec::cga_denominator() const { return (!margins_dim && K % 2 == 0) ? K : 2 * K; }

// ---------------------------------------------------------------- steps

double pbil_neutral_step(double p, std::int64_t mu, double rho, RandomStream& rng, std::int64_t& ones) {
    ones = rng.binomial(mu, p);
    const double next = (1.0 - rho) * p + rho * static_cast<double>(ones) / static_cast<double>(mu);
    return std::clamp(next, 0.0, 1.0);
}

double pbil_neutral_step(double p, std::int64_t mu, double rho, RandomStream& rng) {
    std::int64_t ones = 0;
    return pbil_neutral_step(p, mu, rho, rng, ones);
}

GridValue cga_neutral_step(GridValue p, std::int64_t K, RandomStream& rng) {
    if (p.den % K != 0) throw std::logic_error("cga_neutral_step: grid denominator must be a multiple of K");
    const bool first = rng.bernoulli_ratio(p.num, p.den);
    const bool second = rng.bernoulli_ratio(p.num, p.den);
    const std::int64_t step = p.den / K;
    if (first && !second) p.num += step;
    else if (!first && second) p.num -= step;
    return p;
}

bool certify_runaway(double p, std::int64_t mu, double rho, double epsilon) {
    const double q = std::min(p, 1.0 - p);
    if (q <= 0.0) return true;
    if (rho >= 1.0) return false;
    return static_cast<double>(mu) * q / rho <= epsilon;
}

std::size_t default_budget(const NeutralProcessSpec& spec, const StoppingRule& stop) {
    if (stop.kind == StopKind::Horizon) return stop.horizon;
    double scale = 0.0;
    if (spec.kind == NeutralProcessSpec::Kind::CGA) {
        scale = static_cast<double>(spec.K) * static_cast<double>(spec.K);
    } else {
        const double r = spec.min_rate_from(1);
        scale = static_cast<double>(spec.mu) / (r * r);
    }
    double budget = std::max(200.0 * scale, 1000.0);
    if (stop.kind == StopKind::RunAway) {
        const double r = spec.min_rate_from(1);
        budget += 4.0 * std::ceil(std::log(stop.c / stop.epsilon) / r);
    }
    return static_cast<std::size_t>(budget);
}

namespace {

/// Mutable state of one reduced-process trajectory.
class NeutralWalker {
  public:
    explicit NeutralWalker(const NeutralProcessSpec& spec) : spec_(spec) {
        if (spec_.kind == NeutralProcessSpec::Kind::CGA) {
            grid_ = GridValue{spec_.cga_denominator() / 2, spec_.cga_denominator()};
            if (auto m = spec_.margins()) {
                const auto D = static_cast<std::int64_t>(m->dim);
                lo_num_ = grid_.den / D;
                hi_num_ = grid_.den - lo_num_;
            } else {
                hi_num_ = grid_.den;
            }
        }
    }

    [[nodiscard]] double value() const {
        return spec_.kind == NeutralProcessSpec::Kind::CGA ? grid_.value() : p_;
    }

    /// Advances to iteration t; returns the number of ones that drove the update.
    std::int64_t step(std::size_t t, RandomStream& rng) {
        if (spec_.kind == NeutralProcessSpec::Kind::CGA) {
            const GridValue before = grid_;
            grid_ = cga_neutral_step(grid_, spec_.K, rng);
            grid_.num = std::clamp(grid_.num, lo_num_, hi_num_);
            return grid_.num > before.num ? 1 : 0;
        }
        std::int64_t ones = 0;
        p_ = pbil_neutral_step(p_, spec_.mu, spec_.rate_at(t), rng, ones);
        if (auto m = spec_.margins()) p_ = std::clamp(p_, m->lo(), m->hi());
        return ones;
    }

  private:
    const NeutralProcessSpec& spec_;
    double p_ = 0.5;
    GridValue grid_;
    std::int64_t lo_num_ = 0;
    std::int64_t hi_num_ = 0;
};

} // namespace

HittingRecord simulate_until(const NeutralProcessSpec& spec, const StoppingRule& stop, RandomStream& rng,
                             std::size_t budget) {
    spec.validate();
    stop.validate();
    if (stop.kind == StopKind::RunAway && spec.kind == NeutralProcessSpec::Kind::CGA) {
        throw InvalidSpec("stop: run-away is defined for the PBIL family only");
    }

    NeutralWalker walker(spec);
    const std::int64_t drivers = spec.kind == NeutralProcessSpec::Kind::CGA ? 1 : spec.mu;
    StopMonitor monitor(stop, spec.margins(), drivers, spec.max_rate());
    if (auto hit = monitor.start(walker.value())) return *hit;
    for (std::size_t t = 1; t <= budget; ++t) {
        const std::int64_t ones = walker.step(t, rng);
        if (auto hit = monitor.observe(t, walker.value(), ones, spec.min_rate_from(t + 1))) return *hit;
    }
    return HittingRecord{budget, walker.value(), Trigger::BudgetExhausted, false};
}

std::vector<double> simulate_path(const NeutralProcessSpec& spec, std::size_t horizon, RandomStream& rng) {
    spec.validate();
    NeutralWalker walker(spec);
    std::vector<double> path;
    path.reserve(horizon);
    for (std::size_t t = 1; t <= horizon; ++t) {
        walker.step(t, rng);
        path.push_back(walker.value());
    }
    return path;
}

} // namespace driftlab
