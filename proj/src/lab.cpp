#include "driftlab/lab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "driftlab/errors.hpp"
#include "driftlab/markov.hpp"
#include "driftlab/parallel.hpp"

namespace driftlab {

std::string_view to_string(SweepParameter p) {
    switch (p) {
    case SweepParameter::Mu: return "mu";
    case SweepParameter::Rho: return "rho";
    case SweepParameter::K: return "K";
    }
    return "?";
}

SweepParameter parse_sweep_parameter(std::string_view name) {
    if (name == "mu") return SweepParameter::Mu;
    if (name == "rho") return SweepParameter::Rho;
    if (name == "K") return SweepParameter::K;
    throw InvalidSpec("sweep.parameter: expected mu, rho or K, got '" + std::string(name) + "'");
}

namespace {

std::int64_t integral_value(double v, const char* field) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 9.0e15) {
        throw InvalidSpec(std::string("sweep.values: ") + field + " must be a positive integer");
    }
    return static_cast<std::int64_t>(v);
}

void validate_model(const Model& model) {
    if (const auto* p = std::get_if<NeutralProcessSpec>(&model)) {
        p->validate();
        return;
    }
    const auto& e = std::get<EdaModel>(model);
    e.spec.validate();
    if (e.watch_bit >= e.spec.dim) throw InvalidSpec("watch_bit: out of range");
}

NeutralProcessSpec reduced(const Model& model) {
    if (const auto* p = std::get_if<NeutralProcessSpec>(&model)) return *p;
    return NeutralProcessSpec::from_eda(std::get<EdaModel>(model).spec);
}

} // namespace

Model apply_sweep_value(const Model& model, SweepParameter parameter, double value) {
    Model out = model;
    auto apply = [&](auto& s) {
        switch (parameter) {
        case SweepParameter::Mu: s.mu = integral_value(value, "mu"); break;
        case SweepParameter::Rho: s.rho = value; break;
        case SweepParameter::K: s.K = integral_value(value, "K"); break;
        }
    };
    if (auto* p = std::get_if<NeutralProcessSpec>(&out)) apply(*p);
    else apply(std::get<EdaModel>(out).spec);
    return out;
}

void ExperimentConfig::validate() const {
    validate_model(model);
    stop.validate();
    if (replicas < 1) throw InvalidSpec("replicas: must be at least 1");
    if (budget && *budget < 1) throw InvalidSpec("budget: must be at least 1");
    if (stop.kind == StopKind::RunAway) {
        const NeutralProcessSpec r = reduced(model);
        if (r.kind == NeutralProcessSpec::Kind::CGA) throw InvalidSpec("stop: run-away needs a PBIL-family model");
    }
    if (stop.kind == StopKind::MarginHit && !reduced(model).margins()) {
        throw InvalidSpec("stop: margin-hit needs margins");
    }
    if (sweep) {
        if (sweep->values.empty()) throw InvalidSpec("sweep.values: must not be empty");
        for (double v : sweep->values) validate_model(apply_sweep_value(model, sweep->parameter, v));
    }
}

std::size_t ExperimentConfig::effective_budget() const {
    return budget ? *budget : default_budget(reduced(model), stop);
}

HittingSummary summarize(std::vector<HittingRecord> samples) {
    HittingSummary s;
    s.n = samples.size();
    std::vector<double> times;
    times.reserve(samples.size());
    for (const auto& r : samples) {
        if (r.trigger == Trigger::BudgetExhausted) ++s.budget_exhausted;
        else times.push_back(static_cast<double>(r.stopping_time));
    }
    if (times.empty()) {
        throw ExperimentFailed("all " + std::to_string(s.n) + " replicas exhausted their iteration budget");
    }
    const double m = static_cast<double>(times.size());
    s.mean = std::accumulate(times.begin(), times.end(), 0.0) / m;
    if (times.size() > 1) {
        double ss = 0.0;
        for (double t : times) ss += (t - s.mean) * (t - s.mean);
        s.std_error = std::sqrt(ss / (m - 1.0) / m);
    }
    s.ci95_lo = s.mean - 1.959963984540054 * s.std_error;
    s.ci95_hi = s.mean + 1.959963984540054 * s.std_error;
    std::sort(times.begin(), times.end());
    const std::size_t k = times.size();
    s.median = k % 2 == 1 ? times[k / 2] : 0.5 * (times[k / 2 - 1] + times[k / 2]);
    s.flagged = static_cast<double>(s.budget_exhausted) > 0.001 * static_cast<double>(s.n);
    s.samples = std::move(samples);
    return s;
}

HittingSummary run_hitting_experiment(const ExperimentConfig& config) {
    config.validate();
    const std::size_t budget = config.effective_budget();
    std::vector<HittingRecord> records(config.replicas);
    parallel_for(config.replicas, resolve_threads(config.threads), [&](std::size_t r) {
        RandomStream rng(config.master_seed, r);
        if (const auto* p = std::get_if<NeutralProcessSpec>(&config.model)) {
            records[r] = simulate_until(*p, config.stop, rng, budget);
        } else {
            const auto& e = std::get<EdaModel>(config.model);
            records[r] = run_eda(e.spec, e.fitness, config.stop, rng, budget, {e.watch_bit, false, std::nullopt}).record;
        }
    });
    HittingSummary s = summarize(std::move(records));
    if (config.stop.kind == StopKind::RunAway) s.certification_bias = config.stop.epsilon;
    return s;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config) {
    config.validate();
    if (!config.sweep) return {{0.0, run_hitting_experiment(config)}};
    std::vector<SweepPoint> out;
    for (double v : config.sweep->values) {
        ExperimentConfig point = config;
        point.sweep.reset();
        point.model = apply_sweep_value(config.model, config.sweep->parameter, v);
        out.push_back({v, run_hitting_experiment(point)});
    }
    return out;
}

ScalingFit fit_scaling_law(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw InsufficientData("scaling fit: need at least 3 points");
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0)) throw DomainError("scaling fit: parameters and means must be positive");
        xs.push_back(std::log(x));
        ys.push_back(std::log(y));
    }
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw DomainError("scaling fit: parameters must not all be equal");
    ScalingFit fit;
    fit.exponent = sxy / sxx;
    fit.multiplier = std::exp(my - fit.exponent * mx);
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (my + fit.exponent * (xs[i] - mx));
        sse += e * e;
    }
    fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - sse / syy, 0.0, 1.0);
    return fit;
}

bool TailReport::any_violation() const {
    return std::any_of(entries.begin(), entries.end(), [](const TailEntry& e) { return e.violated; });
}

double tail_bound(const NeutralProcessSpec& spec, double gamma, std::size_t horizon) {
    const double T = static_cast<double>(horizon);
    if (spec.kind == NeutralProcessSpec::Kind::CGA) {
        const double K = static_cast<double>(spec.K);
        return 2.0 * std::exp(-gamma * gamma * K * K / (2.0 * T));
    }
    const double rho = spec.max_rate();
    return 2.0 * std::exp(-gamma * gamma * static_cast<double>(spec.mu) / (2.0 * rho * rho * T));
}

std::optional<std::vector<double>> exact_exit_distribution(const NeutralProcessSpec& spec, double gamma,
                                                           std::size_t horizon) {
    if (spec.margins_dim) return std::nullopt;
    std::optional<TransitionKernel> kernel;
    if (spec.kind == NeutralProcessSpec::Kind::CGA && spec.K % 2 == 0) {
        kernel = build_cga_kernel(spec.K);
    } else if (spec.kind == NeutralProcessSpec::Kind::PBIL && spec.rho_schedule.empty() && spec.rho == 1.0 &&
               spec.mu % 2 == 0) {
        kernel = build_umda_kernel(spec.mu);
    } else {
        return std::nullopt;
    }
    const auto targets = outside_interval(*kernel, 0.5 - gamma, 0.5 + gamma);
    return hitting_time_distribution(*kernel, half_state(*kernel), targets, horizon);
}

namespace {

constexpr double kZ99 = 2.3263478740408408;

std::pair<double, double> wilson_one_sided(double k, double n) {
    const double p = k / n;
    const double z2 = kZ99 * kZ99;
    const double centre = p + z2 / (2.0 * n);
    const double half = kZ99 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    const double denom = 1.0 + z2 / n;
    return {std::max(0.0, (centre - half) / denom), std::min(1.0, (centre + half) / denom)};
}

} // namespace

TailReport validate_tail_bound(const NeutralProcessSpec& spec, double gamma, const std::vector<std::size_t>& horizons,
                               std::size_t replicas, std::uint64_t seed, unsigned threads) {
    spec.validate();
    if (!(gamma > 0.0 && gamma <= 0.5)) throw InvalidSpec("gamma: must lie in (0, 1/2]");
    if (horizons.empty()) throw InvalidSpec("horizons: must not be empty");
    if (replicas < 1) throw InvalidSpec("replicas: must be at least 1");
    for (std::size_t T : horizons) {
        if (T < 1) throw InvalidSpec("horizons: every horizon must be at least 1");
    }
    const std::size_t max_t = *std::max_element(horizons.begin(), horizons.end());
    const StoppingRule stop = StoppingRule::exit_middle(0.5 - gamma, 0.5 + gamma);

    std::vector<std::size_t> exit_time(replicas);
    parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
        RandomStream rng(seed, r);
        const HittingRecord rec = simulate_until(spec, stop, rng, max_t);
        exit_time[r] = rec.trigger == Trigger::BudgetExhausted ? max_t + 1 : rec.stopping_time;
    });
    std::sort(exit_time.begin(), exit_time.end());
    const auto exact = exact_exit_distribution(spec, gamma, max_t);

    TailReport report;
    report.gamma = gamma;
    report.replicas = replicas;
    for (std::size_t T : horizons) {
        TailEntry e;
        e.horizon = T;
        e.bound = tail_bound(spec, gamma, T);
        const auto hits = std::upper_bound(exit_time.begin(), exit_time.end(), T) - exit_time.begin();
        e.empirical = static_cast<double>(hits) / static_cast<double>(replicas);
        std::tie(e.lower99, e.upper99) = wilson_one_sided(static_cast<double>(hits), static_cast<double>(replicas));
        if (exact) e.exact = (*exact)[T];
        e.violated = e.lower99 > e.bound || (e.exact && *e.exact > e.bound);
        report.entries.push_back(e);
    }
    return report;
}

void AdviceRequest::validate() const {
    if (!(budget_evals >= 2.0)) throw DomainError("budget: need F >= 2 evaluations");
    if (dim < 1) throw DomainError("dim: must be at least 1");
    if (!(gamma > 0.0 && gamma <= 0.5)) throw DomainError("gamma: must lie in (0, 1/2]");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta: must lie in (0, 1)");
    if (algorithm != Algorithm::CGA) {
        if (lambda < 1) throw DomainError("lambda: must be at least 1");
        if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("rho: must lie in (0, 1]");
        if (budget_evals < static_cast<double>(lambda)) throw DomainError("budget: fewer evaluations than lambda");
    }
}

Advice advise_parameters(const AdviceRequest& request) {
    request.validate();
    const double log_term = std::log(2.0 * static_cast<double>(request.dim) / request.delta);
    Advice a;
    if (request.algorithm == Algorithm::CGA) {
        a.iterations = request.budget_evals / 2.0;
        a.raw_bound = std::sqrt(2.0 * a.iterations * log_term) / request.gamma;
        auto k = static_cast<std::int64_t>(std::ceil(a.raw_bound));
        if (k % 2 != 0) ++k;
        a.value = std::max<std::int64_t>(k, 2);
        return a;
    }
    const double rho = request.algorithm == Algorithm::UMDA ? 1.0 : request.rho;
    a.iterations = std::floor(request.budget_evals / static_cast<double>(request.lambda));
    a.raw_bound = 2.0 * rho * rho * a.iterations * log_term / (request.gamma * request.gamma);
    a.value = std::max<std::int64_t>(static_cast<std::int64_t>(std::ceil(a.raw_bound)), 1);
    return a;
}

HittingSummary runaway_campaign(std::int64_t mu, double rho, double c, double epsilon, std::size_t replicas,
                                std::uint64_t seed, unsigned threads, std::optional<std::size_t> budget) {
    if (!(rho > 0.0 && rho < 1.0)) {
        throw InvalidSpec("rho: run-away campaigns need rho < 1; use absorption for UMDA");
    }
    if (!(c > 0.5 && c < 1.0 / std::sqrt(2.0))) throw InvalidSpec("c: must lie in (1/2, 1/sqrt(2))");
    ExperimentConfig config;
    config.model = NeutralProcessSpec::pbil(mu, rho);
    config.stop = StoppingRule::run_away(c, epsilon);
    config.replicas = replicas;
    config.master_seed = seed;
    config.threads = threads;
    config.budget = budget;
    return run_hitting_experiment(config);
}

} // namespace driftlab
