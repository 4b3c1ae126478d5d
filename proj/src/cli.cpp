#include "driftlab/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "driftlab/dominance.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/io.hpp"
#include "driftlab/lab.hpp"
#include "driftlab/markov.hpp"
#include "driftlab/moments.hpp"
#include "driftlab/neutral.hpp"

namespace driftlab::cli {

namespace {

enum class Kind { Int, UInt, OptUInt, Double, Bool, String, DoubleList, SizeList };

struct OptionDef {
    std::string name;
    Kind kind;
    Json fallback;
    std::string help;
    bool required = false;
    std::vector<std::string> choices = {};
};

std::string flag_of(const std::string& name) {
    std::string f = "--" + name;
    for (auto& ch : f) {
        if (ch == '_') ch = '-';
    }
    return f;
}

// ---------------------------------------------------------------- option tables

std::vector<OptionDef> model_options(std::vector<std::string> algos) {
    return {
        {"algo", Kind::String, "", "algorithm", true, std::move(algos)},
        {"mu", Kind::Int, 2, "selected individuals per iteration"},
        {"lambda", Kind::Int, 2, "sampled individuals per iteration"},
        {"rho", Kind::Double, 1.0, "learning rate"},
        {"rho_schedule", Kind::DoubleList, Json::array(), "CE learning rates, last one repeats"},
        {"K", Kind::Int, 2, "cGA hypothetical population size"},
        {"margins", Kind::Bool, false, "clamp frequencies to [1/D, 1-1/D]"},
        {"dim", Kind::UInt, 1, "problem dimension D"},
    };
}

std::vector<OptionDef> stop_options() {
    return {
        {"stop", Kind::String, "absorption", "stopping rule", false,
         {"absorption", "exit-middle", "margin-hit", "runaway", "horizon", "lower-hit"}},
        {"lo", Kind::Double, 0.25, "exit-middle lower end"},
        {"hi", Kind::Double, 0.75, "exit-middle upper end"},
        {"level", Kind::Double, 0.25, "lower-hit level"},
        {"c", Kind::Double, 0.6, "run-away threshold constant"},
        {"epsilon", Kind::Double, 1e-9, "run-away certification error"},
        {"horizon", Kind::UInt, 0, "horizon rule iteration"},
    };
}

std::vector<OptionDef> campaign_options(std::size_t replicas) {
    return {
        {"replicas", Kind::UInt, replicas, "Monte Carlo replicas"},
        {"budget", Kind::OptUInt, nullptr, "iteration cap per replica"},
        {"threads", Kind::UInt, 0, "worker cap (0: $DRIFTLAB_THREADS or all cores)"},
    };
}

std::vector<OptionDef> common_options() {
    return {
        {"seed", Kind::UInt, 1, "master seed"},
        {"output", Kind::String, "", "file receiving the full results"},
        {"format", Kind::String, "json", "output file format", false, {"json", "csv"}},
        {"threads", Kind::UInt, 0, "worker cap (0: $DRIFTLAB_THREADS or all cores)"},
    };
}

void append(std::vector<OptionDef>& to, std::vector<OptionDef> from) {
    for (auto& d : from) {
        const bool dup = std::any_of(to.begin(), to.end(), [&](const OptionDef& x) { return x.name == d.name; });
        if (!dup) to.push_back(std::move(d));
    }
}

struct CommandDef {
    std::string name;
    std::string help;
    std::vector<OptionDef> options;
};

const std::vector<CommandDef>& commands() {
    static const std::vector<CommandDef> table = [] {
        const std::vector<std::string> all_algos{"pbil", "umda", "mmas", "cga", "ce"};
        std::vector<CommandDef> t;

        CommandDef simulate{"simulate", "Monte Carlo hitting times of a neutral process or a full EDA", {}};
        append(simulate.options, model_options(all_algos));
        append(simulate.options, {
            {"model", Kind::String, "process", "reduced one-bit process or full EDA", false, {"process", "eda"}},
            {"fitness", Kind::String, "neutral", "EDA fitness", false,
             {"neutral", "onemax", "leading-ones", "prefer-one", "prefer-zero"}},
            {"bit", Kind::UInt, 0, "bit the fitness treats specially"},
            {"weight", Kind::Double, 1.0, "prefer-one / prefer-zero weight"},
            {"watch_bit", Kind::UInt, 0, "bit whose frequency is watched"},
        });
        append(simulate.options, stop_options());
        append(simulate.options, campaign_options(1000));
        append(simulate.options, {
            {"sweep_param", Kind::String, "", "swept parameter", false, {"", "mu", "rho", "K"}},
            {"sweep_values", Kind::DoubleList, Json::array(), "sweep grid"},
        });
        t.push_back(std::move(simulate));

        CommandDef exact{"exact", "Expected hitting time from the exact Markov chain", {}};
        append(exact.options, {
            {"algo", Kind::String, "", "algorithm", true, {"cga", "umda"}},
            {"K", Kind::Int, 2, "cGA hypothetical population size"},
            {"mu", Kind::Int, 2, "UMDA population size"},
            {"stop", Kind::String, "absorption", "stopping rule", false, {"absorption", "exit-middle"}},
            {"lo", Kind::Double, 0.25, "exit-middle lower end"},
            {"hi", Kind::Double, 0.75, "exit-middle upper end"},
        });
        t.push_back(std::move(exact));

        CommandDef scaling{"scaling", "Power-law fit of hitting times over a parameter grid", {}};
        append(scaling.options, {
            {"algo", Kind::String, "", "algorithm", true, {"cga", "umda", "pbil"}},
            {"method", Kind::String, "exact", "exact chain or Monte Carlo", false, {"exact", "mc"}},
            {"sweep_param", Kind::String, "", "swept parameter (default K, mu or rho)", false, {"", "mu", "rho", "K"}},
            {"sweep_values", Kind::DoubleList, Json::array(), "parameter grid", true},
            {"mu", Kind::Int, 16, "population size"},
            {"rho", Kind::Double, 0.5, "learning rate"},
            {"K", Kind::Int, 16, "cGA hypothetical population size"},
        });
        append(scaling.options, stop_options());
        append(scaling.options, campaign_options(10000));
        t.push_back(std::move(scaling));

        CommandDef tail{"tailcheck", "Exit probabilities from the middle range against the tail bound", {}};
        append(tail.options, {
            {"algo", Kind::String, "", "algorithm", true, {"cga", "pbil", "umda"}},
            {"K", Kind::Int, 16, "cGA hypothetical population size"},
            {"mu", Kind::Int, 16, "population size"},
            {"rho", Kind::Double, 0.5, "learning rate"},
            {"gamma", Kind::Double, 0.25, "distance from 1/2"},
            {"horizons", Kind::SizeList, Json::array(), "horizons T (default 1..10 * scale)"},
        });
        append(tail.options, campaign_options(10000));
        t.push_back(std::move(tail));

        CommandDef runaway{"runaway", "Run-away times of PBIL", {}};
        append(runaway.options, {
            {"mu", Kind::Int, 2, "selected individuals per iteration", true},
            {"rho", Kind::Double, 0.5, "learning rate, below 1", true},
            {"c", Kind::Double, 0.6, "threshold constant in (1/2, 1/sqrt 2)"},
            {"epsilon", Kind::Double, 1e-9, "certification error"},
        });
        append(runaway.options, campaign_options(1000));
        t.push_back(std::move(runaway));

        CommandDef dom{"dominance", "Stochastic dominance of a bit frequency under two fitness functions", {}};
        append(dom.options, model_options(all_algos));
        append(dom.options, {
            {"fitness", Kind::String, "prefer-one", "fitness of the dominating run", false,
             {"neutral", "onemax", "leading-ones", "prefer-one", "prefer-zero"}},
            {"fitness_g", Kind::String, "neutral", "fitness of the dominated run", false,
             {"neutral", "onemax", "leading-ones", "prefer-one", "prefer-zero"}},
            {"bit", Kind::UInt, 0, "compared bit"},
            {"weight", Kind::Double, 1.0, "prefer-one / prefer-zero weight"},
            {"start_f", Kind::DoubleList, Json::array(), "start frequencies of the dominating run"},
            {"start_g", Kind::DoubleList, Json::array(), "start frequencies of the dominated run"},
            {"steps", Kind::UInt, 5, "iterations compared"},
            {"mode", Kind::String, "exact", "exact laws or Monte Carlo", false, {"exact", "mc"}},
            {"replicas", Kind::UInt, 100000, "Monte Carlo replicas"},
            {"threads", Kind::UInt, 0, "worker cap"},
            {"level", Kind::Double, 1e-3, "Monte Carlo error level"},
        });
        t.push_back(std::move(dom));

        CommandDef advise{"advise", "Smallest K or mu keeping neutral bits in the middle range", {}};
        append(advise.options, {
            {"algo", Kind::String, "", "algorithm", true, {"cga", "pbil", "umda"}},
            {"budget", Kind::Double, 10000.0, "fitness evaluations F", true},
            {"dim", Kind::UInt, 100, "problem dimension D", true},
            {"gamma", Kind::Double, 0.25, "distance from 1/2"},
            {"delta", Kind::Double, 0.1, "failure probability"},
            {"lambda", Kind::Int, 1, "PBIL evaluations per iteration"},
            {"rho", Kind::Double, 1.0, "PBIL learning rate"},
        });
        t.push_back(std::move(advise));

        CommandDef mom{"moments-check", "One-step moments of the neutral frequency against closed forms", {}};
        append(mom.options, {
            {"algo", Kind::String, "", "algorithm", true, {"pbil", "umda", "cga"}},
            {"mu", Kind::Int, 2, "population size"},
            {"rho", Kind::Double, 1.0, "learning rate"},
            {"K", Kind::Int, 2, "cGA hypothetical population size"},
            {"p", Kind::Double, 0.5, "current frequency"},
            {"samples", Kind::UInt, 1000000, "one-step draws"},
        });
        t.push_back(std::move(mom));

        for (auto& c : t) append(c.options, common_options());
        return t;
    }();
    return table;
}

const CommandDef& command_def(const std::string& name) {
    for (const auto& c : commands()) {
        if (c.name == name) return c;
    }
    throw InvalidSpec("command: unknown subcommand '" + name + "'");
}

// ---------------------------------------------------------------- value conversion

Json convert_text(const OptionDef& def, const std::string& text) {
    const std::string flag = flag_of(def.name);
    auto bad = [&](const char* what) {
        return InvalidSpec(flag + ": expected " + what + ", got '" + text + "'");
    };
    switch (def.kind) {
    case Kind::Int: {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || ptr != text.data() + text.size()) throw bad("an integer");
        return v;
    }
    case Kind::UInt:
    case Kind::OptUInt: {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || ptr != text.data() + text.size()) throw bad("a nonnegative integer");
        return v;
    }
    case Kind::Double: {
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) throw bad("a number");
        return v;
    }
    case Kind::String:
        if (!def.choices.empty() &&
            std::find(def.choices.begin(), def.choices.end(), text) == def.choices.end()) {
            throw bad("one of the listed choices");
        }
        return text;
    default: throw std::logic_error("convert_text: list or flag kind");
    }
}

Json convert_list(const OptionDef& def, const std::vector<std::string>& items) {
    OptionDef element = def;
    element.kind = def.kind == Kind::DoubleList ? Kind::Double : Kind::UInt;
    Json out = Json::array();
    for (const auto& s : items) out.push_back(convert_text(element, s));
    return out;
}

/// Validates a config value and normalises its JSON type.
Json convert_json(const OptionDef& def, const Json& v) {
    const std::string key = def.name;
    auto bad = [&](const char* what) { return InvalidSpec(key + ": expected " + std::string(what)); };
    switch (def.kind) {
    case Kind::Int:
        if (!v.is_number_integer()) throw bad("an integer");
        return v.get<std::int64_t>();
    case Kind::OptUInt:
        if (v.is_null()) return nullptr;
        [[fallthrough]];
    case Kind::UInt:
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
            throw bad("a nonnegative integer");
        }
        return v.get<std::uint64_t>();
    case Kind::Double:
        if (!v.is_number()) throw bad("a number");
        return v.get<double>();
    case Kind::Bool:
        if (!v.is_boolean()) throw bad("true or false");
        return v;
    case Kind::String:
        if (!v.is_string()) throw bad("a string");
        if (!def.choices.empty() &&
            std::find(def.choices.begin(), def.choices.end(), v.get<std::string>()) == def.choices.end()) {
            throw bad("one of the listed choices");
        }
        return v;
    case Kind::DoubleList:
    case Kind::SizeList: {
        if (!v.is_array()) throw bad("an array");
        Json out = Json::array();
        OptionDef element = def;
        element.kind = def.kind == Kind::DoubleList ? Kind::Double : Kind::UInt;
        for (const auto& x : v) out.push_back(convert_json(element, x));
        return out;
    }
    }
    return v;
}

Json defaults_of(const CommandDef& def) {
    Json values = Json::object();
    for (const auto& o : def.options) values[o.name] = o.fallback;
    return values;
}

// ---------------------------------------------------------------- typed access

struct Values {
    const Json& j;
    [[nodiscard]] std::int64_t i64(const char* k) const { return j.at(k).get<std::int64_t>(); }
    [[nodiscard]] std::size_t uz(const char* k) const { return j.at(k).get<std::size_t>(); }
    [[nodiscard]] double dbl(const char* k) const { return j.at(k).get<double>(); }
    [[nodiscard]] bool flag(const char* k) const { return j.at(k).get<bool>(); }
    [[nodiscard]] std::string str(const char* k) const { return j.at(k).get<std::string>(); }
    [[nodiscard]] std::vector<double> doubles(const char* k) const { return j.at(k).get<std::vector<double>>(); }
    [[nodiscard]] std::optional<std::size_t> opt_uz(const char* k) const {
        if (j.at(k).is_null()) return std::nullopt;
        return j.at(k).get<std::size_t>();
    }
};

NeutralProcessSpec build_process(const Values& v) {
    const Algorithm a = parse_algorithm(v.str("algo"));
    NeutralProcessSpec s;
    switch (a) {
    case Algorithm::CGA: s = NeutralProcessSpec::cga(v.i64("K")); break;
    case Algorithm::UMDA: s = NeutralProcessSpec::umda(v.i64("mu")); break;
    case Algorithm::LambdaMMAS: s = NeutralProcessSpec::pbil(1, v.dbl("rho")); break;
    case Algorithm::CE: s = NeutralProcessSpec::ce(v.i64("mu"), v.doubles("rho_schedule")); break;
    case Algorithm::PBIL: s = NeutralProcessSpec::pbil(v.i64("mu"), v.dbl("rho")); break;
    }
    if (v.j.contains("margins") && v.flag("margins")) s = s.with_margins(v.uz("dim"));
    return s;
}

EdaSpec build_eda(const Values& v) {
    const Algorithm a = parse_algorithm(v.str("algo"));
    const std::size_t dim = v.uz("dim");
    EdaSpec s;
    switch (a) {
    case Algorithm::CGA: s = EdaSpec::cga(v.i64("K"), dim); break;
    case Algorithm::UMDA: s = EdaSpec::umda(v.i64("mu"), v.i64("lambda"), dim); break;
    case Algorithm::LambdaMMAS: s = EdaSpec::mmas(v.i64("lambda"), v.dbl("rho"), dim); break;
    case Algorithm::CE: s = EdaSpec::ce(v.i64("mu"), v.i64("lambda"), v.doubles("rho_schedule"), dim); break;
    case Algorithm::PBIL: s = EdaSpec::pbil(v.i64("mu"), v.i64("lambda"), v.dbl("rho"), dim); break;
    }
    s.margins = v.flag("margins");
    return s;
}

FitnessFunction fitness_by_name(const std::string& name, std::size_t bit, double weight) {
    if (name == "neutral") return FitnessFunction::neutral(bit);
    if (name == "onemax") return FitnessFunction::onemax();
    if (name == "leading-ones") return FitnessFunction::leading_ones();
    if (name == "prefer-one") return FitnessFunction::weak_prefer_one(bit, weight);
    if (name == "prefer-zero") return FitnessFunction::weak_prefer_zero(bit, weight);
    throw InvalidSpec("fitness: unknown fitness '" + name + "'");
}

StoppingRule build_stop(const Values& v) {
    StoppingRule s;
    s.kind = parse_stop_kind(v.str("stop"));
    if (v.j.contains("lo")) s.lo = v.dbl("lo");
    if (v.j.contains("hi")) s.hi = v.dbl("hi");
    if (v.j.contains("level")) s.level = v.dbl("level");
    if (v.j.contains("c")) s.c = v.dbl("c");
    if (v.j.contains("epsilon")) s.epsilon = v.dbl("epsilon");
    if (v.j.contains("horizon")) s.horizon = v.uz("horizon");
    return s;
}

// ---------------------------------------------------------------- handlers

struct Outcome {
    std::string line;
    Json full;
    std::function<void(std::ostream&)> csv;
};

std::string fmt(double x) { return format_double(x); }

std::string summary_line(const std::string& cmd, const HittingSummary& s) {
    std::string line = cmd + ": n=" + std::to_string(s.n) + " mean=" + fmt(s.mean) + " stderr=" + fmt(s.std_error) +
                       " median=" + fmt(s.median) + " budget_exhausted=" + std::to_string(s.budget_exhausted);
    if (s.flagged) line += " (flagged)";
    return line;
}

ExperimentConfig build_experiment(const Values& v) {
    ExperimentConfig c;
    if (v.str("model") == "eda") {
        EdaModel e;
        e.spec = build_eda(v);
        e.fitness = fitness_by_name(v.str("fitness"), v.uz("bit"), v.dbl("weight"));
        e.watch_bit = v.uz("watch_bit");
        c.model = std::move(e);
    } else {
        c.model = build_process(v);
    }
    c.stop = build_stop(v);
    c.replicas = v.uz("replicas");
    c.master_seed = v.j.at("seed").get<std::uint64_t>();
    c.budget = v.opt_uz("budget");
    c.threads = static_cast<unsigned>(v.uz("threads"));
    if (!v.str("sweep_param").empty()) {
        c.sweep = Sweep{parse_sweep_parameter(v.str("sweep_param")), v.doubles("sweep_values")};
    } else if (!v.doubles("sweep_values").empty()) {
        throw InvalidSpec("sweep_param: required when sweep_values is given");
    }
    return c;
}

Outcome do_simulate(const Values& v) {
    const ExperimentConfig config = build_experiment(v);
    Outcome o;
    o.full = Json{{"command", "simulate"}, {"config", to_json(config)}};
    if (config.sweep) {
        auto points = std::make_shared<std::vector<SweepPoint>>(run_sweep(config));
        Json arr = Json::array();
        for (const auto& p : *points) arr.push_back(Json{{"value", p.value}, {"summary", to_json(p.summary)}});
        o.full["points"] = std::move(arr);
        o.line = "simulate: " + std::to_string(points->size()) + " sweep points";
        for (const auto& p : *points) o.line += " " + fmt(p.value) + ":" + fmt(p.summary.mean);
        o.csv = [points](std::ostream& out) { write_sweep_csv(out, *points); };
        return o;
    }
    auto summary = std::make_shared<HittingSummary>(run_hitting_experiment(config));
    o.full["summary"] = to_json(*summary);
    o.line = summary_line("simulate", *summary);
    o.csv = [summary](std::ostream& out) { write_samples_csv(out, summary->samples); };
    return o;
}

struct ExactResult {
    HittingSolve solve;
    double expected = 0.0;
};

ExactResult exact_time(const std::string& algo, std::int64_t parameter, const StoppingRule& stop,
                       std::shared_ptr<TransitionKernel>* keep = nullptr) {
    auto kernel = std::make_shared<TransitionKernel>(algo == "cga" ? build_cga_kernel(parameter)
                                                                   : build_umda_kernel(parameter));
    const std::size_t start = half_state(*kernel);
    std::vector<bool> targets;
    if (stop.kind == StopKind::Absorption) {
        targets.assign(kernel->state_count(), false);
        for (std::size_t s : kernel->absorbing_states()) targets[s] = true;
    } else if (stop.kind == StopKind::ExitMiddle) {
        if (!(stop.lo < 0.5 && 0.5 < stop.hi)) throw DomainError("lo: the start 1/2 must lie strictly inside (lo, hi)");
        targets = outside_interval(*kernel, stop.lo, stop.hi);
    } else {
        throw InvalidSpec("stop: exact times support absorption and exit-middle");
    }
    ExactResult r;
    r.solve = solve_hitting_times(*kernel, targets, start);
    r.expected = r.solve.expected[start];
    if (keep) *keep = kernel;
    return r;
}

Outcome do_exact(const Values& v) {
    const std::string algo = v.str("algo");
    const std::int64_t parameter = algo == "cga" ? v.i64("K") : v.i64("mu");
    const StoppingRule stop = build_stop(v);
    stop.validate();
    std::shared_ptr<TransitionKernel> kernel;
    const ExactResult r = exact_time(algo, parameter, stop, &kernel);
    Outcome o;
    const std::string label = stop.kind == StopKind::Absorption ? "E[T]" : "E[T0]";
    o.line = label + "=" + fmt(r.expected);
    o.full = Json{{"command", "exact"},
                  {"algo", algo},
                  {algo == "cga" ? "K" : "mu", parameter},
                  {"stop", to_json(stop)},
                  {"expected_time", r.expected},
                  {"solve", to_json(r.solve)}};
    o.csv = [kernel](std::ostream& out) { kernel->write_csv(out); };
    return o;
}

Outcome do_scaling(const Values& v) {
    const std::string algo = v.str("algo");
    const std::vector<double> values = v.doubles("sweep_values");
    std::string param = v.str("sweep_param");
    if (param.empty()) param = algo == "cga" ? "K" : (algo == "umda" ? "mu" : "rho");
    auto points = std::make_shared<std::vector<std::pair<double, double>>>();

    if (v.str("method") == "exact") {
        if (algo == "pbil") throw InvalidSpec("method: no exact chain for PBIL; use --method mc");
        const std::string expected_param = algo == "cga" ? "K" : "mu";
        if (param != expected_param) throw InvalidSpec("sweep_param: exact " + algo + " sweeps " + expected_param);
        const StoppingRule stop = build_stop(v);
        stop.validate();
        for (double x : values) {
            if (!(x >= 2.0) || x != std::floor(x)) throw InvalidSpec("sweep_values: must be integers >= 2");
            points->emplace_back(x, exact_time(algo, static_cast<std::int64_t>(x), stop).expected);
        }
    } else {
        Json copy = v.j;
        copy["model"] = "process";
        copy["margins"] = false;
        copy["dim"] = 1;
        copy["lambda"] = 2;
        copy["rho_schedule"] = Json::array();
        copy["sweep_param"] = param;
        const ExperimentConfig config = build_experiment(Values{copy});
        for (const auto& p : run_sweep(config)) points->emplace_back(p.value, p.summary.mean);
    }
    const ScalingFit fit = fit_scaling_law(*points);
    Outcome o;
    Json arr = Json::array();
    for (const auto& [x, y] : *points) arr.push_back(Json{{"value", x}, {"mean", y}});
    o.full = Json{{"command", "scaling"}, {"algo", algo}, {"parameter", param}, {"method", v.str("method")},
                  {"points", std::move(arr)}, {"fit", to_json(fit)}};
    o.line = "scaling: exponent=" + fmt(fit.exponent) + " multiplier=" + fmt(fit.multiplier) +
             " r_squared=" + fmt(fit.r_squared);
    o.csv = [points](std::ostream& out) {
        out << "value,mean\n";
        for (const auto& [x, y] : *points) out << format_double(x) << ',' << format_double(y) << '\n';
    };
    return o;
}

Outcome do_tailcheck(const Values& v) {
    Json copy = v.j;
    copy["rho_schedule"] = Json::array();
    copy["margins"] = false;
    copy["dim"] = 1;
    const NeutralProcessSpec spec = build_process(Values{copy});
    spec.validate();
    std::vector<std::size_t> horizons = v.j.at("horizons").get<std::vector<std::size_t>>();
    if (horizons.empty()) {
        const double scale = spec.kind == NeutralProcessSpec::Kind::CGA
                                 ? static_cast<double>(spec.K * spec.K)
                                 : std::ceil(static_cast<double>(spec.mu) / (spec.rho * spec.rho));
        const auto top = static_cast<std::size_t>(10.0 * scale);
        for (std::size_t t = 1; t <= top; ++t) horizons.push_back(t);
    }
    auto report = std::make_shared<TailReport>(validate_tail_bound(spec, v.dbl("gamma"), horizons, v.uz("replicas"),
                                                                   v.j.at("seed").get<std::uint64_t>(),
                                                                   static_cast<unsigned>(v.uz("threads"))));
    std::size_t violations = 0;
    for (const auto& e : report->entries) violations += e.violated ? 1 : 0;
    Outcome o;
    o.full = Json{{"command", "tailcheck"}, {"process", to_json(spec)}, {"report", to_json(*report)}};
    o.line = "tailcheck: " + std::to_string(violations) + " violations over " +
             std::to_string(report->entries.size()) + " horizons";
    o.csv = [report](std::ostream& out) { write_tail_csv(out, *report); };
    return o;
}

Outcome do_runaway(const Values& v) {
    auto summary = std::make_shared<HittingSummary>(
        runaway_campaign(v.i64("mu"), v.dbl("rho"), v.dbl("c"), v.dbl("epsilon"), v.uz("replicas"),
                         v.j.at("seed").get<std::uint64_t>(), static_cast<unsigned>(v.uz("threads")),
                         v.opt_uz("budget")));
    Outcome o;
    o.full = Json{{"command", "runaway"},
                  {"mu", v.i64("mu")},
                  {"rho", v.dbl("rho")},
                  {"c", v.dbl("c")},
                  {"epsilon", v.dbl("epsilon")},
                  {"summary", to_json(*summary)}};
    o.line = summary_line("runaway", *summary);
    o.csv = [summary](std::ostream& out) { write_samples_csv(out, summary->samples); };
    return o;
}

std::optional<FrequencyVector> parse_start(const std::vector<double>& xs, const EdaSpec& spec, const char* key) {
    if (xs.empty()) return std::nullopt;
    if (xs.size() != spec.dim) throw InvalidSpec(std::string(key) + ": needs one frequency per bit");
    for (double x : xs) {
        if (!(x >= 0.0 && x <= 1.0)) throw InvalidSpec(std::string(key) + ": frequencies must lie in [0, 1]");
    }
    const std::int64_t den = spec.grid_denominator();
    if (den == 0) return FrequencyVector::continuous(xs);
    std::vector<std::int64_t> num;
    for (double x : xs) {
        const double scaled = x * static_cast<double>(den);
        if (std::abs(scaled - std::round(scaled)) > 1e-9) {
            throw InvalidSpec(std::string(key) + ": frequency " + format_double(x) + " is not a multiple of 1/" +
                              std::to_string(den));
        }
        num.push_back(static_cast<std::int64_t>(std::llround(scaled)));
    }
    return FrequencyVector::grid(den, std::move(num));
}

Outcome do_dominance(const Values& v) {
    const EdaSpec spec = build_eda(v);
    spec.validate();
    DominanceSide f{spec, fitness_by_name(v.str("fitness"), v.uz("bit"), v.dbl("weight")),
                    parse_start(v.doubles("start_f"), spec, "start_f")};
    DominanceSide g{spec, fitness_by_name(v.str("fitness_g"), v.uz("bit"), v.dbl("weight")),
                    parse_start(v.doubles("start_g"), spec, "start_g")};
    DominanceOptions opt;
    opt.steps = v.uz("steps");
    opt.mode = v.str("mode") == "mc" ? DominanceMode::MonteCarlo : DominanceMode::Exact;
    opt.bit = v.uz("bit");
    opt.replicas = v.uz("replicas");
    opt.seed = v.j.at("seed").get<std::uint64_t>();
    opt.threads = static_cast<unsigned>(v.uz("threads"));
    opt.level = v.dbl("level");
    auto steps = std::make_shared<std::vector<StepReport>>(multistep_dominance_check(f, g, opt));

    std::optional<std::size_t> first_violation;
    double worst = 0.0;
    for (const auto& s : *steps) {
        worst = std::max(worst, s.verdict.max_cdf_violation);
        if (!s.verdict.dominates && !first_violation) first_violation = s.t;
    }
    Outcome o;
    o.full = Json{{"command", "dominance"}, {"spec", to_json(spec)}, {"fitness_f", to_json(f.fitness)},
                  {"fitness_g", to_json(g.fitness)}, {"mode", v.str("mode")}, {"steps", to_json(*steps)}};
    o.line = first_violation ? "dominance: violated at t=" + std::to_string(*first_violation)
                             : "dominance: holds for t<=" + std::to_string(opt.steps);
    o.line += " max_cdf_violation=" + fmt(worst);
    o.csv = [steps](std::ostream& out) { write_steps_csv(out, *steps); };
    return o;
}

Outcome do_advise(const Values& v) {
    AdviceRequest req;
    req.algorithm = parse_algorithm(v.str("algo"));
    req.budget_evals = v.dbl("budget");
    req.dim = v.uz("dim");
    req.gamma = v.dbl("gamma");
    req.delta = v.dbl("delta");
    req.lambda = v.i64("lambda");
    req.rho = v.dbl("rho");
    const Advice a = advise_parameters(req);
    const std::string name = req.algorithm == Algorithm::CGA ? "K" : "mu";
    Outcome o;
    o.line = name + "=" + std::to_string(a.value);
    o.full = Json{{"command", "advise"}, {"algo", v.str("algo")}, {"parameter", name}, {"advice", to_json(a)}};
    o.csv = [name, a](std::ostream& out) {
        out << "parameter,value,raw_bound,iterations\n"
            << name << ',' << a.value << ',' << format_double(a.raw_bound) << ',' << format_double(a.iterations)
            << '\n';
    };
    return o;
}

Outcome do_moments(const Values& v) {
    const std::string algo = v.str("algo");
    const double p = v.dbl("p");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidSpec("p: must lie in [0, 1]");
    const std::size_t n = v.uz("samples");
    if (n < 2) throw InvalidSpec("samples: need at least 2");
    RandomStream rng(v.j.at("seed").get<std::uint64_t>(), 0);
    std::vector<double> xs(n);
    MomentTriple theory;
    if (algo == "cga") {
        const std::int64_t K = v.i64("K");
        NeutralProcessSpec::cga(K).validate();
        const std::int64_t den = 2 * K;
        const double scaled = p * static_cast<double>(den);
        if (std::abs(scaled - std::round(scaled)) > 1e-9) {
            throw InvalidSpec("p: must be a multiple of 1/(2K) for the cGA");
        }
        const GridValue g{std::llround(scaled), den};
        theory = cga_conditional_moments(p, K);
        for (auto& x : xs) x = cga_neutral_step(g, K, rng).value();
    } else {
        const std::int64_t mu = v.i64("mu");
        const double rho = algo == "umda" ? 1.0 : v.dbl("rho");
        NeutralProcessSpec::pbil(mu, rho).validate();
        theory = pbil_conditional_moments(p, mu, rho);
        for (auto& x : xs) x = pbil_neutral_step(p, mu, rho, rng);
    }
    const MomentTriple emp = empirical_moments(xs, p);
    long double m4 = 0.0L;
    for (double x : xs) {
        const long double d = static_cast<long double>(x) - emp.mean;
        m4 += d * d * d * d;
    }
    const double fourth = static_cast<double>(m4 / static_cast<long double>(n));
    const double dn = static_cast<double>(n);
    const double se_mean = std::sqrt(theory.variance / dn);
    const double se_var = std::sqrt(std::max(0.0, fourth - emp.variance * emp.variance) / dn);
    const double z_mean = se_mean > 0.0 ? (emp.mean - theory.mean) / se_mean : (emp.mean == theory.mean ? 0.0 : INFINITY);
    const double z_var =
        se_var > 0.0 ? (emp.variance - theory.variance) / se_var : (emp.variance == theory.variance ? 0.0 : INFINITY);
    const bool ok = std::abs(z_mean) <= 4.0 && std::abs(z_var) <= 4.0;

    Outcome o;
    auto triple = [](const MomentTriple& m) {
        return Json{{"mean", m.mean}, {"variance", m.variance}, {"third_central", m.third_central}};
    };
    o.full = Json{{"command", "moments-check"}, {"algo", algo}, {"p", p}, {"samples", n},
                  {"closed_form", triple(theory)}, {"empirical", triple(emp)}, {"z_mean", z_mean},
                  {"z_variance", z_var}, {"within_4se", ok}};
    o.line = "moments-check: z_mean=" + fmt(z_mean) + " z_variance=" + fmt(z_var) +
             (ok ? " within 4 standard errors" : " OUTSIDE 4 standard errors");
    o.csv = [theory, emp, z_mean, z_var](std::ostream& out) {
        out << "quantity,closed_form,empirical,z\n";
        out << "mean," << format_double(theory.mean) << ',' << format_double(emp.mean) << ',' << format_double(z_mean)
            << '\n';
        out << "variance," << format_double(theory.variance) << ',' << format_double(emp.variance) << ','
            << format_double(z_var) << '\n';
        out << "third_central," << format_double(theory.third_central) << ',' << format_double(emp.third_central)
            << ",\n";
    };
    return o;
}

Outcome dispatch(const Invocation& inv) {
    const Values v{inv.values};
    if (inv.command == "simulate") return do_simulate(v);
    if (inv.command == "exact") return do_exact(v);
    if (inv.command == "scaling") return do_scaling(v);
    if (inv.command == "tailcheck") return do_tailcheck(v);
    if (inv.command == "runaway") return do_runaway(v);
    if (inv.command == "dominance") return do_dominance(v);
    if (inv.command == "advise") return do_advise(v);
    if (inv.command == "moments-check") return do_moments(v);
    throw InvalidSpec("command: unknown subcommand '" + inv.command + "'");
}

/// Prefixes a diagnostic with the config line of the field it names.
std::string locate(const std::string& message, const std::string& text, const std::set<std::string>& from_config) {
    const auto colon = message.find(':');
    if (colon == std::string::npos || text.empty()) return message;
    std::string field = message.substr(0, colon);
    if (field.rfind("--", 0) == 0) field = field.substr(2);
    for (auto& ch : field) {
        if (ch == '-') ch = '_';
    }
    if (from_config.count(field) == 0) return message;
    const std::size_t line = line_of_key(text, field);
    return line > 0 ? "line " + std::to_string(line) + ": " + message : message;
}

} // namespace

std::vector<std::string> subcommands() {
    std::vector<std::string> out;
    for (const auto& c : commands()) out.push_back(c.name);
    return out;
}

Json invocation_to_json(const Invocation& inv) {
    Json j{{"command", inv.command}};
    for (const auto& [k, val] : inv.values.items()) j[k] = val;
    return j;
}

namespace {

Invocation from_config(const CommandDef& def, const std::string& text, std::set<std::string>& present) {
    const Json doc = parse_json_text(text);
    if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object", 1);
    Invocation inv{def.name, defaults_of(def)};
    for (const auto& [key, val] : doc.items()) {
        const std::size_t line = line_of_key(text, key);
        if (key == "command") {
            if (!val.is_string() || val.get<std::string>() != def.name) {
                throw ConfigError("command: config is for '" + (val.is_string() ? val.get<std::string>() : "?") +
                                      "', not '" + def.name + "'",
                                  line);
            }
            continue;
        }
        const auto it = std::find_if(def.options.begin(), def.options.end(),
                                     [&](const OptionDef& o) { return o.name == key; });
        if (it == def.options.end()) throw ConfigError(key + ": unknown key for " + def.name, line);
        try {
            inv.values[key] = convert_json(*it, val);
        } catch (const InvalidSpec& e) {
            throw ConfigError(e.what(), line);
        }
        present.insert(key);
    }
    return inv;
}

} // namespace

Invocation invocation_from_config(const std::string& command, const std::string& text) {
    std::set<std::string> present;
    return from_config(command_def(command), text, present);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"driftlab: genetic drift in estimation-of-distribution algorithms"};
    app.require_subcommand(1);

    struct Bound {
        const CommandDef* def;
        CLI::App* sub;
        std::map<std::string, std::string> scalars;
        std::map<std::string, std::vector<std::string>> lists;
        std::map<std::string, bool> flags;
        std::map<std::string, CLI::Option*> handles;
        std::string config_path;
        bool dump = false;
    };
    std::vector<std::unique_ptr<Bound>> bound;
    for (const auto& def : commands()) {
        auto b = std::make_unique<Bound>();
        b->def = &def;
        b->sub = app.add_subcommand(def.name, def.help);
        b->sub->add_option("--config", b->config_path, "JSON config file");
        b->sub->add_flag("--dump-config", b->dump, "print the resolved config and exit");
        for (const auto& o : def.options) {
            const std::string flag = flag_of(o.name);
            std::string help = o.help;
            if (!o.choices.empty()) {
                help += " {";
                bool first = true;
                for (const auto& ch : o.choices) {
                    if (ch.empty()) continue;
                    help += (first ? "" : ",") + ch;
                    first = false;
                }
                help += "}";
            }
            if (o.required) help += " (required)";
            CLI::Option* opt = nullptr;
            if (o.kind == Kind::Bool) {
                opt = b->sub->add_flag(flag, b->flags[o.name], help);
            } else if (o.kind == Kind::DoubleList || o.kind == Kind::SizeList) {
                opt = b->sub->add_option(flag, b->lists[o.name], help)->delimiter(',');
            } else {
                opt = b->sub->add_option(flag, b->scalars[o.name], help);
            }
            b->handles[o.name] = opt;
        }
        bound.push_back(std::move(b));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        for (const auto& b : bound) {
            if (b->sub->parsed()) {
                out.flush();
            }
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 1;
    }

    Bound* active = nullptr;
    for (auto& b : bound) {
        if (b->sub->parsed()) active = b.get();
    }
    if (active == nullptr) {
        err << "error: a subcommand is required\n";
        return 1;
    }
    const CommandDef& def = *active->def;

    std::string text;
    std::set<std::string> config_keys;
    Invocation inv{def.name, defaults_of(def)};
    try {
        if (!active->config_path.empty()) {
            std::ifstream in(active->config_path);
            if (!in) throw InvalidSpec("config: cannot read '" + active->config_path + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            text = ss.str();
            inv = from_config(def, text, config_keys);
        }
        std::set<std::string> present = config_keys;
        for (const auto& o : def.options) {
            CLI::Option* opt = active->handles.at(o.name);
            if (opt->count() == 0) continue;
            present.insert(o.name);
            config_keys.erase(o.name);
            if (o.kind == Kind::Bool) inv.values[o.name] = active->flags.at(o.name);
            else if (o.kind == Kind::DoubleList || o.kind == Kind::SizeList)
                inv.values[o.name] = convert_list(o, active->lists.at(o.name));
            else inv.values[o.name] = convert_text(o, active->scalars.at(o.name));
        }
        for (const auto& o : def.options) {
            if (o.required && present.count(o.name) == 0) {
                throw InvalidSpec(flag_of(o.name) + ": missing required option");
            }
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidSpec& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    const std::string output = inv.values.at("output").get<std::string>();
    std::ofstream file;
    if (!output.empty()) {
        file.open(output, std::ios::binary | std::ios::trunc);
        if (!file) {
            err << "error: output: cannot open '" << output << "' for writing\n";
            return 1;
        }
    }

    if (active->dump) {
        const std::string doc = invocation_to_json(inv).dump(2) + "\n";
        if (file.is_open()) file << doc;
        else out << doc;
        return 0;
    }

    try {
        const Outcome o = dispatch(inv);
        if (file.is_open()) {
            if (inv.values.at("format").get<std::string>() == "csv") o.csv(file);
            else file << o.full.dump(2) << "\n";
            file.flush();
            if (!file) {
                err << "error: output: write to '" << output << "' failed\n";
                return 1;
            }
        }
        out << o.line << "\n";
        return 0;
    } catch (const ExperimentFailed& e) {
        err << "experiment failed: " << e.what() << "\n";
        return 2;
    } catch (const SingularSystem& e) {
        err << "experiment failed: " << e.what() << "\n";
        return 2;
    } catch (const InfeasibleSize& e) {
        err << "error: " << locate(e.what(), text, config_keys) << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << locate(e.what(), text, config_keys) << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        err << "error: " << locate(e.what(), text, config_keys) << "\n";
        return 1;
    }
}

} // namespace driftlab::cli
