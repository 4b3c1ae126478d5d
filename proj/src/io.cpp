#include "driftlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <initializer_list>
#include <ostream>

namespace driftlab {

Json parse_json_text(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        const std::size_t end = std::min(e.byte, text.size());
        const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(end), '\n'));
        std::string what = e.what();
        if (const auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
        throw ConfigError("malformed JSON: " + what, line);
    }
}

std::size_t line_of_key(std::string_view text, std::string_view key) {
    const std::string needle = "\"" + std::string(key) + "\"";
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string_view::npos) {
        std::size_t after = pos + needle.size();
        while (after < text.size() && (text[after] == ' ' || text[after] == '\t' || text[after] == '\r' ||
                                       text[after] == '\n')) {
            ++after;
        }
        if (after < text.size() && text[after] == ':') {
            return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
        }
        pos = after;
    }
    return 0;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    std::string s = buf;
    if (s.find_first_of(".en") == std::string::npos) s += ".0";
    return s;
}

namespace {

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw InvalidSpec(std::string(where) + ": expected a JSON object");
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw InvalidSpec(item.key() + ": unknown key in " + std::string(where));
        }
    }
}

template <class T>
T field(const Json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        if constexpr (std::is_unsigned_v<T>) {
            if (it->is_number_integer() && it->template get<long long>() < 0) throw InvalidSpec("negative");
        }
        if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!it->is_number_integer()) throw InvalidSpec("not an integer");
        }
        return it->template get<T>();
    } catch (const std::exception&) {
        throw InvalidSpec(std::string(key) + ": wrong type or out of range");
    }
}

std::optional<std::size_t> optional_size(const Json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return field<std::size_t>(j, key, 0);
}

} // namespace

Json to_json(const StoppingRule& stop) {
    return Json{{"kind", to_string(stop.kind)}, {"lo", stop.lo},           {"hi", stop.hi},
                {"level", stop.level},          {"c", stop.c},             {"epsilon", stop.epsilon},
                {"horizon", stop.horizon}};
}

StoppingRule stopping_rule_from_json(const Json& j) {
    check_keys(j, {"kind", "lo", "hi", "level", "c", "epsilon", "horizon"}, "stop");
    StoppingRule s;
    s.kind = parse_stop_kind(field<std::string>(j, "kind", "absorption"));
    s.lo = field(j, "lo", s.lo);
    s.hi = field(j, "hi", s.hi);
    s.level = field(j, "level", s.level);
    s.c = field(j, "c", s.c);
    s.epsilon = field(j, "epsilon", s.epsilon);
    s.horizon = field(j, "horizon", s.horizon);
    return s;
}

Json to_json(const EdaSpec& spec) {
    return Json{{"algorithm", to_string(spec.algorithm)},
                {"mu", spec.mu},
                {"lambda", spec.lambda},
                {"rho", spec.rho},
                {"rho_schedule", spec.rho_schedule},
                {"K", spec.K},
                {"margins", spec.margins},
                {"dim", spec.dim}};
}

EdaSpec eda_spec_from_json(const Json& j) {
    check_keys(j, {"algorithm", "mu", "lambda", "rho", "rho_schedule", "K", "margins", "dim"}, "spec");
    EdaSpec s;
    s.algorithm = parse_algorithm(field<std::string>(j, "algorithm", "pbil"));
    s.mu = field(j, "mu", s.mu);
    s.lambda = field(j, "lambda", s.lambda);
    s.rho = field(j, "rho", s.rho);
    s.rho_schedule = field(j, "rho_schedule", s.rho_schedule);
    s.K = field(j, "K", s.K);
    s.margins = field(j, "margins", s.margins);
    s.dim = field(j, "dim", s.dim);
    if (s.algorithm == Algorithm::UMDA) s.rho = 1.0;
    if (s.algorithm == Algorithm::LambdaMMAS) s.mu = 1;
    return s;
}

Json to_json(const NeutralProcessSpec& spec) {
    Json j{{"kind", spec.kind == NeutralProcessSpec::Kind::CGA ? "cga" : "pbil"},
           {"mu", spec.mu},
           {"rho", spec.rho},
           {"rho_schedule", spec.rho_schedule},
           {"K", spec.K}};
    j["margins_dim"] = spec.margins_dim ? Json(*spec.margins_dim) : Json(nullptr);
    return j;
}

NeutralProcessSpec neutral_spec_from_json(const Json& j) {
    check_keys(j, {"type", "kind", "mu", "rho", "rho_schedule", "K", "margins_dim"}, "model");
    NeutralProcessSpec s;
    const std::string kind = field<std::string>(j, "kind", "pbil");
    if (kind == "cga") s.kind = NeutralProcessSpec::Kind::CGA;
    else if (kind == "pbil") s.kind = NeutralProcessSpec::Kind::PBIL;
    else throw InvalidSpec("kind: expected pbil or cga, got '" + kind + "'");
    s.mu = field(j, "mu", s.mu);
    s.rho = field(j, "rho", s.rho);
    s.rho_schedule = field(j, "rho_schedule", s.rho_schedule);
    s.K = field(j, "K", s.K);
    s.margins_dim = optional_size(j, "margins_dim");
    return s;
}

Json to_json(const FitnessFunction& f) {
    Json j{{"kind", to_string(f.kind())}};
    switch (f.kind()) {
    case FitnessKind::Neutral: j["bit"] = f.bit(); break;
    case FitnessKind::WeakPreferOne:
    case FitnessKind::WeakPreferZero:
        j["bit"] = f.bit();
        j["weight"] = f.weight();
        break;
    case FitnessKind::Custom: j["name"] = f.name(); break;
    default: break;
    }
    return j;
}

FitnessFunction fitness_from_json(const Json& j) {
    check_keys(j, {"kind", "bit", "weight"}, "fitness");
    const std::string kind = field<std::string>(j, "kind", "neutral");
    const auto bit = field<std::size_t>(j, "bit", 0);
    const double weight = field(j, "weight", 1.0);
    if (kind == "neutral") return FitnessFunction::neutral(bit);
    if (kind == "onemax") return FitnessFunction::onemax();
    if (kind == "leading-ones") return FitnessFunction::leading_ones();
    if (kind == "prefer-one") return FitnessFunction::weak_prefer_one(bit, weight);
    if (kind == "prefer-zero") return FitnessFunction::weak_prefer_zero(bit, weight);
    throw InvalidSpec("fitness.kind: unknown fitness '" + kind + "'");
}

Json to_json(const ExperimentConfig& config) {
    Json model;
    if (const auto* p = std::get_if<NeutralProcessSpec>(&config.model)) {
        model = Json{{"type", "process"}};
        model.update(to_json(*p));
    } else {
        const auto& e = std::get<EdaModel>(config.model);
        model = Json{{"type", "eda"}, {"spec", to_json(e.spec)}, {"fitness", to_json(e.fitness)},
                     {"watch_bit", e.watch_bit}};
    }
    Json j{{"model", model},
           {"stop", to_json(config.stop)},
           {"replicas", config.replicas},
           {"master_seed", config.master_seed}};
    j["budget"] = config.budget ? Json(*config.budget) : Json(nullptr);
    if (config.sweep) {
        j["sweep"] = Json{{"parameter", to_string(config.sweep->parameter)}, {"values", config.sweep->values}};
    } else {
        j["sweep"] = nullptr;
    }
    return j;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
    check_keys(j, {"model", "stop", "replicas", "master_seed", "budget", "sweep"}, "config");
    ExperimentConfig c;
    if (const auto it = j.find("model"); it != j.end()) {
        const std::string type = it->is_object() ? field<std::string>(*it, "type", "process") : "";
        if (type == "process") {
            c.model = neutral_spec_from_json(*it);
        } else if (type == "eda") {
            check_keys(*it, {"type", "spec", "fitness", "watch_bit"}, "model");
            EdaModel e;
            e.spec = eda_spec_from_json(it->value("spec", Json::object()));
            e.fitness = fitness_from_json(it->value("fitness", Json::object()));
            e.watch_bit = field<std::size_t>(*it, "watch_bit", 0);
            c.model = std::move(e);
        } else {
            throw InvalidSpec("type: model type must be process or eda");
        }
    }
    if (const auto it = j.find("stop"); it != j.end()) c.stop = stopping_rule_from_json(*it);
    c.replicas = field(j, "replicas", c.replicas);
    c.master_seed = field(j, "master_seed", c.master_seed);
    c.budget = optional_size(j, "budget");
    if (const auto it = j.find("sweep"); it != j.end() && !it->is_null()) {
        check_keys(*it, {"parameter", "values"}, "sweep");
        Sweep s;
        s.parameter = parse_sweep_parameter(field<std::string>(*it, "parameter", "K"));
        s.values = field(*it, "values", s.values);
        c.sweep = std::move(s);
    }
    return c;
}

Json to_json(const HittingSummary& s) {
    Json j{{"n", s.n},
           {"mean", s.mean},
           {"stderr", s.std_error},
           {"ci95", {s.ci95_lo, s.ci95_hi}},
           {"median", s.median},
           {"budget_exhausted", s.budget_exhausted},
           {"flagged", s.flagged}};
    if (s.certification_bias) j["certification_bias"] = *s.certification_bias;
    return j;
}

Json to_json(const ScalingFit& fit) {
    return Json{{"exponent", fit.exponent}, {"multiplier", fit.multiplier}, {"r_squared", fit.r_squared}};
}

Json to_json(const TailReport& report) {
    Json entries = Json::array();
    for (const auto& e : report.entries) {
        Json x{{"horizon", e.horizon},   {"bound", e.bound},     {"empirical", e.empirical},
               {"lower99", e.lower99}, {"upper99", e.upper99}};
        x["exact"] = e.exact ? Json(*e.exact) : Json(nullptr);
        x["violated"] = e.violated;
        entries.push_back(std::move(x));
    }
    return Json{{"gamma", report.gamma},
                {"replicas", report.replicas},
                {"any_violation", report.any_violation()},
                {"entries", std::move(entries)}};
}

Json to_json(const Advice& advice) {
    return Json{{"value", advice.value}, {"raw_bound", advice.raw_bound}, {"iterations", advice.iterations}};
}

Json to_json(const HittingSolve& solve) {
    return Json{{"expected", solve.expected}, {"residual", solve.residual}, {"used_tridiagonal", solve.used_tridiagonal}};
}

Json to_json(const std::vector<StepReport>& steps) {
    Json out = Json::array();
    for (const auto& s : steps) {
        out.push_back(Json{{"t", s.t},
                           {"dominates", s.verdict.dominates},
                           {"max_cdf_violation", s.verdict.max_cdf_violation},
                           {"witness", s.verdict.witness},
                           {"slack", s.slack}});
    }
    return out;
}

namespace {

std::string g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

void write_samples_csv(std::ostream& out, const std::vector<HittingRecord>& samples) {
    out << "replica_index,stopping_time,terminal_frequency,trigger\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& r = samples[i];
        out << i << ',' << r.stopping_time << ',' << g17(r.terminal_frequency) << ',' << to_string(r.trigger)
            << '\n';
    }
}

void write_tail_csv(std::ostream& out, const TailReport& report) {
    out << "horizon,bound,empirical,lower99,upper99,exact,violated\n";
    for (const auto& e : report.entries) {
        out << e.horizon << ',' << g17(e.bound) << ',' << g17(e.empirical) << ',' << g17(e.lower99) << ','
            << g17(e.upper99) << ',' << (e.exact ? g17(*e.exact) : "") << ',' << (e.violated ? 1 : 0) << '\n';
    }
}

void write_steps_csv(std::ostream& out, const std::vector<StepReport>& steps) {
    out << "t,dominates,max_cdf_violation,witness,slack\n";
    for (const auto& s : steps) {
        out << s.t << ',' << (s.verdict.dominates ? 1 : 0) << ',' << g17(s.verdict.max_cdf_violation) << ','
            << g17(s.verdict.witness) << ',' << g17(s.slack) << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
    out << "value,n,mean,stderr,ci95_lo,ci95_hi,median,budget_exhausted\n";
    for (const auto& p : points) {
        const auto& s = p.summary;
        out << g17(p.value) << ',' << s.n << ',' << g17(s.mean) << ',' << g17(s.std_error) << ',' << g17(s.ci95_lo)
            << ',' << g17(s.ci95_hi) << ',' << g17(s.median) << ',' << s.budget_exhausted << '\n';
    }
}

} // namespace driftlab
