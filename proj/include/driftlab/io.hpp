#pragma once

/// @file io.hpp
/// @brief JSON and CSV encodings of configs and results.
///
/// JSON numbers use the shortest representation that parses back to the same
/// double, so every emitted value round-trips exactly.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "driftlab/dominance.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/lab.hpp"
#include "driftlab/markov.hpp"

namespace driftlab {

using Json = nlohmann::ordered_json;

/// Validation failure in a config document; `line` is 1-based, 0 if unknown.
class ConfigError : public InvalidSpec {
  public:
    ConfigError(const std::string& message, std::size_t line)
        : InvalidSpec(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
    [[nodiscard]] std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

/// Parses JSON text; syntax errors become ConfigError with the line number.
Json parse_json_text(std::string_view text);

/// Line of the first occurrence of "key" as an object key, 0 if absent.
std::size_t line_of_key(std::string_view text, std::string_view key);

/// Shortest round-trip decimal of x, always with a '.' or exponent ("2.0").
std::string format_double(double x);

Json to_json(const StoppingRule& stop);
StoppingRule stopping_rule_from_json(const Json& j);

Json to_json(const EdaSpec& spec);
EdaSpec eda_spec_from_json(const Json& j);

Json to_json(const NeutralProcessSpec& spec);
NeutralProcessSpec neutral_spec_from_json(const Json& j);

Json to_json(const FitnessFunction& f);
FitnessFunction fitness_from_json(const Json& j);

/// Nested experiment config. Unknown keys are rejected with InvalidSpec
/// naming the key. `threads` is not serialized: it never changes results.
Json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const Json& j);

/// Summary without the per-replica samples.
Json to_json(const HittingSummary& summary);
Json to_json(const ScalingFit& fit);
Json to_json(const TailReport& report);
Json to_json(const Advice& advice);
Json to_json(const HittingSolve& solve);
Json to_json(const std::vector<StepReport>& steps);

/// Header replica_index,stopping_time,terminal_frequency,trigger.
void write_samples_csv(std::ostream& out, const std::vector<HittingRecord>& samples);

void write_tail_csv(std::ostream& out, const TailReport& report);
void write_steps_csv(std::ostream& out, const std::vector<StepReport>& steps);
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);

} // namespace driftlab
