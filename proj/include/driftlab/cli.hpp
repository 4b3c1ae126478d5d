#pragma once

/// @file cli.hpp
/// @brief The `driftlab` command line: subcommands, config files and output.
///
/// Every option of a subcommand is also a key of its JSON config file
/// (dashes become underscores). Values given as flags override the file.
///
/// Exit status: 0 success, 1 invalid input, 2 experiment failure.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace driftlab::cli {

using Json = nlohmann::ordered_json;

/// A resolved invocation: subcommand plus the value of every option.
struct Invocation {
    std::string command;
    Json values = Json::object();

    friend bool operator==(const Invocation& a, const Invocation& b) {
        return a.command == b.command && a.values == b.values;
    }
};

/// Config document written by --dump-config.
Json invocation_to_json(const Invocation& inv);

/// Parses config text for `command`, filling defaults for absent keys.
/// Throws ConfigError with the line of the offending key.
Invocation invocation_from_config(const std::string& command, const std::string& text);

std::vector<std::string> subcommands();

/// Entry point; returns the exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace driftlab::cli
