#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "swarmrelax/harness.hpp"

namespace swarmrelax {

// Invalid user input (malformed JSON, unknown key, invariant violation).
// Carries the offending field path when one exists. The CLI maps this to
// exit 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, std::string path = "")
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct RunConfig {
    SweepSpec sweep;          // scenario, mode, eps_list, seed, jobs, scales, k/l, step policies
    ModelParams model;        // "morse" and "vision" keys
    bool model_given = false; // either key explicitly present (overrides the fixture's params)
    double epsilon = 1e-3;    // single-run subcommands
    std::string out_dir = "out";
    std::string log_level = "info";
};

RunConfig default_config();

// Parses and validates a full config document. Every key is checked against
// the schema; unknown keys and type mismatches raise ConfigError with the
// dotted field path, malformed JSON raises ConfigError with line/column.
RunConfig parse_config_text(const std::string& text, const std::string& source_name);
RunConfig parse_config_file(const std::string& path);

// Applies a partial document on top of an existing config (flag overrides).
// Same schema and validation as parse_config_text.
void apply_config_json(const nlohmann::json& doc, RunConfig& config);

// The effective configuration, defaults filled in and derived quantities
// (e.g. the vision normalizer) included.
nlohmann::ordered_json config_echo(const RunConfig& config);

Scenario scenario_from_name(const std::string& name);
Mode mode_from_name(const std::string& name);

}  // namespace swarmrelax
