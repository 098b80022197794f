#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "ddmpc/runner.hpp"

namespace ddmpc {

/// Config file cannot be parsed or fails validation; message carries the
/// offending field path.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parses and validates a JSON experiment description. Unknown keys are
/// rejected. "auto" excitation sinusoids expand to n^2+nm default dither
/// entries with seed-derived phases.
/// seed_override, when set, replaces the config seed before any
/// seed-derived defaults (dither phases) are generated.
ExperimentConfig parse_config(
    const std::string& text,
    std::optional<std::uint64_t> seed_override = std::nullopt);

/// Canonical JSON form; parse_config(serialize_config(cfg)) reproduces cfg.
std::string serialize_config(const ExperimentConfig& cfg);

/// Bundled 4-state CSTR-like demo fixture (two coupled linearized tanks).
std::string cstr_demo_config();

}  // namespace ddmpc
