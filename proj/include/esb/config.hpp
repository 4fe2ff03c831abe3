#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "esb/sim.hpp"

namespace esb {

/**
Flat configuration text: one `key = value` per line, `#` starts a comment.
Unknown keys and malformed values throw ConfigError. Numbers accept a `pi`
suffix (`2.75pi`); optional fields accept `auto`.
*/
SimConfig parse_config(std::string_view text, SimConfig base = {});
SimConfig load_config(const std::string& path, SimConfig base = {});

/// Apply one `key=value` assignment.
void apply_override(SimConfig& cfg, std::string_view assignment);
void set_config_value(SimConfig& cfg, std::string_view key, std::string_view value);

/// Every key with its current value, in documentation order; re-parses to the same config.
std::vector<std::pair<std::string, std::string>> echo_config(const SimConfig& cfg);

std::vector<std::string> config_keys();

/// Decimal text with 17 significant digits (round-trips exactly), `.` separator.
std::string format_double(double value);
double parse_double(std::string_view text);

} // namespace esb
