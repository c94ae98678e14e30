#pragma once

#include <string>

#include "latentmos/training.hpp"

namespace lmos {

/// Plain-text `key = value` run configuration. Lines starting with '#' and
/// blank lines are skipped; inline comments after '#' are stripped. Keys
/// mirror ExperimentConfig field names; unknown or duplicate keys are
/// rejected. Subinterval lists are comma separated ("2,5"). `origin` names
/// the source in error messages (path:line).
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/// parse_config_text over a file, then environment overrides.
ExperimentConfig load_config(const std::string& path);

/// Applies LMOS_<UPPER_KEY> environment variables (e.g. LMOS_LEARNING_RATE)
/// over the given config, then revalidates. Only known keys are consulted.
void apply_env_overrides(ExperimentConfig& cfg);

/// The key = value text for the default configuration, suitable as a
/// starting config file.
std::string default_config_text();

}  // namespace lmos
