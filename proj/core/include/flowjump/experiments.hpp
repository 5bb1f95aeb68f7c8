#pragma once

#include <filesystem>

#include "flowjump/config.hpp"
#include "flowjump/manifest.hpp"

namespace flowjump {

/// Validates the config, runs the named experiment, and writes into
/// `output_dir`: config.ini (verbatim echo), the experiment CSVs and
/// manifest.txt. A config that fails validation produces a manifest with a
/// failed "validation" check and no CSVs. The manifest is written on every
/// path, including runtime errors.
RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& output_dir);

}  // namespace flowjump
