#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fwtlab/harness/registry.hpp"

namespace fwt {

enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitFailedToRun = 2 };

/// $FWTLAB_OUT, else ./fwtlab-out
std::filesystem::path default_output_dir();

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// "a.b=value" pairs to a nested object; values parse as JSON when they
/// can and as strings otherwise. Throws InvalidInput on a missing '='.
nlohmann::json parse_overrides(const std::vector<std::string>& assignments);

/// One line per experiment: name, topic, description.
int cmd_list(const Registry& reg, std::ostream& out);

/// `target` is an experiment name, "all", or a path to a JSON config
/// {"scheme": ..., "params": {...}, "output_dir": ..., "verbosity": ...}.
/// With "all", override keys start with the experiment name. Writes
/// <scheme>.json, <scheme>.csv, <scheme>.timing.json and, when present,
/// <scheme>.series.csv; "all" adds table.csv and summary.txt.
int cmd_run(const Registry& reg, const std::string& target,
            const std::vector<std::string>& overrides, std::filesystem::path out_dir,
            std::ostream& out, std::ostream& err);

/// Merges every report JSON in `dir` into one table, registry order first.
/// Unreadable files are listed on `err`; a scheme seen twice keeps the most
/// recently written file.
int cmd_report(const Registry& reg, const std::filesystem::path& dir, bool csv,
               std::ostream& out, std::ostream& err);

}  // namespace fwt
