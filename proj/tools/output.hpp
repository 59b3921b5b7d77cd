#pragma once

#include <string>
#include <vector>

#include "fpcav/config.hpp"
#include "fpcav/csv.hpp"

namespace fpcav::cli {

inline constexpr const char* kToolName = "fpcav";
inline constexpr const char* kToolVersion = FPCAV_VERSION;

// Table pre-filled with tool, version, command, config hash and seed.
CsvTable make_table(const std::string& command, const RunConfig& cfg, std::vector<std::string> columns,
                    std::vector<std::string> units);

void add_row(CsvTable& table, const std::vector<double>& values);

// Writes text to `path` through a sibling temporary file and a rename, so a failed run never
// leaves a partial artifact behind. "-" writes to stdout.
void write_output(const std::string& path, const std::string& text);

}  // namespace fpcav::cli
