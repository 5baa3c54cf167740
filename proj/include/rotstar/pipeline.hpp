#pragma once

#include <string>
#include <vector>

#include "rotstar/config.hpp"
#include "rotstar/pn_solver.hpp"

namespace rotstar {

const char* library_version();

struct CommandResult {
    std::string report_json;  // also written to <out>/report.json
    std::string summary;      // human-readable, also written to <out>/summary.txt
    bool passed = true;       // false: a verification check failed
};

// Commands: lane-emden, solve, verify, kerr-check, tov-compare, sweep, export.
// Each run writes into `out_dir` (created if needed) a manifest, the report and its artifacts.
CommandResult run_command(const std::string& command, const RunConfig& config, const std::string& out_dir);

const std::vector<std::string>& command_names();

// Writes the potentials, metric and Newtonian fields in the configured formats; returns the file names.
std::vector<std::string> write_solution_fields(const Solution& s, const std::string& dir,
                                               const std::vector<std::string>& formats);

// Diagnostics of a solve as a JSON document.
std::string solution_report(const Solution& s);

}  // namespace rotstar
