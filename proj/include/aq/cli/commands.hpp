#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "aq/fed/federation.hpp"

namespace aq::cli {

/** One forecast.csv row. */
struct ForecastRow {
    std::string station;
    int horizon = 0;  // steps ahead, 1-based
    double observed = 0.0;
    double predicted = 0.0;
};

/**
 * Report artifacts for one run directory: report.json carries the run id,
 * the resolved config, and all metrics; rounds.csv and forecast.csv are the
 * flat views. Wall-clock timings go to timings.json, kept out of
 * report.json so identical seeds produce byte-identical reports.
 */
struct Report {
    nlohmann::json body;  // run_id, seed, config, metrics
    std::vector<fed::RoundEntry> rounds;
    std::vector<ForecastRow> forecasts;
    nlohmann::json timings;
};

void write_report(const Report& report, const std::string& dir);

// Entry point behind the binary: parses argv, dispatches the subcommand.
// Returns 0 on success, 2 on usage errors, 1 on runtime failures.
int parse_and_dispatch(const std::vector<std::string>& args);

}  // namespace aq::cli
